#include <iostream>

#include "hgd/cli.hpp"

int main(int argc, char **argv) { return hgd::run_cli(argc, argv, std::cout, std::cerr); }
