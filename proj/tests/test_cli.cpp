#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "hgd/cli.hpp"
#include "hgd/oracle.hpp"

using namespace hgd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
  json j() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "hgd");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("hgd_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_csv(const fs::path &dir, const std::vector<double> &x) {
  const fs::path f = dir / "x.csv";
  std::ofstream o(f);
  o.precision(17);
  for (double v : x)
    o << v << "\n";
  return f;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("normconst on the univariate supports", "[cli]") {
  const Run h = run({"normconst", "--mode", "halfline", "--theta", "0,-1", "--order", "2"});
  REQUIRE(h.code == kExitOk);
  CHECK_THAT(h.j()["A"].get<double>(), WithinRel(0.8862269, 1e-7));
  CHECK_THAT(h.j()["derivs"][1].get<double>(), WithinRel(0.5, 1e-10));

  const Run r = run({"normconst", "--mode", "realline", "--theta", "1,-1"});
  REQUIRE(r.code == kExitOk);
  CHECK_THAT(r.j()["A"].get<double>(),
             WithinRel(std::sqrt(std::numbers::pi) * std::exp(0.25), 1e-9));

  const Run v = run({"normconst", "--theta", "-1,3,-2", "--verify"});
  REQUIRE(v.code == kExitOk);
  CHECK(v.j()["oracle"]["rel_diff"].get<double>() < 1e-6);
}

TEST_CASE("normconst bivariate from a theta file", "[cli]") {
  const fs::path dir = scratch("bi");
  std::ofstream(dir / "t.json")
      << R"({"d": 2, "coeffs": {"10": 0, "01": 0, "20": -1, "11": -1, "02": -1}})";
  const Run b = run({"normconst", "--mode", "bivariate", "--d", "2", "--theta-file",
                     (dir / "t.json").string(), "--verify"});
  REQUIRE(b.code == kExitOk);
  CHECK(b.j()["oracle"]["rel_diff"].get<double>() <= 1e-5);
}

TEST_CASE("input errors exit with code 2", "[cli]") {
  const Run pos = run({"normconst", "--theta", "1"});
  CHECK(pos.code == kExitInput);
  CHECK(pos.err.find("theta_1") != std::string::npos);

  const fs::path dir = scratch("empty");
  std::ofstream(dir / "e.csv").close();
  const Run e = run({"fit", "--input", (dir / "e.csv").string(), "--d", "2"});
  CHECK(e.code == kExitInput);
  CHECK(e.err.find("EmptySample") != std::string::npos);

  CHECK(run({"normconst", "--mode", "sideways", "--theta", "-1"}).code == kExitInput);
  CHECK(run({"nosuchcommand"}).code == kExitInput);
}

TEST_CASE("fit from CSV", "[cli]") {
  const fs::path dir = scratch("fit");
  const Run one = run({"fit", "--input", write_csv(dir, {1.0, 2.0, 3.0}).string(), "--d", "1"});
  REQUIRE(one.code == kExitOk);
  CHECK_THAT(one.j()["theta_hat"][0].get<double>(), WithinRel(-0.5, 1e-12));

  const std::vector<double> x = sample_uni(ThetaUni{-1.0, 3.0, -2.0}, 1000, 99);
  const Run three = run({"fit", "--input", write_csv(dir, x).string(), "--d", "3"});
  REQUIRE(three.code == kExitOk);
  const json j = three.j();
  const double star[] = {-1.0, 3.0, -2.0};
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(j["theta_hat"][k].get<double>() - star[k]) <
          3.0 * j["standard_errors"][k].get<double>());
  CHECK(j["converged"].get<bool>());
}

TEST_CASE("order selection", "[cli]") {
  const fs::path dir = scratch("order");
  const fs::path f = write_csv(dir, sample_uni(ThetaUni{-1.0}, 2000, 5));
  const Run one = run({"order", "--input", f.string(), "--dmax", "1"});
  REQUIRE(one.code == kExitOk);
  CHECK(one.j()["order"] == 1);
  CHECK(one.j()["trail"].empty());

  const Run ex = run({"order", "--input", f.string(), "--alpha", "0.05", "--dmax", "4"});
  REQUIRE(ex.code == kExitOk);
  CHECK(ex.j()["order"] == 1);
}

TEST_CASE("simulate writes deterministic output", "[cli]") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const std::vector<std::string> base{"simulate", "--theta", "-1,3,-2", "--n", "300",
                                      "--reps", "6", "--seed", "17", "--threads", "2"};
  auto with = [&](const fs::path &p) {
    auto v = base;
    v.push_back("--out");
    v.push_back(p.string());
    return v;
  };
  const Run ra = run(with(a));
  const Run rb = run(with(b));
  REQUIRE(ra.code == kExitOk);
  REQUIRE(rb.code == kExitOk);
  CHECK(slurp(a / "replications.csv") == slurp(b / "replications.csv"));
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  CHECK(ra.j()["columns"].size() == 3);

  const Run single = run({"simulate", "--theta", "-1,3,-2", "--n", "200", "--reps", "1"});
  REQUIRE(single.code == kExitOk);
  CHECK_FALSE(single.j()["columns"][0]["ks_defined"].get<bool>());
}

TEST_CASE("chambers", "[cli]") {
  const Run p = run({"chambers", "--d", "3", "--point", "0,0", "--point", "-0.5,2.5"});
  REQUIRE(p.code == kExitOk);
  const json j = p.j();
  CHECK(j["points"][0]["chamber"] == "B");
  CHECK(j["points"][0]["proper"] == true);
  CHECK(j["points"][1]["chamber"] == "A");
  CHECK(j["points"][1]["proper"] == false);

  const fs::path dir = scratch("grid");
  const Run g = run({"chambers", "--grid=-6,6,0.1", "--out", dir.string()});
  REQUIRE(g.code == kExitOk);
  CHECK(g.j()["grid"]["sign_change_curves"] == 2);
  CHECK(fs::exists(dir / "chambers.csv"));
}

TEST_CASE("verify subcommand", "[cli]") {
  const Run d = run({"verify", "--suite", "detp", "--d", "4"});
  REQUIRE(d.code == kExitOk);
  CHECK(d.j()["suites"][0]["max_residual"].get<double>() <= 1e-9);

  const Run o = run({"verify", "--suite", "oracle", "--d", "6"});
  REQUIRE(o.code == kExitOk);
  CHECK(o.j()["suites"][0]["max_residual"].get<double>() <= 1e-6);
}

TEST_CASE("installed executable honours the exit-code contract", "[cli]") {
  const char *exe = std::getenv("HGD_CLI");
  if (!exe)
    SKIP("HGD_CLI not set");
  auto status = [&](const std::string &args) {
    const std::string cmd = std::string(exe) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  CHECK(status("normconst --theta 0,-1") == 0);
  CHECK(status("verify --suite domain") == 0);
  CHECK(status("normconst --theta 0,1") == 2);
  CHECK(status("fit --input /nonexistent/file.csv") == 2);
}
