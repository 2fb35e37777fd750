#include "homog/config.hpp"
#include "homog/errors.hpp"
#include "homog/experiments.hpp"
#include "homog/report.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

using namespace homog;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("homog_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

config::RunConfig base(const std::string& problem, const fs::path& out) {
  config::RunConfig c;
  c.problem = problem;
  c.out = out.string();
  c.T = 0.3;
  c.replicas = 8;
  return c;
}

// CSV text with the named column blanked, for comparing reruns.
std::string drop_column(const std::string& csv, const std::string& column) {
  std::istringstream in(csv);
  std::string line, out;
  int skip = -1;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (skip < 0)
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i] == column || cells[i] == column + "\r") skip = static_cast<int>(i);
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (static_cast<int>(i) != skip) out += cells[i] + ",";
    out += "\n";
  }
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HOMOG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("TOML configuration") {
    const auto c = config::parse_toml(R"(
problem = "ou"
lambda = 0.8
degrees = [2, 4]
d_ref = 6
x = [0.3]
[integrator]
dt = 0.02
T = 0.5
replicas = 7
seed = 42
[hmm]
p = [2, 3]
[oracle]
cells = 512
box = [-6.0, 6.0]
)");
    CHECK(c.problem == "ou");
    CHECK(*c.lambda == 0.8);
    CHECK(c.degrees == std::vector<int>{2, 4});
    CHECK(*c.d_ref == 6);
    CHECK(c.dt == 0.02);
    CHECK(c.replicas == 7);
    CHECK(c.seed == 42);
    CHECK(c.p_list == std::vector<int>{2, 3});
    CHECK(c.oracle_cells == 512);
    CHECK(c.oracle_box == std::vector<double>{-6.0, 6.0});
    const auto p = config::resolve_problem(c);
    CHECK(p.lambda == 0.8);
    CHECK(p.x0 == std::vector<double>{0.3});
  }

  TEST_CASE("configuration errors") {
    CHECK_THROWS_AS(config::parse_toml("problme = \"ou\""), UsageError);
    CHECK_THROWS_AS(config::parse_toml("[integrator]\nsteps = 3"), UsageError);
    CHECK_THROWS_AS(config::parse_toml("degrees = [4, 8]\nd_ref = 8"), UsageError);
    CHECK_THROWS_AS(config::parse_toml("lambda = -1.0"), UsageError);
    CHECK_THROWS_AS(config::parse_toml("problem = "), UsageError);
    CHECK_THROWS_AS(config::load_file("/nonexistent/config.toml"), UsageError);
    config::RunConfig c;
    c.problem = "no_such_problem";
    CHECK_THROWS_AS(config::resolve_problem(c), UsageError);
    c.problem = "ou";
    c.x = {1.0, 2.0};
    CHECK_THROWS_AS(config::resolve_problem(c), UsageError);
  }

  TEST_CASE("inline problems") {
    const auto c = config::parse_toml(R"(
[inline]
name = "quad"
V = "y0^2/2"
f = ["x0*y0"]
alpha = [["1"]]
)");
    REQUIRE(c.inline_problem);
    const auto p = config::resolve_problem(c);
    CHECK(p.name == "quad");
    CHECK(p.p == 1);
    CHECK_THROWS_AS(config::parse_toml("[inline]\nf = [\"y0\"]"), UsageError);
  }

  TEST_CASE("CSV formatting") {
    CHECK(report::format_double(0.1) == "0.10000000000000001");
    CHECK(report::format_double(1.0) == "1");
    CHECK(std::stod(report::format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(report::escape("plain") == "plain");
    CHECK(report::escape("a,b") == "\"a,b\"");
    CHECK(report::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(report::format_row({std::int64_t{3}, 0.5, std::monostate{}, std::string("x")}) == "3,0.5,,x\r\n");
  }

  TEST_CASE("git blob hashes") {
    CHECK(report::git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(report::git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  }

  TEST_CASE("convergence: Ornstein-Uhlenbeck is exact at every degree") {
    const fs::path dir = scratch("conv_ou");
    auto c = base("ou", dir);
    c.degrees = {2, 4};
    const auto res = experiments::run_convergence(c);
    REQUIRE(res.rows.size() == 2);
    for (const auto& r : res.rows) CHECK(r.E <= 1e-10);

    // Sidecar records the hash of the CSV it describes.
    const auto meta = nlohmann::json::parse(report::read_file(res.csv_path + ".json"));
    CHECK(meta["csv_sha1"] == report::git_blob_sha1(report::read_file(res.csv_path)));
    CHECK(meta["config"]["problem"] == "ou");
    CHECK(report::read_file(res.csv_path).rfind("d,E,wall_seconds\r\n", 0) == 0);

    c.degrees = {};
    CHECK_THROWS_AS(experiments::run_convergence(c), UsageError);
    c.degrees = {12};
    CHECK_THROWS_AS(experiments::run_convergence(c), UsageError);
  }

  TEST_CASE("convergence: bistable error decreases") {
    auto c = base("bistable", scratch("conv_bistable"));
    c.degrees = {8, 16, 24};
    const auto res = experiments::run_convergence(c);
    CHECK(res.rows[1].E < res.rows[0].E);
    CHECK(res.rows[2].E < res.rows[1].E);
  }

  TEST_CASE("pointwise") {
    auto c = base("ou", scratch("pointwise"));
    c.x = {0.0};
    c.degrees = {2};
    CHECK_THROWS_AS(experiments::run_pointwise(c), UsageError);
    c = base("bistable", scratch("pointwise"));
    c.degrees = {8, 40};
    c.d_ref = 41;
    c.out.clear();
    const auto res = experiments::run_pointwise(c);
    CHECK(res.csv_path.empty());
    CHECK(res.rows[1].e < res.rows[0].e);
    c.degrees = {8};
    c.d_ref = 8;
    CHECK_THROWS_AS(experiments::run_pointwise(c), UsageError);
  }

  TEST_CASE("oracle check") {
    auto c = base("ou", scratch("oracle"));
    c.degrees = {2};
    c.x = {0.9};
    const auto res = experiments::run_oracle_check(c);
    CHECK(res.rows[0].weighted_l2_error <= 1e-8);
    CHECK(res.rows[0].coeff_error <= 1e-5);
    CHECK(res.warnings.empty());
    CHECK(res.residual <= 1e-10);
    c.oracle_box = {-2.0, 2.0};
    CHECK_THROWS_AS(experiments::run_oracle_check(c), DomainError);
  }

  TEST_CASE("HMM comparison: single p and reruns") {
    const fs::path dir = scratch("hmm");
    auto c = base("ou", dir);
    c.T = 0.05;
    c.p_list = {3};
    const auto one = experiments::run_hmm_compare(c);
    CHECK(!one.slope);
    CHECK(one.states == 5);
    const std::string csv = report::read_file(one.csv_path);
    CHECK(csv.find("3,") == csv.find("\r\n") + 2);
    CHECK(csv.find(",,") != std::string::npos);

    c.p_list = {2, 3};
    const auto a = experiments::run_hmm_compare(c);
    const std::string first = report::read_file(a.csv_path);
    const auto b = experiments::run_hmm_compare(c);
    CHECK(b.slope);
    CHECK(drop_column(first, "wall_seconds") == drop_column(report::read_file(b.csv_path), "wall_seconds"));
  }

  TEST_CASE("homogenize and simulate") {
    auto c = base("ou", scratch("sim"));
    c.degrees = {2, 3};
    c.x = {0.9};
    const auto coeffs = experiments::run_homogenize(c);
    REQUIRE(coeffs.size() == 2);
    CHECK(coeffs[0].F(0) == doctest::Approx(std::sin(0.9) * std::cos(0.9)).epsilon(1e-12));
    const std::string path = experiments::run_simulate(c);
    CHECK(fs::exists(path));
    CHECK(fs::exists(path + ".json"));
  }

  TEST_CASE("hooks observe every coefficient evaluation") {
    auto c = base("ou", fs::path());
    c.out.clear();
    c.degrees = {2};
    c.d_ref = 3;
    c.replicas = 2;
    c.T = 0.1;
    std::size_t calls = 0;
    experiments::Hooks hooks;
    hooks.on_coefficients = [&](const coeffs::EffectiveCoefficients&) {
#pragma omp atomic
      ++calls;
    };
    experiments::run_convergence(c, hooks);
    // Two ensembles of two replicas over ten steps.
    CHECK(calls == 2 * 2 * 10);
  }

  TEST_CASE("command-line exit codes") {
    CHECK(run_cli("list-problems") == 0);
    CHECK(run_cli("homogenize --problem no_such_problem") == 2);
    CHECK(run_cli("homogenize --problem ou --lambda -1") == 2);
    CHECK(run_cli("convergence --problem ou -d 4 --dref 4") == 2);
    CHECK(run_cli("bogus-subcommand") != 0);
    const fs::path dir = scratch("exit");
    CHECK(run_cli("homogenize --problem ou -d 2 --out " + dir.string()) == 0);
  }
}
