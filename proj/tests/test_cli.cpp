#include <initializer_list>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fbrd/config.hpp"
#include "fbrd/csv.hpp"
#include "fbrd/errors.hpp"
#include "fbrd/run.hpp"
#include "json.hpp"

using namespace fbrd;
namespace fs = std::filesystem;

namespace {

fs::path tmp_path(const std::string& name) {
  return fs::temp_directory_path() / ("fbrd_test_" + name);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int shell(const std::string& cmd) {
  const int st = std::system(cmd.c_str());
  REQUIRE(st != -1);
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("seventeen significant digits round-trip exactly") {
  for (double v : {3.141592653589793, 1e-300, 12345.678901234567, 0.1, 0.0,
                   -2.2250738585072014e-308, 6.02214076e23}) {
    const std::string s = io::format_sig17(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("csv round-trip preserves every field") {
  io::Row a;
  a.n = 16;
  a.d = 0.3;
  a.epsilon = 0.1;
  a.theta = 0.2999999999999999;
  a.rate_nats = 0.7837665608036276;
  a.rate_bits = a.rate_nats / 0.6931471805599453;
  a.dispersion_nats2 = 0.5;
  a.bound_kind = "approx";
  a.log_M_nats = 12.54026497285804;
  a.mc_stderr = 1.25e-3;
  a.seed = 42;
  a.status = "ok";
  io::Row b;
  b.bound_kind = "waterfill";
  b.status = "error: infeasible distortion";

  const std::string text = io::to_csv({a, b});
  CHECK(text.rfind(io::kCsvHeader, 0) == 0);
  CHECK(std::string(io::kCsvHeader) ==
        "n,d,epsilon,theta,rate_nats,rate_bits,dispersion_nats2,bound_kind,"
        "log_M_nats,mc_stderr,seed,wall_ms,status");

  const auto rows = io::parse_csv(text);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n == a.n);
  CHECK(rows[0].d == a.d);
  CHECK(rows[0].epsilon == a.epsilon);
  CHECK(rows[0].theta == a.theta);
  CHECK(rows[0].rate_nats == a.rate_nats);
  CHECK(rows[0].rate_bits == a.rate_bits);
  CHECK(rows[0].dispersion_nats2 == a.dispersion_nats2);
  CHECK(rows[0].bound_kind == a.bound_kind);
  CHECK(rows[0].log_M_nats == a.log_M_nats);
  CHECK(rows[0].mc_stderr == a.mc_stderr);
  CHECK(rows[0].seed == a.seed);
  CHECK(rows[0].status == a.status);
  CHECK(rows[1].bound_kind == "waterfill");
  CHECK(rows[1].status == b.status);

  CHECK_THROWS_AS(io::parse_csv("not,a,header\n1,2,3\n"), DomainError);
  CHECK_THROWS_AS(
      io::parse_csv(std::string(io::kCsvHeader) + "\n1,2,3\n"), DomainError);
}

TEST_CASE("json config parsing: defaults, unknown keys, range checks") {
  const auto cfg = io::RunConfig::from_json_text(R"({
    "source": {"kind": "gauss_markov", "a": 0.5},
    "task": {"subcommand": "limit", "d": 0.25}
  })");
  CHECK(cfg.source.a == 0.5);
  CHECK(cfg.source.sigma2 == 1.0);
  CHECK(cfg.task.subcommand == "limit");
  CHECK(cfg.output.format == "csv");
  CHECK_NOTHROW(cfg.validate());

  try {
    io::RunConfig::from_json_text(
        R"({"source": {"kind": "gauss_markov"}, "task": {}, "bogus": 1})");
    FAIL("unknown key accepted");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(io::RunConfig::from_json_text("{nope"), DomainError);

  auto bad = cfg;
  bad.task.subcommand = "approx";
  bad.task.n = 8;
  bad.task.epsilon = 1.5;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("run(): water-filling rows land in the output file") {
  const auto out = tmp_path("waterfill.csv");
  auto cfg = io::RunConfig::from_json_text(R"({
    "source": {"kind": "explicit", "variances": [4.0, 1.0, 1.0]},
    "task": {"subcommand": "waterfill", "n": 3, "d": 1.0}
  })");
  cfg.output.path = out.string();
  REQUIRE(io::run(cfg) == 0);

  const auto rows = io::parse_csv(read_text(out));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n == 3);
  CHECK(rows[0].theta == 1.0);  // water level snaps onto the distortion
  CHECK(rows[0].rate_nats == doctest::Approx(0.23104906018664844).epsilon(1e-13));
  CHECK(rows[0].rate_bits == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(rows[0].dispersion_nats2 == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(rows[0].bound_kind == "waterfill");
  CHECK(rows[0].status == "ok");
}

TEST_CASE("run(): normal approximation matches the frozen reference point") {
  const auto out = tmp_path("approx.csv");
  auto cfg = io::RunConfig::from_json_text(R"({
    "source": {"kind": "gauss_markov", "a": 0.0},
    "task": {"subcommand": "approx", "n": 100, "d": 0.25, "epsilon": 0.1}
  })");
  cfg.output.path = out.string();
  REQUIRE(io::run(cfg) == 0);
  auto rows = io::parse_csv(read_text(out));
  REQUIRE(rows.size() == 1);
  CHECK(std::fabs(rows[0].rate_nats - 0.7837665608036276) <= 1e-13);
  CHECK(std::fabs(rows[0].log_M_nats - 78.37665608036276) <= 1e-11);

  // At epsilon = 1/2 the dispersion term vanishes: the rate is ln 2 exactly.
  cfg.task.epsilon = 0.5;
  REQUIRE(io::run(cfg) == 0);
  rows = io::parse_csv(read_text(out));
  CHECK(std::fabs(rows[0].rate_nats - 0.6931471805599453) <= 1e-13);
}

TEST_CASE("run(): mid-grid failure keeps finished rows plus a sentinel") {
  const auto out = tmp_path("grid.csv");
  auto cfg = io::RunConfig::from_json_text(R"({
    "source": {"kind": "explicit", "variances": [1.0, 1.0]},
    "task": {"subcommand": "waterfill", "n": 2, "d_grid": [0.2, 0.5, 5.0]}
  })");
  cfg.output.path = out.string();
  CHECK(io::run(cfg) == 3);

  const auto rows = io::parse_csv(read_text(out));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].status == "ok");
  CHECK(rows[0].d == 0.2);
  CHECK(rows[1].status == "ok");
  CHECK(rows[1].d == 0.5);
  CHECK(rows[2].status.rfind("error:", 0) == 0);
}

TEST_CASE("run(): validation failure writes nothing and returns 2") {
  const auto out = tmp_path("never_written.csv");
  std::error_code ec;
  fs::remove(out, ec);
  auto cfg = io::RunConfig::from_json_text(R"({
    "source": {"kind": "gauss_markov"},
    "task": {"subcommand": "approx", "n": 8, "d": 0.25, "epsilon": 1.5}
  })");
  cfg.output.path = out.string();
  CHECK(io::run(cfg) == 2);
  CHECK(!fs::exists(out));
}

TEST_CASE("run(): json output carries config, rows and summary") {
  const auto out = tmp_path("report.json");
  auto cfg = io::RunConfig::from_json_text(R"({
    "source": {"kind": "gauss_markov", "a": 0.5},
    "task": {"subcommand": "converse", "n": 8, "d": 0.4, "epsilon": 0.2},
    "output": {"format": "json"}
  })");
  cfg.output.path = out.string();
  REQUIRE(io::run(cfg) == 0);

  const auto root = nlohmann::json::parse(read_text(out));
  REQUIRE(root.contains("config"));
  REQUIRE(root.contains("rows"));
  REQUIRE(root.contains("summary"));
  REQUIRE(root["rows"].size() == 1);
  CHECK(root["rows"][0]["bound_kind"] == "converse");
  CHECK(root["rows"][0]["status"] == "ok");
  CHECK(root["config"]["task"]["subcommand"] == "converse");
  CHECK(root["summary"].contains("converse"));
}

TEST_CASE("run(): fixed seed gives byte-identical files across thread counts") {
  auto cfg = io::RunConfig::from_json_text(R"({
    "source": {"kind": "gauss_markov", "a": 0.0},
    "task": {"subcommand": "achievability", "n": 8, "d": 0.25,
             "epsilon": 0.3, "samples": 10000, "seed": 7, "threads": 1}
  })");
  const auto out1 = tmp_path("det1.csv");
  const auto out2 = tmp_path("det2.csv");
  cfg.output.path = out1.string();
  REQUIRE(io::run(cfg) == 0);
  cfg.output.path = out2.string();
  cfg.task.threads = 3;
  REQUIRE(io::run(cfg) == 0);
  CHECK(read_text(out1) == read_text(out2));
}

TEST_CASE("command line binary: exit codes and flag handling") {
  const char* bin = std::getenv("FBRD_BIN");
  if (!bin) return;  // only meaningful under the test harness environment
  const std::string exe = std::string("\"") + bin + "\"";

  const auto cfg_ok = tmp_path("cli_ok.json");
  const auto out_ok = tmp_path("cli_ok.csv");
  write_text(cfg_ok, R"({
    "source": {"kind": "explicit", "variances": [4.0, 1.0, 1.0]},
    "task": {"subcommand": "waterfill", "n": 3, "d": 1.0}
  })");
  CHECK(shell(exe + " -c " + cfg_ok.string() + " -o " + out_ok.string() +
              " > /dev/null") == 0);
  const auto rows = io::parse_csv(read_text(out_ok));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].theta == 1.0);

  // Matching positional subcommand is accepted; a conflicting one is not.
  CHECK(shell(exe + " waterfill -c " + cfg_ok.string() + " -o " +
              out_ok.string() + " > /dev/null") == 0);
  CHECK(shell(exe + " approx -c " + cfg_ok.string() + " -o " +
              out_ok.string() + " > /dev/null 2>&1") == 2);

  // Output redirection through the environment.
  const auto out_env = tmp_path("cli_env.csv");
  std::error_code ec;
  fs::remove(out_env, ec);
  CHECK(shell("FBRD_OUTPUT=" + out_env.string() + " " + exe + " -c " +
              cfg_ok.string() + " > /dev/null") == 0);
  CHECK(fs::exists(out_env));

  const auto cfg_bad = tmp_path("cli_bad.json");
  write_text(cfg_bad, R"({
    "source": {"kind": "gauss_markov"},
    "task": {"subcommand": "approx", "n": 8, "d": 0.25, "epsilon": 1.5}
  })");
  CHECK(shell(exe + " -c " + cfg_bad.string() + " > /dev/null 2>&1") == 2);

  const auto cfg_fail = tmp_path("cli_fail.json");
  const auto out_fail = tmp_path("cli_fail.csv");
  write_text(cfg_fail, R"({
    "source": {"kind": "explicit", "variances": [1.0, 1.0]},
    "task": {"subcommand": "waterfill", "n": 2, "d": 5.0}
  })");
  CHECK(shell(exe + " -c " + cfg_fail.string() + " -o " + out_fail.string() +
              " > /dev/null 2>&1") == 3);

  CHECK(shell(exe + " -c /nonexistent/cfg.json > /dev/null 2>&1") == 2);
  CHECK(shell(exe + " > /dev/null 2>&1") == 2);  // missing required -c
}
