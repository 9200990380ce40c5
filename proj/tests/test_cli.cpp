#include "doctest.h"

#include "dnlsnf/csv.hpp"

#include "json.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace dnlsnf;
namespace fs = std::filesystem;

namespace {

const std::string kSmall =
    " --set modes.jmax=6 --set dnls.K=6 --set kam.K_glob=6 --set kam.steps=2"
    " --set dnls.horizon=0.5 --set dnls.samples_per_direction=3";

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dnlsnf_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

int cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(DNLSNF_CLI) + " " + args + " > " + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

}  // namespace

TEST_CASE("selftest passes with the default configuration") {
  fs::path d = scratch("selftest");
  fs::path cfg = scratch("empty.ini");
  std::ofstream(cfg) << "";
  CHECK(cli("selftest --config " + cfg.string() + " --out " + d.string(), d.string() + ".log") == 0);
  auto m = manifest(d);
  CHECK(m["status"] == "ok");
  Table t = read_csv(d / "selftest.csv");
  CHECK(t.rows.size() > 5);
  for (auto& r : t.rows) CHECK(r[t.column("pass")] == "1");
}

TEST_CASE("schema problems exit with the schema code") {
  fs::path d = scratch("schema");
  CHECK(cli("kam --set kam.no_such_key=1 --out " + d.string(), d.string() + ".log") == 2);
  CHECK(slurp(d.string() + ".log").find("unknown configuration key") != std::string::npos);
  CHECK(cli("kam --set kam.steps=x --out " + d.string(), d.string() + ".log") == 2);
  CHECK(cli("nonsense --out " + d.string(), d.string() + ".log") == 2);
  CHECK(cli("kam --config /nonexistent.ini --out " + d.string(), d.string() + ".log") == 2);
  CHECK(cli("kam --bogus-flag", d.string() + ".log") == 2);
}

TEST_CASE("linear lattice is reported stable") {
  fs::path d = scratch("linear");
  REQUIRE(cli("stability --set dnls.eps=0 --set dnls.horizon=1 --set dnls.samples_per_direction=3 --out " +
                  d.string(),
              d.string() + ".log") == 0);
  Table s = read_csv(d / "stability_summary.csv");
  REQUIRE(s.rows.size() == 2);
  for (auto& r : s.rows) {
    CHECK(r[s.column("verdict")] == "stable (linear)");
    CHECK(r[s.column("pass")] == "1");
  }
  Table tidy = read_csv(d / "tidy_stability.csv");
  CHECK(tidy.header == std::vector<std::string>{"delta", "t", "observable", "value"});
}

TEST_CASE("kam run writes the decay trace") {
  fs::path d = scratch("kam");
  REQUIRE(cli("kam" + kSmall + " --out " + d.string(), d.string() + ".log") == 0);
  Table t = read_csv(d / "kam_steps.csv");
  REQUIRE_FALSE(t.rows.empty());
  std::size_t c = t.column("superlinear");
  for (auto& r : t.rows) CHECK(r[c] == "1");
  Table tidy = read_csv(d / "tidy_kam.csv");
  CHECK(tidy.header == std::vector<std::string>{"step", "variable", "value"});
}

TEST_CASE("measure output and re-emission") {
  fs::path d = scratch("measure");
  REQUIRE(cli("measure --set measure.samples=2000 --set measure.bootstrap=20 --set measure.K=3 --out " + d.string(),
              d.string() + ".log") == 0);
  Table t = read_csv(d / "tidy_measure.csv");
  CHECK(t.header == std::vector<std::string>{"eta_acute", "fraction", "ci_lo", "ci_hi", "n_samples"});
  CHECK(t.rows.size() == 5);
  std::string before = slurp(d / "tidy_measure.csv");
  fs::remove(d / "tidy_measure.csv");
  REQUIRE(cli("plotdata --out " + d.string(), d.string() + ".log") == 0);
  CHECK(slurp(d / "tidy_measure.csv") == before);
  fs::path missing = scratch("missing");
  fs::create_directories(missing);
  CHECK(cli("plotdata --out " + missing.string(), missing.string() + ".log") != 0);
}

TEST_CASE("worker count does not change the results") {
  fs::path a = scratch("jobs1"), b = scratch("jobs2");
  REQUIRE(cli("stability" + kSmall + " --jobs 1 --out " + a.string(), a.string() + ".log") == 0);
  REQUIRE(cli("stability" + kSmall + " --jobs 2 --out " + b.string(), b.string() + ".log") == 0);
  for (const char* f : {"stability.csv", "stability_summary.csv", "tidy_stability.csv"})
    CHECK(slurp(a / f) == slurp(b / f));
  auto ma = manifest(a), mb = manifest(b);
  CHECK(ma["summary"] == mb["summary"]);
}

TEST_CASE("seed changes the sampled data") {
  fs::path a = scratch("seed1"), b = scratch("seed2");
  const std::string s = " --set dnls.eps=0 --set dnls.horizon=1 --set dnls.samples_per_direction=3";
  REQUIRE(cli("stability" + s + " --seed 1 --out " + a.string(), a.string() + ".log") == 0);
  REQUIRE(cli("stability" + s + " --seed 2 --out " + b.string(), b.string() + ".log") == 0);
  CHECK(slurp(a / "stability.csv") != slurp(b / "stability.csv"));
  CHECK(manifest(b)["seed"] == 2);
}
