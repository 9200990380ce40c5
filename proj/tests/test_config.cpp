#include "doctest.h"

#include "dnlsnf/config.hpp"
#include "dnlsnf/csv.hpp"
#include "dnlsnf/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dnlsnf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dnlsnf_test_config_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("every schema key has a valid default") {
  RunConfig c;
  CHECK(c.values().size() == config_schema().size());
  for (const auto& k : config_schema()) CHECK_NOTHROW(RunConfig().set(k.full(), k.default_value));
  CHECK(c.get_ints("modes.tangent") == std::vector<int>{1, 2});
  CHECK(c.get_int("modes.jmax") == 12);
  CHECK(c.get_real("dnls.eps") == 1e-3);
  CHECK(c.get_bool("output.tidy"));
  CHECK(c.get_string("measure.mode") == "reduced");
  CHECK(c.get_ints("measure.fd_sites").empty());
}

TEST_CASE("INI text is parsed into typed values") {
  RunConfig c = RunConfig::from_string(
      "[modes]\n"
      "tangent = 1, 3\n"
      "zeta = 1.2,1.9\n"
      "xi = 1:1.25, 3:0.5\n"
      "[dnls]\n"
      "eps = 2.5e-4\n"
      "[kam]\n"
      "modulo_integers = yes\n");
  CHECK(c.get_ints("modes.tangent") == std::vector<int>{1, 3});
  CHECK(c.get_reals("modes.zeta") == std::vector<double>{1.2, 1.9});
  auto xi = c.get_site_reals("modes.xi");
  CHECK(xi.size() == 2);
  CHECK(xi[1] == 1.25);
  CHECK(xi[3] == 0.5);
  CHECK(c.get_real("dnls.eps") == 2.5e-4);
  CHECK(c.get_bool("kam.modulo_integers"));
  // untouched keys keep their defaults
  CHECK(c.get_int("kam.steps") == 4);
}

TEST_CASE("unknown keys and malformed values are schema errors") {
  CHECK_THROWS_AS(RunConfig::from_string("[kam]\nstepz = 3\n"), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_string("[nosuch]\nsteps = 3\n"), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_string("[kam]\nsteps = three\n"), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_string("[kam]\nsteps = 3.5\n"), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_string("[modes]\ntangent = 1,x\n"), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_string("[modes]\nxi = 1=0.5\n"), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_string("[output]\ntidy = maybe\n"), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_string("[kam\nsteps = 3\n"), SchemaError);
  CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/dnlsnf.ini"), SchemaError);
}

TEST_CASE("overrides replace single keys") {
  RunConfig c;
  c.apply_override("kam.steps=7");
  c.apply_override(" dnls.deltas = 0.01, 0.03 ");
  CHECK(c.get_int("kam.steps") == 7);
  CHECK(c.get_reals("dnls.deltas") == std::vector<double>{0.01, 0.03});
  CHECK_THROWS_AS(c.apply_override("kam.steps"), SchemaError);
  CHECK_THROWS_AS(c.apply_override("kam.nope=1"), SchemaError);
  CHECK_THROWS_AS(c.apply_override("kam.eta=abc"), SchemaError);
  // a failed override leaves the old value
  CHECK(c.get_real("kam.eta") == 0.5);
}

TEST_CASE("configuration maps onto the model objects") {
  RunConfig c;
  c.apply_override("modes.tangent=1,3");
  c.apply_override("modes.zeta=1.1,1.4");
  c.apply_override("modes.xi=3:0.4");
  c.apply_override("dnls.eps=0.002");
  DnlsConfig d = dnls_config(c);
  CHECK(d.tangent == std::vector<int>{1, 3});
  CHECK(d.eps == 0.002);
  CHECK(d.xi(3) == 0.4);
  CHECK(d.xi(1) == 1.5);
  MeasureConfig m = measure_config(c);
  CHECK(m.tangent == d.tangent);
  std::vector<double> e = measure_etas(c);
  REQUIRE(e.size() == 5);
  CHECK(e.front() == doctest::Approx(1e-3));
  CHECK(e.back() == doctest::Approx(1e-2));
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i] / e[i - 1] == doctest::Approx(std::pow(10.0, 0.25)));
}

TEST_CASE("CSV round trip keeps every digit") {
  fs::path dir = scratch("csv");
  Table t({"a", "b", "label"});
  const double third = 1.0 / 3.0;
  t.add({cell(third), cell(-2.5e-17), cell("x")});
  t.add({cell(42), cell(true), cell("y")});
  write_csv(dir / "t.csv", t);
  Table r = read_csv(dir / "t.csv");
  CHECK(r.header == t.header);
  CHECK(r.rows == t.rows);
  CHECK(std::stod(r.rows[0][r.column("a")]) == third);
  CHECK_THROWS(r.column("missing"));
  CHECK(slurp(dir / "t.csv").rfind("a,b,label\n", 0) == 0);
}

TEST_CASE("melt produces one row per measured cell") {
  Table wide({"t", "H", "N"});
  wide.add({"0", "1", "2"});
  wide.add({"1", "3", "4"});
  Table lng = melt(wide, {"t"}, "observable");
  CHECK(lng.header == std::vector<std::string>{"t", "observable", "value"});
  REQUIRE(lng.rows.size() == 4);
  CHECK(lng.rows[0] == std::vector<std::string>{"0", "H", "1"});
  CHECK(lng.rows[3] == std::vector<std::string>{"1", "N", "4"});
  CHECK_THROWS(melt(wide, {"missing"}));
}

TEST_CASE("plot data emission is repeatable") {
  fs::path dir = scratch("plot");
  std::ostringstream log;
  RunRequest req;
  req.subcommand = "measure";
  req.out_dir = dir.string();
  req.overrides = {"measure.samples=1000", "measure.bootstrap=10", "measure.K=3", "measure.points=3"};
  REQUIRE(run(req, log) == kExitOk);
  std::string first = slurp(dir / "tidy_measure.csv");
  CHECK_FALSE(first.empty());
  auto written = emit_plotdata(dir);
  CHECK_FALSE(written.empty());
  CHECK(slurp(dir / "tidy_measure.csv") == first);
  fs::remove(dir / "manifest.json");
  CHECK_THROWS_AS(emit_plotdata(dir), MissingArtifact);
}
