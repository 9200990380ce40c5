// Command-line entry point: dnlsnf <subcommand> [--config FILE] [--set section.key=value]...
#include "dnlsnf/csv.hpp"
#include "dnlsnf/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Finite-truncation KAM / Birkhoff normal form experiments for the DNLS lattice"};
  std::string command, config, out = "out";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string choices;
  for (auto& s : dnlsnf::subcommands()) choices += s + ", ";
  app.add_option("command", command, "one of: " + choices + "plotdata (re-emit tidy CSVs of --out)")->required();
  app.add_option("--config", config, "INI configuration file");
  app.add_option("--set", sets, "override, section.key=value (repeatable)");
  app.add_option("--out", out, "run directory");
  app.add_option("--seed", seed, "master seed (overrides output.seed)");
  app.add_option("--jobs", jobs, "worker count (overrides output.jobs)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : dnlsnf::kExitSchema;
  }

  if (command == "plotdata") {
    try {
      for (auto& p : dnlsnf::emit_plotdata(out)) std::cout << "wrote " << p.string() << '\n';
      return 0;
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return dnlsnf::kExitMath;
    }
  }
  dnlsnf::RunRequest req;
  req.subcommand = command;
  req.config_path = config;
  req.overrides = sets;
  req.out_dir = out;
  req.seed = seed;
  req.jobs = jobs;
  return dnlsnf::run(req, std::cout);
}
