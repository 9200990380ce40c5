// Subcommand orchestration: configuration to model objects, runs, manifests and CSVs.
#pragma once

#include "dnlsnf/birkhoff.hpp"
#include "dnlsnf/config.hpp"
#include "dnlsnf/dnls.hpp"
#include "dnlsnf/kam.hpp"
#include "dnlsnf/measure.hpp"
#include "dnlsnf/transform.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dnlsnf {

enum ExitCode : int { kExitOk = 0, kExitSchema = 2, kExitMath = 3, kExitResonance = 4 };

DnlsConfig dnls_config(const RunConfig& c);
KamSchedule kam_schedule(const RunConfig& c);
KamOptions kam_options(const RunConfig& c);
DioParams dio_params(const RunConfig& c);
BirkhoffConfig birkhoff_config(const RunConfig& c);
MeasureConfig measure_config(const RunConfig& c);
std::vector<double> measure_etas(const RunConfig& c);

// Model, KAM iteration and (optionally) the Birkhoff steps, plus the composed coordinate change.
struct Pipeline {
  DnlsConfig dcfg;
  DnlsModel model;
  KamRun kam;
  std::optional<BirkhoffRun> birkhoff;
  std::shared_ptr<TransformChain> chain;
};
Pipeline build_pipeline(const RunConfig& c, bool with_birkhoff);

struct RunRequest {
  std::string subcommand;
  std::string config_path;  // empty: defaults
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

const std::vector<std::string>& subcommands();

// Runs one subcommand, writes out_dir/manifest.json and the CSVs, returns the exit status.
int run(const RunRequest& req, std::ostream& log);

}  // namespace dnlsnf
