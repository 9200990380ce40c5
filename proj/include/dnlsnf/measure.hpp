// Monte-Carlo estimates of the parameter measure removed by the Birkhoff non-resonance
// conditions, and finite-difference derivatives of the post-KAM frequencies.
#pragma once

#include "dnlsnf/dnls.hpp"
#include "dnlsnf/kam.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace dnlsnf {

enum class ThresholdMode {
  Full,     // eta' M_l / (4^M (|k|+1)^tau N^{(|l_acute|+4)^2})
  Reduced,  // eta' M_l / (4^M (|k|+1)^tau)
};
ThresholdMode parse_threshold_mode(const std::string& s);
const char* threshold_mode_name(ThresholdMode m);

struct MeasureConfig {
  std::vector<int> tangent{1, 2};
  int jmax = 12;
  int N_split = 4;
  int M = 2;
  int K = 6;            // |k|_1 bound
  double tau = 2.5;
  double c1 = 1.0, c2 = 2.0;
  double C_star2 = 1.0;  // constant C in j_** = C|k| + (M+2)N/2, logged only
  ThresholdMode mode = ThresholdMode::Reduced;
  std::vector<double> omega_shift;  // added to the tangent frequencies (post-KAM offset)
  std::map<int, double> Omega_shift;
  void validate() const;
};

struct ResonanceQuery {
  IVec k;
  SiteMap l_acute_pos, l_acute_neg;  // |j| <= N
  SiteMap l_hat_pos, l_hat_neg;      // |j| > N
  int M_weight() const;              // max |j| over the support, 1 if empty
  int acute_size() const;
  int hat_size() const;
  bool operator<(const ResonanceQuery& o) const;
  bool operator==(const ResonanceQuery& o) const;
};

// Threshold per unit eta'.
double query_threshold_unit(const ResonanceQuery& q, const MeasureConfig& cfg);

// Range of the divisor <k,omega> + <l,Omega> over the parameter box [1,2]/|j|.
std::pair<double, double> divisor_range(const ResonanceQuery& q, const MeasureConfig& cfg);
double divisor_at(const ResonanceQuery& q, const MeasureConfig& cfg, const std::map<int, double>& xi);

struct EnumerationInfo {
  double j_star = 0.0, j_star2 = 0.0;  // formula cutoffs at |k| = K
  int max_site = 0;                    // largest hat site reached by the gap bound
  std::size_t candidates = 0;          // before the interval prefilter
};

// Queries that can be resonant for eta' <= eta_max somewhere in the parameter box.
std::vector<ResonanceQuery> enumerate_queries(const MeasureConfig& cfg, double eta_max,
                                              EnumerationInfo* info = nullptr);
// Reference enumeration over a site box |j| <= J_box by exhaustive loops.
std::vector<ResonanceQuery> enumerate_queries_brute(const MeasureConfig& cfg, double eta_max, int J_box);

// Sites whose parameters vary in the Monte-Carlo sampling.
std::vector<int> active_sites(const std::vector<ResonanceQuery>& qs, const MeasureConfig& cfg);

struct MeasurePoint {
  double eta = 0.0;
  double fraction = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  std::size_t samples = 0;
};

struct MeasureReport {
  std::vector<MeasurePoint> points;
  double slope = 0.0;  // least squares of log fraction on log eta'
  bool slope_defined = false;
  std::size_t queries = 0;
  EnumerationInfo info;
  std::vector<int> active;
};

MeasureReport measure_estimate(const MeasureConfig& cfg, const std::vector<double>& etas,
                               std::size_t samples, std::uint64_t seed, int bootstrap = 200);

// True iff some query is below threshold at this parameter point.
bool is_resonant(const std::vector<ResonanceQuery>& qs, const MeasureConfig& cfg,
                 const std::map<int, double>& xi, double eta);

struct FreqDerivRow {
  int a = 0;           // perturbed site
  std::string kind;    // "omega" or "Omega"
  int index = 0;       // tangent slot (omega) or site (Omega)
  double derivative = 0.0;
  double scaled = 0.0;  // |d - delta| |a| / eps (omega) or / (|j| eps) (Omega)
};

struct FreqDerivReport {
  std::vector<FreqDerivRow> rows;
  double fitted_C = 0.0;
  bool pass = false;
  std::string status = "ok";
  std::string message;
};

// run(cfg) returns the post-KAM normal form for a model configuration.
using KamRunner = std::function<NormalForm(const DnlsConfig&)>;
FreqDerivReport frequency_derivative_check(const DnlsConfig& base, const std::vector<int>& sites_a,
                                           const KamRunner& run, double h_rel = 1e-6,
                                           double C_bound = 10.0);

}  // namespace dnlsnf
