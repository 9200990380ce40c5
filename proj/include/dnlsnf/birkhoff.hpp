// Partial normal form of order M+2 around the KAM torus and the removal of x-dependence.
#pragma once

#include "dnlsnf/normal_form.hpp"
#include "dnlsnf/solvers.hpp"
#include "dnlsnf/symplectic.hpp"

#include <map>
#include <string>
#include <vector>

namespace dnlsnf {

struct BirkhoffConfig {
  int M = 2;
  int N_split = 4;
  double rho = 0.1;
  double eta_acute = 0.1;
  double tau = 2.5;
  double c1 = 0.0, c2 = 0.0;  // 0: measured from the frequency table
  double C0 = 0.0;            // 0: 40 (tau + n) + 1
  double N0 = 1.0;
  double rho0 = 0.0;          // exposed knob, no default claimed; 0 disables the check
  double varrho() const { return double(M) / (double(N_split) * N_split); }
  void validate(int n, int jmax) const;
};

// Split of a normal multi-index into |j| <= N (acute) and |j| > N (hat) parts.
int hat_count(const SiteMap& m, int N);

enum class TermClass { Z, R, Q, T };
const char* class_name(TermClass c);
TermClass classify_term(const TermIndex& t, const BirkhoffConfig& cfg);

struct Classified {
  HamSeries Z, R, Q, T;
};
Classified classify_terms(const HamSeries& P, const BirkhoffConfig& cfg);

// Resonance threshold eta' M_{l} / (4^M (|k|+1)^tau C(N, l_acute)), C(N,l) = N^{(|l_acute|+4)^2}.
double resonance_threshold(double eta_acute, int M, int N, int k_l1, const SiteMap& l_pos,
                           const SiteMap& l_neg, double tau);

struct BirkhoffRow {
  int step = 0;
  std::string cls;
  double norm_before = 0.0, norm_after = 0.0;
  double min_divisor = 0.0;
  std::string branch;
};

struct BirkhoffSolve {
  Pattern pattern;
  std::string dispatch;  // subcase1 | subcase2 | case3 | case4
  bool dispatch_sound = true;
  SolverReport report;
};

struct BirkhoffStepResult {
  HamSeries F, Zhat, That, P_next;
  std::vector<BirkhoffSolve> solves;
  std::vector<BirkhoffRow> rows;
  double min_divisor = std::numeric_limits<double>::infinity();
  double eliminated_max = 0.0;  // largest remaining R coefficient of the target degree
  int K_used = 0;
};

struct BirkhoffDerived {
  double c1 = 0, c2 = 0, C0 = 0;
  double subcase_threshold = 0;  // 8 c2 (M+2) N^2 / c1
  int K_raw = 0;
  bool window_ok = true;
  std::string window_note;
};
BirkhoffDerived birkhoff_derived(const NormalForm& nf, const BirkhoffConfig& cfg, int K_series);

BirkhoffStepResult birkhoff_step(const NormalForm& nf, const HamSeries& P, int j0,
                                 const BirkhoffConfig& cfg, const DioParams& dio);

struct BirkhoffRun {
  HamSeries P;  // Z + Q + T after the steps (R emptied)
  Classified parts;
  std::vector<HamSeries> generators;
  std::vector<BirkhoffRow> rows;
  std::vector<BirkhoffSolve> solves;
  BirkhoffDerived derived;
  double initial_scale = 0.0;
  double max_R_rel = 0.0;  // largest R coefficient / initial scale after the run
  double vf_T_p2 = 0.0, vf_T_pm1 = 0.0, vf_Q_p2 = 0.0, vf_Q_pm1 = 0.0;
  std::string status = "ok";
  std::string message;
};
BirkhoffRun run_birkhoff(const NormalForm& nf, const HamSeries& P, const BirkhoffConfig& cfg,
                         const DioParams& dio, double p = 2.0);

// After the partial normal form: H = omega.y + h(x,y) + sum_beta B^beta(x,y) w^beta + Q + T
// with w_j = |z_j|^2 - |z0_j|^2. The rounds make the y-coefficients of h x-independent.
struct XRemoval {
  HamSeries h;                         // (x,y)-only, includes omega.y
  std::map<SiteMap, HamSeries> B;      // keyed by the w-exponent
  HamSeries Q, T;
  std::vector<HamSeries> generators;   // (x,y) generators, application order
  int rounds_a = 0, rounds_b = 0;
  int budget_a = 0;                    // nominal ceil(log2 M)
  int K_used = 0;
  double max_rel_xdep = 0.0;           // over |alpha| <= M+2
  std::map<int, double> rel_xdep_by_degree;  // |alpha| -> sup |h_alpha - mean| / |mean|
  double initial_rel_xdep = 0.0;
  std::vector<double> B_norms;
  double B_fit_C = 0.0;                // max ||B^beta|| / delta^2
  std::string status = "ok";
  std::string message;
};
XRemoval remove_x_dependence(const NormalForm& nf, const HamSeries& P, const BirkhoffConfig& cfg,
                             const DioParams& dio, double delta, const std::vector<cplx>& z0);

// sup over an x-grid of |h_alpha(x) - [h_alpha]| relative to |[h_alpha]| (overall scale if the mean vanishes).
std::map<int, double> x_dependence_by_degree(const HamSeries& h, int max_abs_alpha, int G = 16);

}  // namespace dnlsnf
