// One KAM step at finite truncation and the iteration driver.
#pragma once

#include "dnlsnf/normal_form.hpp"
#include "dnlsnf/solvers.hpp"
#include "dnlsnf/symplectic.hpp"

#include <string>
#include <vector>

namespace dnlsnf {

struct KamSchedule {
  double eta = 0.5;
  double varepsilon = 1e-3;
  double s0 = 0.5, r0 = 0.5;
  double chi = 0.5;  // 0 < chi <= min(s0, r0)
  int K_glob = 12;

  double eta_m(int m) const;
  double eps_m(int m) const;  // eta^12 varepsilon^{(4/3)^m}
  double tau_m(int m) const;
  double s_m(int m) const;
  double r_m(int m) const;
  double K_m_raw(int m) const;  // |log(1/eps_m) / (r_m - r_{m+1})|
  int K_m(int m) const;         // clamped to K_glob
  bool clamped(int m) const { return K_m_raw(m) > K_glob; }
  void validate() const;
};

struct ComponentSolve {
  Pattern pattern;
  std::string component;  // "x", "1", "y", "2"
  int coeff_class = 0;    // b with coefficient in F(b): sum k_i j_i = -b
  SolverReport report;
};

struct StepResult {
  HamSeries F, Fx, F1, Fy, F2;
  HamSeries Nhat, Phat;
  HamSeries R0, R1, R2;  // right-hand sides per degree, including bracket corrections
  std::vector<ComponentSolve> solves;
  double plow_norm = 0.0;
  double residual = 0.0;      // |||E||| on |k| <= K_used
  double residual_rel = 0.0;  // residual / |||P^low|||
  double min_divisor = std::numeric_limits<double>::infinity();
  IVec min_divisor_k;
  int K_used = 0;
  bool clamped = false;
  double F_reality_defect = 0.0;
};

struct KamOptions {
  DomainSpec domain{};
  DioParams dio{};
  LiePlan lie{};
  double resonance_gamma = 1e-4;  // stage resonance threshold gamma / (1 + |k|)^tau on solved divisors
  double residual_tol = 1e-11;    // large-coefficient solves below this, dense fallback otherwise
};

// {P^high, F}^low split by degree: returns (deg 0, deg 1, deg 2) parts of P^low + {P^high, F}.
struct RhsParts {
  HamSeries R0, R1, R2;
};
RhsParts assemble_homological_rhs(const HamSeries& P_low, const HamSeries& P_high,
                                  const HamSeries& F_partial);
// Same corrections through explicit derivative products (independent of poisson_bracket).
RhsParts assemble_homological_rhs_products(const HamSeries& P_low, const HamSeries& P_high,
                                           const HamSeries& F_partial);

// Coefficient class of a pattern: b = sum_j j (mu_j - gamma_j).
int pattern_class(const Pattern& p);

StepResult kam_solve_step(const NormalForm& nf, const HamSeries& P, int K_m, const KamOptions& opt);

struct ComposeResult {
  NormalForm nf;
  HamSeries P;
  double lie_remainder = 0.0;
  int lie_orders = 0;
  bool gate_ok = true;
};
ComposeResult compose_step(const NormalForm& nf, const HamSeries& P, const StepResult& step,
                           const LiePlan& plan);

struct KamTraceRow {
  int step = 0;
  double plow = 0.0, plow_next = 0.0;
  double log_ratio = 0.0;  // log plow_next / log plow, +inf once plow_next hits zero
  double residual_rel = 0.0;
  double phigh = 0.0;
  double F_norm = 0.0;
  double omega_shift = 0.0;  // max_i |omega_{m+1,i} - omega_{m,i}|
  double min_divisor = 0.0;
  int K_used = 0;
  bool clamped = false;
  double K_raw = 0.0;
  double eps_m = 0.0;
  double lie_remainder = 0.0;
  double torus_residual = 0.0;
  double minus1_norm = 0.0;
  std::vector<double> omega;
};

struct KamRun {
  NormalForm nf;
  HamSeries P;
  std::vector<KamTraceRow> trace;
  std::vector<HamSeries> generators;  // F_0, F_1, ... in application order
  bool converged = false;
  std::string status = "ok";  // ok | diverged | resonance | failure
  std::string message;
  double final_plow = 0.0;
};

KamRun run_kam(const NormalForm& nf0, const HamSeries& P0, const KamSchedule& sched, int steps,
               const KamOptions& opt);

// sup over an angle grid (y = z = 0) of |ydot| + sum |zdot_j| for N + P.
double torus_residual(const NormalForm& nf, const HamSeries& P, int G = 16);

}  // namespace dnlsnf
