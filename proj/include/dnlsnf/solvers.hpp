// Small-divisor solvers on T^n: D_omega inverse, constant-coefficient division,
// the change-of-variables pipeline for large variable coefficients, and a dense
// Galerkin oracle.
#pragma once

#include "dnlsnf/fourier.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dnlsnf {

inline constexpr double kDivisorFloor = 1e-10;
inline constexpr std::size_t kDenseCap = 40000;  // (2K+1)^n bound
inline constexpr std::size_t kDenseBasisCap = 4000;  // unknowns actually factorised

struct DioParams {
  double gamma0 = 0.1;
  double gamma = 0.05;
  double tau = 2.0;
  int K_scan = 50;
  bool modulo_integers = false;  // scan (omega, 1): distance of <k,omega> to Z
};

struct SolverReport {
  std::string branch;
  double min_divisor = std::numeric_limits<double>::infinity();
  IVec min_divisor_k;
  double residual = 0.0;  // relative, recomputed independently
  int picard_iters = 0;
  std::vector<double> picard_steps;
  double im_contraction = 0.0;
  double norm_in = 0.0, norm_out = 0.0;
  std::vector<double> widths;
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  IVec violator;
  bool fallback = false;
  std::string to_json() const;
};

struct SolveOutcome {
  Fourier x;
  SolverReport report;
};

struct ResonanceError : std::runtime_error {
  IVec k;
  double divisor;
  ResonanceError(const std::string& what, IVec kk, double d)
      : std::runtime_error(what), k(std::move(kk)), divisor(d) {}
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using KFilter = std::function<bool(const IVec&)>;

// All k with |k|_1 <= K (optionally filtered), lexicographic order.
std::vector<IVec> l1_ball(int n, int K, const KFilter& keep = nullptr);

SolverReport diophantine_scan(const std::vector<double>& omega, std::optional<double> lambda,
                              const DioParams& d);

// D_omega X = A with D_omega = i omega.d.
SolveOutcome dw_inverse(const Fourier& A, const std::vector<double>& omega, const DioParams& d,
                        double s, double sigma);

// (i omega.d + lambda) y = R.
SolveOutcome solve_division(const std::vector<double>& omega, double lambda, const Fourier& R,
                            int K, double s = 0.0);

// (i omega.d + lambda) x + m x, evaluated in Fourier space (no truncation).
Fourier apply_operator(const std::vector<double>& omega, double lambda, const Fourier& m,
                       const Fourier& x);
double relative_residual(const std::vector<double>& omega, double lambda, const Fourier& m,
                         const Fourier& x, const Fourier& R, int K);

// Galerkin solve of (i omega.d + lambda + m) x = R on {|k|_1 <= K} intersect keep.
SolveOutcome dense_oracle(const std::vector<double>& omega, double lambda, const Fourier& m,
                          const Fourier& R, int K, const KFilter& keep = nullptr);

// Width schedule s_m = s0 (1 - sum_{j<=m} j^-2 / (100 pi^2/6)) and its ten sub-widths.
struct WidthLadder {
  double s0 = 0.5;
  double s(int m) const;
  double sub(int m, int i) const;  // s_{m+1} + (1 - i/10)(s_m - s_{m+1})
};

struct LargeCoeffOptions {
  int K_out = 16;
  int grid = 0;  // points per dimension, 0: automatic
  int picard_max = 50;
  double picard_tol = 1e-13;
  double residual_tol = 1e-8;
  int ladder_stage = 0;
  WidthLadder ladder{};
  KFilter keep = nullptr;
  bool allow_fallback = true;
};

// (i omega.d + lambda (1 + a)) x = R through the change of variables theta = phi + alpha(phi) omega.
SolveOutcome solve_large_coeff(const std::vector<double>& omega, double lambda, const Fourier& a,
                               const Fourier& R, const DioParams& d,
                               const LargeCoeffOptions& opt = {});

// Same operator in additive form (i omega.d + lambda + mu) u = p, realised by the dense solve.
SolveOutcome solve_liu_yuan_mode(const std::vector<double>& omega, double lambda,
                                 const Fourier& mu, const Fourier& p, int K, double s,
                                 double tau, const KFilter& keep = nullptr);

// Homological equation (omega.d + i L(x)) G = R with L = L_mean + L_tilde (zero-mean).
struct HomologicalProblem {
  std::vector<double> omega;
  double L_mean = 0.0;
  Fourier L_tilde;
  Fourier R;
  int K = 0;
  KFilter keep = nullptr;
  DioParams dio{};
  std::string force_branch;  // empty: automatic
};
SolveOutcome solve_homological(const HomologicalProblem& prob);

}  // namespace dnlsnf
