// Random instance generators and measured-constant sweeps for the solver, bracket and
// vector-field inequalities.
#pragma once

#include "dnlsnf/solvers.hpp"
#include "dnlsnf/symplectic.hpp"

#include <random>
#include <string>
#include <vector>

namespace dnlsnf {

struct SolverInstance {
  std::vector<double> omega;
  double lambda = 0.0;
  Fourier a;  // zero mean, real function
  Fourier R;
  int K = 0;
};

// omega in [0.5,1.5]^n, lambda in [2,6]; rejection keeps |lambda - <k,omega>| >= min_div on |k| <= K
// and |<k,omega>| >= min_div on the support of a. ||a||_1 <= a_rel.
SolverInstance random_solver_instance(std::mt19937_64& rng, int n, int K, double a_rel = 0.1,
                                      double min_div = 0.05, int K_a = 3, int K_R = 6);

// Random real series, homogeneous of the given degree, total momentum zero.
HamSeries random_homogeneous(const ModesPtr& modes, int K, int D, int degree, int nterms,
                             std::mt19937_64& rng, int K_terms = 3);

struct EstimateRow {
  std::string family;
  int instance = 0;
  double sigma = 0.0;
  double measured = 0.0;  // left-hand side
  double shape = 0.0;     // right-hand side without the constant
  double ratio = 0.0;     // quantity the constant must dominate
  bool fit_half = false;
};

struct EstimateFamily {
  std::string name;
  std::vector<EstimateRow> rows;
  double fitted_C = 0.0;
  double worst_test = 0.0;  // max test ratio / fitted_C
  bool pass = false;
};

enum class SplitBy { Sigma, Instance };

// Sigma: fits C = max ratio over sigma >= median sigma and checks the smaller-sigma rows.
// Instance: fits on even instances and checks odd ones.
void fit_disjoint_halves(EstimateFamily& fam, SplitBy split = SplitBy::Sigma);

std::vector<double> sigma_sweep(double s, int points = 10);  // {0.05 .. 0.5} * s

EstimateFamily sweep_dw_inverse(std::uint64_t seed, int instances = 10, double s = 0.5);
EstimateFamily sweep_large_coeff(std::uint64_t seed, int instances = 10, double s = 0.5);
EstimateFamily sweep_bracket(std::uint64_t seed, int instances = 100);
EstimateFamily sweep_tame(std::uint64_t seed, int instances = 100, double p = 2.0);

}  // namespace dnlsnf
