// Property suites shared by the `selftest` subcommand and the test binaries.
#pragma once

#include "dnlsnf/estimates.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dnlsnf {

struct CheckRow {
  std::string suite, check;
  double value = 0.0;      // worst observed
  double threshold = 0.0;  // pass iff value <= threshold
  bool pass = false;
};

// Random real series with every term of total momentum `mom` and degree in [dmin, dmax].
// Cutoffs are large enough that brackets of three such series are never truncated.
HamSeries random_series(const ModesPtr& modes, int mom, int dmin, int dmax, int nterms,
                        std::mt19937_64& rng, int K_terms = 2);

// Antisymmetry, Jacobi, Leibniz, momentum additivity and reality closure.
std::vector<CheckRow> algebra_suite(std::uint64_t seed, int triples = 200, int pairs = 500);

struct SolverCase {
  int instance = 0, n = 0, K = 0;
  double rel_error = 0.0;     // pipeline vs dense truncated-operator solve
  double residual = 0.0;      // pipeline residual / ||R||
  std::string branch;
};

// Change-of-variables pipeline against the dense Galerkin solve on random instances.
std::vector<SolverCase> solver_oracle_cases(std::uint64_t seed, int instances = 100);
std::vector<CheckRow> solver_suite(const std::vector<SolverCase>& cases);

std::vector<EstimateFamily> estimate_families(std::uint64_t seed);
std::vector<CheckRow> estimate_suite(const std::vector<EstimateFamily>& fams);

}  // namespace dnlsnf
