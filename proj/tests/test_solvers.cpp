#include "doctest.h"

#include "dnlsnf/estimates.hpp"
#include "dnlsnf/solvers.hpp"

#include <cmath>
#include <random>

using namespace dnlsnf;

namespace {

const double kGolden = (std::sqrt(5.0) - 1) / 2;

cplx at(const Fourier& f, const IVec& k) {
  auto it = f.find(k);
  return it == f.end() ? cplx(0.0) : it->second;
}

double max_diff_on(const Fourier& a, const Fourier& b, int n, int K) {
  double d = 0;
  for (const IVec& k : l1_ball(n, K)) d = std::max(d, std::abs(at(a, k) - at(b, k)));
  return d;
}

Fourier random_fourier(std::mt19937_64& rng, int n, int K) {
  std::normal_distribution<double> g;
  Fourier f;
  for (const IVec& k : l1_ball(n, K)) f[k] = cplx(g(rng), g(rng)) * std::exp(-0.5 * l1(k));
  return f;
}

}  // namespace

TEST_CASE("inverse of omega.d on a single mode") {
  for (double th : {0.0, 0.7}) {
    Fourier A{{IVec{1}, std::polar(1.0, th)}};
    SolveOutcome out = dw_inverse(A, {1.0}, DioParams{}, 0.5, 0.1);
    CHECK(std::abs(at(out.x, IVec{1}) + std::polar(1.0, th)) <= 1e-15);
    CHECK(out.x.size() == 1);
  }
  CHECK_THROWS(dw_inverse(Fourier{{IVec{0}, 1.0}}, {1.0}, DioParams{}, 0.5, 0.1));
}

TEST_CASE("inverse of omega.d solves the equation") {
  std::mt19937_64 rng(2);
  std::vector<double> w{1.0, kGolden};
  Fourier A = random_fourier(rng, 2, 6);
  A.erase(IVec{0, 0});
  SolveOutcome out = dw_inverse(A, w, DioParams{}, 0.5, 0.1);
  Fourier back = f_scale(f_omega_d(out.x, w), cplx(0, 1));  // D_omega = i omega.d
  CHECK(max_diff_on(back, A, 2, 6) <= 1e-12);
  CHECK(at(out.x, IVec{0, 0}) == cplx(0.0));
}

TEST_CASE("constant-coefficient division") {
  for (double ph : {0.0, 1.3}) {
    Fourier R{{IVec{1}, std::polar(1.0, ph)}};
    SolveOutcome out = solve_division({1.0}, 0.5, R, 4);
    CHECK(std::abs(at(out.x, IVec{1}) + 2.0 * std::polar(1.0, ph)) <= 1e-14);
  }
  Fourier c{{IVec{0, 0}, cplx(3, -1)}};
  SolveOutcome oc = solve_division({1.0, kGolden}, 0.5, c, 4);
  CHECK(std::abs(at(oc.x, IVec{0, 0}) - cplx(6, -2)) <= 1e-14);

  std::mt19937_64 rng(4);
  std::vector<double> w{1.0, kGolden};
  Fourier R = random_fourier(rng, 2, 6);
  SolveOutcome a = solve_division(w, 0.37, R, 6);
  SolveOutcome b = dense_oracle(w, 0.37, {}, R, 6);
  CHECK(max_diff_on(a.x, b.x, 2, 6) <= 1e-10);
  CHECK(a.report.residual <= 1e-12);
}

TEST_CASE("Diophantine scan") {
  DioParams d;
  std::vector<double> w{1.0, kGolden};
  CHECK(diophantine_scan(w, std::nullopt, d).pass);

  IVec k0{1, 1};
  double lam = -dot(k0, w);
  SolverReport r = diophantine_scan(w, lam, d);
  CHECK_FALSE(r.pass);
  IVec minus{-1, -1};
  CHECK((r.violator == k0 || r.violator == minus));
  CHECK(r.min_divisor <= 1e-15);

  // shrinking gamma never turns a pass into a failure
  std::vector<double> w2{1.0, 0.61};
  bool seen_pass = false;
  double prev_margin = 0;
  for (double g : {0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001}) {
    d.gamma0 = g;
    SolverReport s = diophantine_scan(w2, std::nullopt, d);
    if (seen_pass) CHECK(s.pass);
    seen_pass = seen_pass || s.pass;
    CHECK(s.worst_margin >= prev_margin);
    prev_margin = s.worst_margin;
  }
}

TEST_CASE("large-coefficient solve with zero coefficient is plain division") {
  std::mt19937_64 rng(5);
  std::vector<double> w{1.0, kGolden};
  Fourier R = random_fourier(rng, 2, 5);
  LargeCoeffOptions opt;
  opt.K_out = 5;
  SolveOutcome a = solve_large_coeff(w, 2.5, {}, R, DioParams{}, opt);
  SolveOutcome b = solve_division(w, 2.5, R, 5);
  CHECK(max_diff_on(a.x, b.x, 2, 5) <= 1e-12);
}

TEST_CASE("large-coefficient solve against the dense reference") {
  const double w = 0.618, lam = 10.0;
  Fourier a{{IVec{1}, 0.025}, {IVec{-1}, 0.025}};  // 0.05 cos x
  Fourier R{{IVec{0}, 1.0}, {IVec{1}, cplx(0.3, 0.1)}, {IVec{-1}, cplx(0.3, -0.1)}, {IVec{2}, 0.05}};
  LargeCoeffOptions opt;
  opt.K_out = 16;
  opt.allow_fallback = false;
  SolveOutcome pipe = solve_large_coeff({w}, lam, a, R, DioParams{}, opt);
  SolveOutcome dense = dense_oracle({w}, lam, f_scale(a, lam), R, 40);
  double ref = 0;
  for (auto& [k, c] : dense.x)
    if (l1(k) <= 16) ref = std::max(ref, std::abs(c));
  CHECK(max_diff_on(pipe.x, dense.x, 1, 16) <= 1e-7 * ref);
  CHECK(pipe.report.residual <= 1e-8);

  // Picard corrections shrink geometrically
  const auto& st = pipe.report.picard_steps;
  REQUIRE(st.size() >= 3);
  for (std::size_t i = 2; i < st.size(); ++i) {
    if (st[i - 1] < 1e-14) break;
    CHECK(st[i] <= 0.9 * st[i - 1]);
  }
}

TEST_CASE("additive-form solve") {
  std::mt19937_64 rng(6);
  std::vector<double> w{1.0, kGolden};
  Fourier p = random_fourier(rng, 2, 6);
  SolveOutcome zero_mu = solve_liu_yuan_mode(w, 1.7, {}, p, 8, 0.5, 2.0);
  SolveOutcome div = solve_division(w, 1.7, p, 8);
  CHECK(max_diff_on(zero_mu.x, div.x, 2, 8) <= 1e-12);

  Fourier mu{{IVec{1, 0}, 0.05}, {IVec{-1, 0}, 0.05}, {IVec{0, 1}, cplx(0, 0.02)}, {IVec{0, -1}, cplx(0, -0.02)}};
  SolveOutcome s = solve_liu_yuan_mode(w, 1.7, mu, p, 8, 0.5, 2.0);
  CHECK(relative_residual(w, 1.7, mu, s.x, p, 8) <= 1e-10);
}

TEST_CASE("random oracle instances") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 6; ++i) {
    int n = 1 + i % 2, K = n == 1 ? 12 : 8;
    SolverInstance s = random_solver_instance(rng, n, K);
    LargeCoeffOptions opt;
    opt.K_out = K;
    opt.allow_fallback = false;
    SolveOutcome pipe = solve_large_coeff(s.omega, s.lambda, s.a, s.R, DioParams{}, opt);
    SolveOutcome dense = dense_oracle(s.omega, s.lambda, f_scale(s.a, s.lambda), s.R, K + 8);
    double ref = 0;
    for (auto& [k, c] : dense.x)
      if (l1(k) <= K) ref = std::max(ref, std::abs(c));
    CHECK(max_diff_on(pipe.x, dense.x, n, K) <= 1e-7 * ref);
    CHECK(pipe.report.residual <= 1e-8);
  }
}

TEST_CASE("homological equation with constant frequency reduces to division") {
  std::mt19937_64 rng(8);
  HomologicalProblem prob;
  prob.omega = {1.0, kGolden};
  prob.L_mean = 1.3;
  prob.R = random_fourier(rng, 2, 5);
  prob.K = 5;
  SolveOutcome h = solve_homological(prob);
  // (omega.d + i L) G = R  <=>  (i omega.d - L) G = i R
  SolveOutcome d = solve_division(prob.omega, -1.3, f_scale(prob.R, cplx(0, 1)), 5);
  CHECK(max_diff_on(h.x, d.x, 2, 5) <= 1e-12);
}

TEST_CASE("constant fitting on disjoint halves") {
  EstimateFamily fam;
  fam.name = "synthetic";
  for (int i = 0; i < 4; ++i)
    for (double s : sigma_sweep(0.5, 4)) fam.rows.push_back({"synthetic", i, s, 0, 0, 1.0 + 0.1 * i, false});
  fit_disjoint_halves(fam, SplitBy::Instance);
  CHECK(fam.fitted_C == doctest::Approx(1.2));
  CHECK(fam.worst_test == doctest::Approx(1.3 / 1.2));
  CHECK_FALSE(fam.pass);
  for (auto& r : fam.rows) CHECK(r.fit_half == (r.instance % 2 == 0));

  // ratio growing as sigma shrinks is caught by the sigma split
  for (auto& r : fam.rows) r.ratio = 1.0 / r.sigma;
  fit_disjoint_halves(fam, SplitBy::Sigma);
  CHECK_FALSE(fam.pass);
  for (auto& r : fam.rows) r.ratio = 2.0;
  fit_disjoint_halves(fam, SplitBy::Sigma);
  CHECK(fam.pass);
  CHECK(fam.worst_test == doctest::Approx(1.0));

  auto sw = sigma_sweep(0.5);
  CHECK(sw.size() == 10);
  CHECK(sw.front() == doctest::Approx(0.025));
  CHECK(sw.back() == doctest::Approx(0.25));
}
