#include "dnlsnf/selftest.hpp"

#include "dnlsnf/fourier.hpp"
#include "dnlsnf/symplectic.hpp"

#include <algorithm>
#include <cmath>

namespace dnlsnf {

namespace {

ModesPtr algebra_modes() { return ModeSystem::make({1, 2}, 5); }

double rel_size(const HamSeries& residual, std::initializer_list<const HamSeries*> parts) {
  double scale = 0;
  for (auto* p : parts) scale = std::max(scale, p->max_abs());
  double r = residual.max_abs();
  return scale > 0 ? r / scale : r;
}

}  // namespace

HamSeries random_series(const ModesPtr& modes, int mom, int dmin, int dmax, int nterms,
                        std::mt19937_64& rng, int K_terms) {
  const ModeSystem& m = *modes;
  HamSeries h(modes, 64, 32, mom == 0);
  std::uniform_int_distribution<int> deg(dmin, dmax), site(0, int(m.normal_sites.size()) - 1);
  std::uniform_int_distribution<int> kd(-K_terms, K_terms), coin(0, 1), slot(0, m.n - 1);
  std::normal_distribution<double> g(0.0, 1.0);
  const int j0 = m.tangent_sites[0];
  int made = 0;
  for (int tries = 0; made < nterms && tries < 1000 * nterms; ++tries) {
    TermIndex t;
    t.k.assign(m.n, 0);
    t.alpha.assign(m.n, 0);
    int d = deg(rng);
    int ya = std::uniform_int_distribution<int>(0, d / 2)(rng);
    for (int q = 0; q < ya; ++q) t.alpha[slot(rng)] += 1;
    for (int q = 0; q < d - 2 * ya; ++q) site_add(coin(rng) ? t.mu : t.gamma, m.normal_sites[site(rng)], 1);
    for (int i = 1; i < m.n; ++i) t.k[i] = kd(rng);
    int rest = mom - momentum(t, m);
    if (rest % j0 != 0) continue;
    t.k[0] = rest / j0;
    if (std::abs(t.k[0]) > 3 * K_terms) continue;
    h.add_term(t, cplx(g(rng), g(rng)));
    ++made;
  }
  return mom == 0 ? realify(h) : h;
}

std::vector<CheckRow> algebra_suite(std::uint64_t seed, int triples, int pairs) {
  auto modes = algebra_modes();
  std::mt19937_64 rng(seed);
  double anti = 0, jac = 0, leib = 0, mom_bad = 0, real_def = 0;
  for (int i = 0; i < triples; ++i) {
    HamSeries U = random_series(modes, 0, 1, 3, 5, rng);
    HamSeries V = random_series(modes, 0, 1, 3, 5, rng);
    HamSeries W = random_series(modes, 0, 1, 3, 5, rng);
    HamSeries uv = poisson_bracket(U, V), vu = poisson_bracket(V, U);
    HamSeries sum = add(uv, vu);
    anti = std::max(anti, sum.max_abs());  // exact: expected to be 0 bit for bit

    HamSeries vw = poisson_bracket(V, W), wu = poisson_bracket(W, U);
    HamSeries j1 = poisson_bracket(U, vw), j2 = poisson_bracket(V, wu), j3 = poisson_bracket(W, uv);
    jac = std::max(jac, rel_size(add(add(j1, j2), j3), {&j1, &j2, &j3}));

    HamSeries lhs = poisson_bracket(U, mul(V, W));
    HamSeries rhs1 = mul(uv, W);
    HamSeries uw = poisson_bracket(U, W);
    HamSeries rhs2 = mul(V, uw);
    leib = std::max(leib, rel_size(sub(lhs, add(rhs1, rhs2)), {&lhs, &rhs1, &rhs2}));

    real_def = std::max(real_def, reality_defect(uv));
  }
  std::uniform_int_distribution<int> md(-6, 6);
  for (int i = 0; i < pairs; ++i) {
    int a = md(rng), b = md(rng);
    HamSeries U = random_series(modes, a, 1, 3, 5, rng);
    HamSeries V = random_series(modes, b, 1, 3, 5, rng);
    HamSeries B = poisson_bracket(U, V);
    for (auto& [t, c] : B.terms())
      if (momentum(t, *modes) != a + b) mom_bad += 1;
  }
  return {
      {"algebra", "antisymmetry_max_abs", anti, 0.0, anti == 0.0},
      {"algebra", "jacobi_rel", jac, 1e-10, jac <= 1e-10},
      {"algebra", "leibniz_rel", leib, 1e-10, leib <= 1e-10},
      {"algebra", "momentum_violations", mom_bad, 0.0, mom_bad == 0.0},
      {"algebra", "reality_defect", real_def, 1e-12, real_def <= 1e-12},
  };
}

std::vector<SolverCase> solver_oracle_cases(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  DioParams dio;
  std::vector<SolverCase> out;
  for (int i = 0; i < instances; ++i) {
    SolverCase c;
    c.instance = i;
    c.n = 1 + i % 2;
    c.K = c.n == 1 ? 16 : 12;
    SolverInstance s = random_solver_instance(rng, c.n, c.K);
    LargeCoeffOptions opt;
    opt.K_out = c.K;
    opt.allow_fallback = false;
    SolveOutcome pipe = solve_large_coeff(s.omega, s.lambda, s.a, s.R, dio, opt);
    // The Galerkin reference is padded so its own truncation error is below the tolerance.
    SolveOutcome dense = dense_oracle(s.omega, s.lambda, f_scale(s.a, s.lambda), s.R, c.K + 8);
    double diff = 0, ref = 0;
    for (const IVec& k : l1_ball(c.n, c.K)) {
      auto get = [&](const Fourier& f) {
        auto it = f.find(k);
        return it == f.end() ? cplx(0.0) : it->second;
      };
      diff = std::max(diff, std::abs(get(pipe.x) - get(dense.x)));
      ref = std::max(ref, std::abs(get(dense.x)));
    }
    c.rel_error = ref > 0 ? diff / ref : diff;
    c.residual = pipe.report.residual;
    c.branch = pipe.report.branch;
    out.push_back(c);
  }
  return out;
}

std::vector<CheckRow> solver_suite(const std::vector<SolverCase>& cases) {
  double err = 0, res = 0;
  for (auto& c : cases) {
    err = std::max(err, c.rel_error);
    res = std::max(res, c.residual);
  }
  return {
      {"solver", "pipeline_vs_dense_rel", err, 1e-7, err <= 1e-7},
      {"solver", "operator_residual_rel", res, 1e-8, res <= 1e-8},
  };
}

std::vector<EstimateFamily> estimate_families(std::uint64_t seed) {
  return {sweep_dw_inverse(seed + 1), sweep_large_coeff(seed + 2), sweep_bracket(seed + 3),
          sweep_tame(seed + 4)};
}

std::vector<CheckRow> estimate_suite(const std::vector<EstimateFamily>& fams) {
  std::vector<CheckRow> out;
  for (auto& f : fams) out.push_back({"estimate", f.name + "_worst_over_fit", f.worst_test, 1.0, f.pass});
  return out;
}

}  // namespace dnlsnf
