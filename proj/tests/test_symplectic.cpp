#include "doctest.h"

#include "dnlsnf/selftest.hpp"
#include "dnlsnf/symplectic.hpp"

#include <cmath>
#include <random>

using namespace dnlsnf;

namespace {

ModesPtr modes12() { return ModeSystem::make({1, 2}, 5); }

HamSeries mono(const ModesPtr& m, const TermIndex& t, cplx c, bool real = false) {
  HamSeries h(m, 16, 8, real);
  h.add_term(t, c);
  return h;
}

PhasePoint random_point(const ModeSystem& m, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> u(-1, 1);
  PhasePoint w = PhasePoint::zeros(m);
  for (auto& x : w.x) x = 3 * u(rng);
  for (auto& y : w.y) y = amp * u(rng);
  for (std::size_t i = 0; i < w.z.size(); ++i) {
    w.z[i] = amp * cplx(u(rng), u(rng));
    w.zb[i] = std::conj(w.z[i]);
  }
  return w;
}

double dist(const PhasePoint& a, const PhasePoint& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.x.size(); ++i)
    d = std::max({d, std::abs(a.x[i] - b.x[i]), std::abs(a.y[i] - b.y[i])});
  for (std::size_t i = 0; i < a.z.size(); ++i)
    d = std::max({d, std::abs(a.z[i] - b.z[i]), std::abs(a.zb[i] - b.zb[i])});
  return d;
}

}  // namespace

TEST_CASE("canonical brackets") {
  auto m = modes12();
  auto x1 = mono(m, HamSeries::idx(*m, {1, 0}), 1.0);  // e^{i x1}
  auto y1 = mono(m, HamSeries::idx(*m, {}, {1, 0}), 1.0);
  // {e^{i x1}, y1} = i e^{i x1}
  HamSeries b = poisson_bracket(x1, y1);
  CHECK(b.size() == 1);
  CHECK(b.coeff(HamSeries::idx(*m, {1, 0})) == cplx(0, 1));

  for (int j : {-3, -1, 3, 5}) {
    auto z = mono(m, HamSeries::idx(*m, {}, {}, {{j, 1}}), 1.0);
    auto zb = mono(m, HamSeries::idx(*m, {}, {}, {}, {{j, 1}}), 1.0);
    HamSeries zz = poisson_bracket(z, zb);
    CHECK(zz.size() == 1);
    CHECK(zz.coeff(HamSeries::idx(*m)) == cplx(0, j));
  }
}

TEST_CASE("integrable part rotates normal coordinates") {
  auto m = modes12();
  HamSeries N(m, 16, 8);
  std::map<int, double> Om;
  for (int j : m->normal_sites) {
    Om[j] = j * j + 0.3 / std::abs(j);
    N.add_term(HamSeries::idx(*m, {}, {}, {{j, 1}}, {{j, 1}}), Om[j] / j);
  }
  for (int j : m->normal_sites) {
    auto z = mono(m, HamSeries::idx(*m, {}, {}, {{j, 1}}), 1.0);
    HamSeries b = poisson_bracket(N, z);
    CHECK(b.size() == 1);
    cplx c = b.coeff(HamSeries::idx(*m, {}, {}, {{j, 1}}));
    CHECK(std::abs(c - cplx(0, -Om[j])) <= 1e-14 * Om[j]);
  }
}

TEST_CASE("bracket grading") {
  auto m = modes12();
  std::mt19937_64 rng(7);
  for (int i = 0; i < 30; ++i) {
    int a = 1 + i % 3, b = 1 + (i / 3) % 3;
    HamSeries U = random_series(m, 1, a, a, 5, rng), V = random_series(m, -2, b, b, 5, rng);
    HamSeries B = poisson_bracket(U, V);
    for (auto& [t, c] : B.terms()) {
      CHECK(t.degree() == a + b - 2);
      CHECK(momentum(t, *m) == -1);
    }
  }
}

TEST_CASE("vector field of y1 and of zero") {
  auto m = modes12();
  auto y1 = mono(m, HamSeries::idx(*m, {}, {1, 0}), 1.0, true);
  std::mt19937_64 rng(1);
  auto v = vector_field(y1, random_point(*m, rng, 0.2));
  CHECK(v.dx[0] == cplx(1.0));
  CHECK(v.dx[1] == cplx(0.0));
  for (auto& c : v.dy) CHECK(c == cplx(0.0));
  for (auto& c : v.dz) CHECK(c == cplx(0.0));

  DomainSpec d{0.5, 0.5, 2};
  CHECK(vf_norm(HamSeries(m, 8, 4), d, 2) == 0.0);
  CHECK(vf_norm(y1, d, 2) == doctest::Approx(1.0));
}

TEST_CASE("vector field matches finite differences of the Hamiltonian") {
  auto m = modes12();
  std::mt19937_64 rng(3);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    HamSeries W = random_series(m, 0, 1, 4, 10, rng);
    PhasePoint w = random_point(*m, rng, 0.3);
    auto v = vector_field(W, w);
    auto central = [&](auto&& bump) {
      PhasePoint p = w, q = w;
      bump(p, h);
      bump(q, -h);
      return (evaluate(W, p) - evaluate(W, q)) / (2 * h);
    };
    double scale = 1e-300, err = 0;
    for (int i = 0; i < m->n; ++i) {
      cplx dWdy = central([&](PhasePoint& p, double e) { p.y[i] += e; });
      cplx dWdx = central([&](PhasePoint& p, double e) { p.x[i] += e; });
      err = std::max({err, std::abs(v.dx[i] - dWdy), std::abs(v.dy[i] + dWdx)});
      scale = std::max({scale, std::abs(dWdy), std::abs(dWdx)});
    }
    for (std::size_t s = 0; s < m->normal_sites.size(); ++s) {
      double j = m->normal_sites[s];
      cplx dWdz = central([&](PhasePoint& p, double e) { p.z[s] += e; });
      cplx dWdzb = central([&](PhasePoint& p, double e) { p.zb[s] += e; });
      err = std::max({err, std::abs(v.dz[s] - cplx(0, j) * dWdzb), std::abs(v.dzb[s] + cplx(0, j) * dWdz)});
      scale = std::max({scale, std::abs(dWdz) * std::abs(j), std::abs(dWdzb) * std::abs(j)});
    }
    CHECK(err <= 1e-6 * std::max(1.0, scale));
  }
}

TEST_CASE("Lie transform with zero generator is the identity") {
  auto m = modes12();
  std::mt19937_64 rng(5);
  HamSeries H = random_series(m, 0, 0, 4, 10, rng);
  LieResult r = lie_transform(H, H.empty_like());
  CHECK(r.value.size() == H.size());
  CHECK(sub(r.value, H).max_abs() == 0.0);
  CHECK(r.remainder == 0.0);
}

TEST_CASE("Lie transform of a homogeneous quadratic generator keeps degrees") {
  auto m = modes12();
  std::mt19937_64 rng(6);
  HamSeries F(m, 64, 32);
  F.add_term(HamSeries::idx(*m, {}, {}, {{3, 1}}, {{3, 1}}), 0.2);
  F.add_term(HamSeries::idx(*m, {}, {}, {{-1, 1}}, {{-1, 1}}), -0.1);
  for (int d = 1; d <= 4; ++d) {
    HamSeries H = random_series(m, 0, d, d, 6, rng);
    HamSeries G = lie_transform(H, F).value;
    for (auto& [t, c] : G.terms()) CHECK(t.degree() == d);
  }
}

TEST_CASE("Lie series agrees with the time-one flow") {
  auto m = modes12();
  std::mt19937_64 rng(12);
  HamSeries F(m, 64, 32);
  F.add_term(HamSeries::idx(*m, {}, {1, 0}), 0.3);
  F.add_term(HamSeries::idx(*m, {}, {0, 1}), -0.2);
  F.add_term(HamSeries::idx(*m, {}, {}, {{3, 1}}, {{3, 1}}), 0.25);
  F.add_term(HamSeries::idx(*m, {}, {}, {{-2, 1}}, {{-2, 1}}), 0.1);
  LiePlan plan;
  plan.order_cap = 40;
  for (int i = 0; i < 5; ++i) {
    HamSeries H = random_series(m, 0, 1, 3, 8, rng);
    LieResult r = lie_transform(H, F, plan);
    CHECK(r.converged);
    PhasePoint w = random_point(*m, rng, 0.2);
    cplx lhs = evaluate(r.value, w);
    cplx rhs = evaluate(H, flow(F, w, 1.0, 400));
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("flow and inverse flow round trip") {
  auto m = modes12();
  std::mt19937_64 rng(13);
  for (int i = 0; i < 5; ++i) {
    HamSeries F = scale(random_series(m, 0, 2, 4, 8, rng), 0.05);
    PhasePoint w = random_point(*m, rng, 0.2);
    PhasePoint back = flow(F, flow(F, w, 1.0, 64), -1.0, 64);
    CHECK(dist(back, w) <= 1e-10);
  }
}
