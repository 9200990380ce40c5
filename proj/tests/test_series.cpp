#include "doctest.h"

#include "dnlsnf/fourier.hpp"
#include "dnlsnf/selftest.hpp"
#include "dnlsnf/series.hpp"

#include <cmath>
#include <random>

using namespace dnlsnf;

namespace {

ModesPtr modes12() { return ModeSystem::make({1, 2}, 6); }

bool same_terms(const HamSeries& a, const HamSeries& b) {
  if (a.size() != b.size()) return false;
  for (auto& [t, c] : a.terms())
    if (b.coeff(t) != c) return false;
  return true;
}

HamSeries mixed_momentum(const ModesPtr& m, std::mt19937_64& rng) {
  HamSeries h(m, 64, 32, false);
  for (int b = -4; b <= 4; ++b) h = add(h, random_series(m, b, 1, 3, 6, rng));
  return h;
}

PhasePoint real_point(const ModeSystem& m, std::mt19937_64& rng, double amp) {
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

}  // namespace

TEST_CASE("mode system rejects bad tangent sets") {
  CHECK_THROWS(ModeSystem::make({1, 1}, 5));
  CHECK_THROWS(ModeSystem::make({0}, 5));
  CHECK_THROWS(ModeSystem::make({7}, 5));
  auto m = ModeSystem::make({1, 3}, 4);
  CHECK(m->normal_sites == std::vector<int>{-4, -3, -2, -1, 2, 4});
  CHECK_FALSE(m->is_normal(3));
}

TEST_CASE("momentum of simple monomials") {
  auto m = ModeSystem::make({1}, 5);
  // z_2 zbar_2 carries no momentum
  CHECK(momentum(HamSeries::idx(*m, {0}, {0}, {{2, 1}}, {{2, 1}}), *m) == 0);
  CHECK(momentum(HamSeries::idx(*m, {1}), *m) == 1);
  CHECK(momentum(HamSeries::idx(*m, {0}, {0}, {{2, 1}}), *m) == 2);
  CHECK(momentum(HamSeries::idx(*m, {0}, {0}, {}, {{3, 2}}), *m) == -6);
  // quartic selection i - j + k - l = 0 gives momentum 0
  CHECK(momentum(HamSeries::idx(*m, {0}, {0}, {{2, 1}, {5, 1}}, {{3, 1}, {4, 1}}), *m) == 0);
  CHECK_THROWS_AS(momentum(HamSeries::idx(*m, {0}, {0}, {{1, 1}}), *m), IndexError);
}

TEST_CASE("momentum class filter partitions a series") {
  auto m = modes12();
  std::mt19937_64 rng(11);
  HamSeries h = mixed_momentum(m, rng);
  HamSeries sum = h.empty_like();
  for (int b = -40; b <= 40; ++b) {
    HamSeries part = filter_momentum_class(h, b);
    for (auto& [t, c] : part.terms()) CHECK(momentum(t, *m) == b);
    sum = add(sum, part);
  }
  CHECK(same_terms(sum, h));

  HamSeries zero_class = random_series(m, 0, 1, 3, 10, rng);
  CHECK(same_terms(filter_momentum_class(zero_class, 0), zero_class));
  HamSeries z2(m, 8, 4);
  z2.add_term(HamSeries::idx(*m, {}, {}, {{3, 1}}), 1.0);
  CHECK(filter_momentum_class(z2, 0).empty());
}

TEST_CASE("Fourier truncation") {
  auto m = ModeSystem::make({1}, 4);
  HamSeries h(m, 8, 4);
  h.add_term(HamSeries::idx(*m, {3}), 1.0);
  CHECK(gamma_truncate(h, 2).empty());
  CHECK(same_terms(gamma_truncate(h, 3), h));

  std::mt19937_64 rng(5);
  HamSeries r = random_series(modes12(), 0, 1, 3, 30, rng, 3);
  for (int K : {0, 1, 3, 5}) {
    HamSeries g = gamma_truncate(r, K);
    CHECK(same_terms(gamma_truncate(g, K), g));
    // tail bound |||(1 - Gamma_K) H|||_s <= e^{-K sigma} |||H|||_{s+sigma}
    HamSeries tail = sub(r, g);
    double s = 0.3, sigma = 0.2;
    double lhs = majorant_norms(tail, {s, 0.5, 2}).first;
    double rhs = std::exp(-K * sigma) * majorant_norms(r, {s + sigma, 0.5, 2}).first;
    CHECK(lhs <= rhs * (1 + 1e-12));
  }
  CHECK_THROWS(gamma_truncate(h, -1));
}

TEST_CASE("low/high split reassembles") {
  auto m = modes12();
  HamSeries h(m, 8, 6);
  auto t_y = HamSeries::idx(*m, {}, {1, 0});
  auto t_zz = HamSeries::idx(*m, {1, 0}, {}, {{3, 1}}, {{4, 1}});
  auto t_zzz = HamSeries::idx(*m, {}, {}, {{3, 2}}, {{6, 1}});
  h.add_term(t_y, 2.0);
  h.add_term(t_zz, 0.5);
  h.add_term(t_zzz, 0.25);
  auto [lo, hi] = split_low_high(h);
  CHECK(lo.coeff(t_y) == cplx(2.0));
  CHECK(lo.coeff(t_zz) == cplx(0.5));
  CHECK(hi.coeff(t_zzz) == cplx(0.25));
  CHECK(lo.size() == 2);
  CHECK(hi.size() == 1);

  std::mt19937_64 rng(3);
  HamSeries r = random_series(m, 0, 0, 4, 40, rng);
  auto [l2, h2] = split_low_high(r);
  CHECK(same_terms(add(l2, h2), r));
  for (auto& [t, c] : l2.terms()) CHECK(t.degree() <= 2);
  for (auto& [t, c] : h2.terms()) CHECK(t.degree() >= 3);
}

TEST_CASE("angle average") {
  auto m = ModeSystem::make({1}, 3);
  HamSeries h(m, 4, 4);
  h.add_term(HamSeries::idx(*m, {1}), 1.0);
  CHECK(x_mean(h).empty());
  h.add_term(HamSeries::idx(*m, {0}, {1}), 3.0);
  HamSeries avg = x_mean(h);
  CHECK(avg.size() == 1);
  CHECK(avg.coeff(HamSeries::idx(*m, {0}, {1})) == cplx(3.0));
}

TEST_CASE("weighted Fourier norm") {
  Fourier w{{IVec{1, 1}, 1.0}};
  CHECK(norm_coeff(w, 0.5) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(norm_coeff(Fourier{{IVec{0, 0}, cplx(0, -2.5)}}, 3.0) == doctest::Approx(2.5));
  Fourier v{{IVec{2, -1}, 0.3}, {IVec{0, 1}, 1.0}};
  CHECK(norm_coeff(v, 0.2) <= norm_coeff(v, 0.4));
}

TEST_CASE("majorant norms") {
  auto m = ModeSystem::make({1}, 6);
  HamSeries h(m, 4, 4);
  h.add_term(HamSeries::idx(*m, {0}, {0}, {{5, 1}}, {{5, 1}}), 2.0);
  auto [a, b] = majorant_norms(h, {0.5, 0.5, 2});
  CHECK(a == doctest::Approx(0.5));
  CHECK(b == doctest::Approx(2.5));

  HamSeries y(m, 4, 4);
  y.add_term(HamSeries::idx(*m, {0}, {1}), cplx(3, 4));
  CHECK(majorant_norms(y, {0.5, 0.5, 2}).first == doctest::Approx(5 * 0.25));

  std::mt19937_64 rng(9);
  auto mm = modes12();
  DomainSpec d{0.4, 0.3, 2};
  for (int i = 0; i < 20; ++i) {
    HamSeries u = random_series(mm, 0, 0, 4, 8, rng), v = random_series(mm, 0, 0, 4, 8, rng);
    auto nu = majorant_norms(u, d), nv = majorant_norms(v, d), nuv = majorant_norms(add(u, v), d);
    CHECK(nuv.first <= (nu.first + nv.first) * (1 + 1e-14));
    CHECK(nuv.second <= (nu.second + nv.second) * (1 + 1e-14));
    CHECK(majorant_norms(scale(u, cplx(0, -3)), d).first == doctest::Approx(3 * nu.first));
    CHECK(nu.second >= nu.first);
  }
}

TEST_CASE("real series evaluate to real numbers at real points") {
  auto m = modes12();
  std::mt19937_64 rng(21);
  for (int i = 0; i < 20; ++i) {
    HamSeries h = random_series(m, 0, 0, 4, 12, rng);
    CHECK(reality_defect(h) <= 1e-15);
    PhasePoint w = real_point(*m, rng, 0.3);
    cplx v = evaluate(h, w);
    CHECK(std::abs(v.imag()) <= 1e-12 * std::max(1.0, std::abs(v)));
  }
}

TEST_CASE("reality closure under sum and product") {
  auto m = modes12();
  std::mt19937_64 rng(22);
  for (int i = 0; i < 20; ++i) {
    HamSeries u = random_series(m, 0, 0, 3, 6, rng), v = random_series(m, 0, 0, 3, 6, rng);
    CHECK(reality_defect(add(u, v)) <= 1e-14);
    CHECK(reality_defect(mul(u, v)) <= 1e-14);
    CHECK(reality_defect(scale(u, 2.5)) <= 1e-14);
  }
}

TEST_CASE("product is graded in degree and momentum") {
  auto m = modes12();
  std::mt19937_64 rng(23);
  HamSeries u = random_series(m, 2, 2, 2, 6, rng), v = random_series(m, -1, 3, 3, 6, rng);
  HamSeries p = mul(u, v);
  CHECK_FALSE(p.empty());
  for (auto& [t, c] : p.terms()) {
    CHECK(t.degree() == 5);
    CHECK(momentum(t, *m) == 1);
  }
}

TEST_CASE("Cauchy estimate on angle derivatives") {
  std::mt19937_64 rng(4);
  auto m = modes12();
  const double s = 0.5;
  for (int i = 0; i < 30; ++i) {
    HamSeries h = random_series(m, 0, 0, 2, 10, rng, 4);
    for (auto& [pat, f] : group_patterns(h)) {
      for (double sigma : {0.05, 0.1, 0.25, 0.4}) {
        for (int dir = 0; dir < 2; ++dir) {
          double lhs = norm_coeff(f_grad(f, dir), s - sigma);
          CHECK(lhs <= norm_coeff(f, s) / (std::exp(1.0) * sigma) * (1 + 1e-14));
        }
      }
    }
  }
}

TEST_CASE("serialization round trip is exact") {
  std::mt19937_64 rng(8);
  auto m = modes12();
  HamSeries h = mixed_momentum(m, rng);
  h = scale(h, cplx(1.0 / 3.0, std::sqrt(2.0)));
  HamSeries back = deserialize(serialize(h));
  CHECK(same_terms(back, h));
  CHECK(back.K() == h.K());
  CHECK(back.D() == h.D());
  CHECK(back.modes().same_as(h.modes()));
  CHECK(serialize(back) == serialize(h));
}

TEST_CASE("terms beyond cutoffs are dropped, invalid sites throw") {
  auto m = ModeSystem::make({1}, 3);
  HamSeries h(m, 2, 2);
  h.add_term(HamSeries::idx(*m, {3}), 1.0);
  h.add_term(HamSeries::idx(*m, {0}, {3}), 1.0);
  CHECK(h.empty());
  CHECK_THROWS(h.add_term(HamSeries::idx(*m, {0}, {0}, {{1, 1}}), 1.0));
  CHECK_THROWS(h.add_term(HamSeries::idx(*m, {0}, {0}, {{9, 1}}), 1.0));
}
