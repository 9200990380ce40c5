#include "doctest.h"

#include "dnlsnf/kam.hpp"
#include "dnlsnf/transform.hpp"

#include <cmath>
#include <memory>

using namespace dnlsnf;

namespace {

DnlsConfig small_model(double eps) {
  DnlsConfig c;
  c.tangent = {1, 2};
  c.zeta = {1.5, 1.5};
  c.jmax = 6;
  c.K = 6;
  c.D = 4;
  c.eps = eps;
  c.xi_set = {{1, 1.6180339887}, {2, 0.6180339887}};
  return c;
}

std::shared_ptr<TransformChain> identity_chain(const DnlsConfig& c) {
  auto ch = std::make_shared<TransformChain>();
  ch->modes = ModeSystem::make(c.tangent, c.jmax);
  ch->zeta = c.zeta;
  return ch;
}

std::shared_ptr<TransformChain> kam_chain(const DnlsConfig& c) {
  DnlsModel mdl = build_hamiltonian(c);
  KamSchedule sc;
  sc.varepsilon = c.eps;
  sc.K_glob = c.K;
  KamRun run = run_kam(mdl.nf, mdl.P, sc, 2, KamOptions{});
  REQUIRE(run.status == "ok");
  auto ch = identity_chain(c);
  ch->generators = run.generators;
  return ch;
}

}  // namespace

TEST_CASE("points of the torus are at distance zero") {
  for (bool with_kam : {false, true}) {
    DnlsConfig c = small_model(1e-3);
    auto ch = with_kam ? kam_chain(c) : identity_chain(c);
    TorusDistance d(ch, 1.0);
    for (double x1 : {0.3, 2.9, 5.0}) {
      std::vector<cplx> q = d.torus_point({x1, 1.7 - x1});
      CHECK(d(q).distance <= 1e-8);
    }
  }
}

TEST_CASE("single-mode displacement gives its amplitude") {
  DnlsConfig c = small_model(1e-3);
  auto ch = identity_chain(c);
  const double pp = 1.0;
  TorusDistance d(ch, pp);
  std::vector<cplx> base = d.torus_point({1.1, 0.4});
  for (int j : {3, -4, 6}) {
    for (double delta : {1e-3, 1e-2, 5e-2}) {
      std::vector<cplx> q = base;
      int idx = j < 0 ? j + c.jmax : j + c.jmax - 1;
      q[idx] += delta * std::pow(std::abs(j), -pp);
      CHECK(d(q).distance == doctest::Approx(delta).epsilon(1e-6));
    }
  }
}

TEST_CASE("distance grows with the perturbation amplitude") {
  DnlsConfig c = small_model(1e-3);
  auto ch = kam_chain(c);
  TorusDistance d(ch, 1.0);
  std::vector<cplx> base = d.torus_point({0.2, 2.2});
  std::vector<cplx> dir(base.size());
  for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = cplx(std::cos(1.3 * i), std::sin(0.7 * i)) / (1.0 + i);
  double prev = -1;
  for (double a : {1e-4, 1e-3, 5e-3, 1e-2, 3e-2}) {
    std::vector<cplx> q = base;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += a * dir[i];
    double v = d(q).distance;
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("chain maps to normal coordinates and back") {
  DnlsConfig c = small_model(1e-3);
  auto ch = kam_chain(c);
  PhasePoint w = PhasePoint::zeros(*ch->modes);
  w.x = {0.5, 1.5};
  w.y = {0.01, -0.02};
  w.z[0] = cplx(0.003, 0.001);
  w.zb[0] = std::conj(w.z[0]);
  PhasePoint back = ch->to_normal(ch->to_original(w));
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(back.x[i] - w.x[i]) <= 1e-9);
    CHECK(std::abs(back.y[i] - w.y[i]) <= 1e-9);
  }
  CHECK(std::abs(back.z[0] - w.z[0]) <= 1e-9);
}

TEST_CASE("linear model is stable") {
  DnlsConfig c = small_model(0.0);
  auto ch = identity_chain(c);
  StabilityConfig sc;
  sc.delta = 0.05;
  sc.horizon_override = 3.0;
  sc.samples_per_direction = 6;
  StabilityReport r = stability_experiment(c, ch, sc);
  CHECK(r.verdict == "stable (linear)");
  CHECK(r.pass);
  // the distance of a pure rotation never changes
  for (auto& s : r.samples) CHECK(std::abs(s.distance - r.initial_distance) <= 1e-6 * r.initial_distance);
  CHECK(std::isinf(r.T_star));
}

TEST_CASE("doubling delta does not decrease the maximal distance") {
  DnlsConfig c = small_model(1e-3);
  auto ch = kam_chain(c);
  for (std::uint64_t seed : {1, 2, 3}) {
    StabilityConfig sc;
    sc.seed = seed;
    sc.horizon_override = 2.0;
    sc.samples_per_direction = 4;
    sc.delta = 0.02;
    double small = stability_experiment(c, ch, sc).max_distance;
    sc.delta = 0.04;
    double large = stability_experiment(c, ch, sc).max_distance;
    CHECK(large >= small);
  }
}

TEST_CASE("initial normal data has the requested size") {
  auto m = ModeSystem::make({1, 2}, 8);
  for (double target : {1e-3, 0.02}) {
    std::vector<cplx> z = make_z0(*m, 2.0, target, 9);
    CHECK(sobolev_norm(z, *m, 2.0) == doctest::Approx(target).epsilon(1e-12));
  }
}
