#include "dnlsnf/transform.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dnlsnf {

namespace {

const cplx I(0.0, 1.0);

int min_degree(const HamSeries& F) {
  int d = std::numeric_limits<int>::max();
  for (auto& [t, c] : F.terms()) d = std::min(d, t.degree());
  return d;
}

bool on_zero_section(const PhasePoint& w) {
  for (auto& v : w.y)
    if (v != cplx(0.0)) return false;
  for (std::size_t a = 0; a < w.z.size(); ++a)
    if (w.z[a] != cplx(0.0) || w.zb[a] != cplx(0.0)) return false;
  return true;
}

}  // namespace

PhasePoint TransformChain::to_original(const PhasePoint& w_final) const {
  PhasePoint w = w_final;
  for (auto it = generators.rbegin(); it != generators.rend(); ++it) {
    if (it->empty()) continue;
    // Every partial derivative of a degree >= 3 generator vanishes on y = z = 0.
    if (min_degree(*it) >= 3 && on_zero_section(w)) continue;
    w = flow(*it, w, 1.0, rk_steps);
  }
  return w;
}

PhasePoint TransformChain::to_normal(const PhasePoint& w_orig) const {
  PhasePoint w = w_orig;
  for (const auto& F : generators) {
    if (F.empty()) continue;
    if (min_degree(F) >= 3 && on_zero_section(w)) continue;
    w = flow(F, w, -1.0, rk_steps);
  }
  return w;
}

std::vector<cplx> TransformChain::lattice_of(const PhasePoint& w_final) const {
  return to_lattice(to_original(w_final), *modes, zeta);
}

PhasePoint TransformChain::normal_of(const std::vector<cplx>& q) const {
  return to_normal(from_lattice(q, *modes, zeta));
}

// ---------------------------------------------------------------- torus distance

TorusDistance::TorusDistance(std::shared_ptr<const TransformChain> chain, double p_prime, int G0,
                             int G_max, double rel_tol)
    : chain_(std::move(chain)), p_(p_prime), G0_(G0), Gmax_(G_max), tol_(rel_tol) {
  for (int j : lattice_sites(chain_->modes->lattice_cutoff))
    weight_.push_back(std::pow(std::abs(double(j)), 2.0 * p_));
}

std::vector<cplx> TorusDistance::torus_point(const std::vector<double>& x) const {
  PhasePoint w = PhasePoint::zeros(*chain_->modes);
  for (std::size_t i = 0; i < x.size(); ++i) w.x[i] = x[i];
  return chain_->lattice_of(w);
}

const TorusDistance::Level& TorusDistance::level(int G) const {
  auto it = levels_.find(G);
  if (it != levels_.end()) return it->second;
  const int n = chain_->modes->n;
  Level L;
  L.G = G;
  TorusGrid grid{n, G};
  for (std::size_t g = 0; g < grid.size(); ++g) L.samples.push_back(torus_point(grid.point(g)));
  const std::size_t S = weight_.size();
  L.coeffs.resize(S);
  std::vector<cplx> vals(grid.size());
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t g = 0; g < grid.size(); ++g) vals[g] = L.samples[g][s];
    L.coeffs[s] = from_grid(vals, grid, n * G);
  }
  return levels_.emplace(G, std::move(L)).first->second;
}

TorusDistance::Result TorusDistance::minimise(const std::vector<cplx>& q, const Level& L) const {
  const int n = chain_->modes->n;
  const std::size_t S = weight_.size();
  auto objective = [&](const std::vector<cplx>& T) {
    double f = 0;
    for (std::size_t s = 0; s < S; ++s) f += weight_[s] * std::norm(q[s] - T[s]);
    return f;
  };
  TorusGrid grid{n, L.G};
  std::size_t best = 0;
  double fbest = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < L.samples.size(); ++g) {
    double f = objective(L.samples[g]);
    if (f < fbest) fbest = f, best = g;
  }
  std::vector<double> x = grid.point(best);

  // Interpolant value and gradient at x.
  auto eval = [&](const std::vector<double>& xx, std::vector<cplx>& T, std::vector<std::vector<cplx>>* dT) {
    T.assign(S, 0.0);
    if (dT) dT->assign(n, std::vector<cplx>(S, 0.0));
    for (std::size_t s = 0; s < S; ++s) {
      for (auto& [k, c] : L.coeffs[s]) {
        double ph = 0;
        for (int i = 0; i < n; ++i) ph += k[i] * xx[i];
        cplx v = c * std::exp(I * ph);
        T[s] += v;
        if (dT)
          for (int i = 0; i < n; ++i)
            if (k[i]) (*dT)[i][s] += I * double(k[i]) * v;
      }
    }
  };

  std::vector<cplx> T;
  std::vector<std::vector<cplx>> dT;
  eval(x, T, &dT);
  double f = objective(T);
  for (int it = 0; it < 60; ++it) {
    std::vector<double> A(n * n, 0.0), g(n, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      cplx r = q[s] - T[s];
      for (int a = 0; a < n; ++a) {
        g[a] += weight_[s] * std::real(std::conj(dT[a][s]) * r);
        for (int b = 0; b < n; ++b) A[a * n + b] += weight_[s] * std::real(std::conj(dT[a][s]) * dT[b][s]);
      }
    }
    // Small dense solve by Gaussian elimination with partial pivoting.
    std::vector<double> dx = g;
    std::vector<double> Am = A;
    bool singular = false;
    for (int c = 0; c < n && !singular; ++c) {
      int piv = c;
      for (int r = c + 1; r < n; ++r)
        if (std::abs(Am[r * n + c]) > std::abs(Am[piv * n + c])) piv = r;
      if (std::abs(Am[piv * n + c]) < 1e-300) {
        singular = true;
        break;
      }
      if (piv != c) {
        for (int k = 0; k < n; ++k) std::swap(Am[c * n + k], Am[piv * n + k]);
        std::swap(dx[c], dx[piv]);
      }
      for (int r = c + 1; r < n; ++r) {
        double fct = Am[r * n + c] / Am[c * n + c];
        for (int k = c; k < n; ++k) Am[r * n + k] -= fct * Am[c * n + k];
        dx[r] -= fct * dx[c];
      }
    }
    if (singular) break;
    for (int c = n - 1; c >= 0; --c) {
      for (int k = c + 1; k < n; ++k) dx[c] -= Am[c * n + k] * dx[k];
      dx[c] /= Am[c * n + c];
    }
    double step = 1.0;
    bool moved = false;
    std::vector<double> xn(n);
    std::vector<cplx> Tn;
    for (int ls = 0; ls < 30; ++ls) {
      for (int i = 0; i < n; ++i) xn[i] = x[i] + step * dx[i];
      eval(xn, Tn, nullptr);
      double fn = objective(Tn);
      if (fn <= f) {
        moved = true;
        f = fn;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    double dn = 0;
    for (int i = 0; i < n; ++i) dn = std::max(dn, std::abs(step * dx[i]));
    x = xn;
    eval(x, T, &dT);
    if (dn < 1e-14) break;
  }
  return {std::sqrt(std::max(f, 0.0)), x, L.G};
}

TorusDistance::Result TorusDistance::operator()(const std::vector<cplx>& q) const {
  if (q.size() != weight_.size()) throw std::invalid_argument("lattice state has the wrong size");
  Result prev = minimise(q, level(G0_));
  for (int G = 2 * G0_; G <= Gmax_; G *= 2) {
    Result cur = minimise(q, level(G));
    bool done = std::abs(cur.distance - prev.distance) <= tol_ * std::max(cur.distance, 1e-300);
    prev = cur;
    if (done) break;
  }
  return prev;
}

// ---------------------------------------------------------------- stability

std::vector<cplx> make_z0(const ModeSystem& m, double p, double target, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
  std::vector<cplx> z(m.normal_sites.size());
  for (std::size_t a = 0; a < z.size(); ++a)
    z[a] = std::pow(std::abs(double(m.normal_sites[a])), -p) * std::exp(I * ph(rng));
  double nrm = sobolev_norm(z, m, p);
  if (nrm > 0)
    for (auto& v : z) v *= target / nrm;
  return z;
}

StabilityReport stability_experiment(const DnlsConfig& dcfg, std::shared_ptr<const TransformChain> chain,
                                     const StabilityConfig& sc) {
  const ModeSystem& m = *chain->modes;
  if (dcfg.jmax != m.lattice_cutoff) throw std::invalid_argument("simulator and chain disagree on J_max");
  if (!(sc.delta > 0)) throw std::invalid_argument("delta must be positive");
  StabilityReport rep;
  rep.delta = sc.delta;
  rep.horizon = sc.horizon_override > 0 ? sc.horizon_override : std::pow(sc.delta, -sc.M / 4.0);
  rep.T_j.assign(m.n, std::numeric_limits<double>::infinity());

  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> ux(0.0, 2.0 * M_PI);
  PhasePoint w0 = PhasePoint::zeros(m);
  for (int i = 0; i < m.n; ++i) w0.x[i] = sc.x0.empty() ? ux(rng) : sc.x0.at(i);
  std::vector<cplx> z0 = make_z0(m, sc.p, sc.z0_fraction * sc.delta, rng());
  for (std::size_t a = 0; a < z0.size(); ++a) {
    w0.z[a] = z0[a];
    w0.zb[a] = std::conj(z0[a]);
  }
  std::vector<cplx> q0 = chain->lattice_of(w0);

  DnlsSimulator sim(dcfg);
  TorusDistance dist(chain, sc.p / 2.0);
  double E0 = sim.energy(q0);
  auto observe = [&](const LatticeState& s) {
    if (s.t == 0.0 && !rep.samples.empty()) return;
    StabilitySample o;
    o.t = s.t;
    o.H = sim.energy(s.q);
    PhasePoint w = chain->normal_of(s.q);
    double nz = sobolev_norm(w.z, m, sc.p / 2.0);
    o.Ntilde = nz * nz;
    for (int i = 0; i < m.n; ++i) o.Ytilde.push_back(w.y[i].real());
    o.distance = dist(s.q).distance;
    rep.samples.push_back(o);
  };

  double sdt = rep.horizon / std::max(1, sc.samples_per_direction);
  LatticeState fwd{q0, 0.0};
  rep.forward = sim.integrate(fwd, rep.horizon, sc.integ, sdt, observe);
  LatticeState bwd{q0, 0.0};
  rep.backward = sim.integrate(bwd, -rep.horizon, sc.integ, sdt, observe);
  std::sort(rep.samples.begin(), rep.samples.end(),
            [](const StabilitySample& a, const StabilitySample& b) { return a.t < b.t; });

  const double d2 = sc.delta * sc.delta;
  for (auto& o : rep.samples) {
    if (o.t == 0.0) rep.initial_distance = o.distance;
    rep.max_distance = std::max(rep.max_distance, o.distance);
    rep.max_energy_drift = std::max(rep.max_energy_drift, std::abs(o.H - E0) / std::max(std::abs(E0), 1e-300));
    if (o.Ntilde >= 4 * d2) rep.T_star = std::min(rep.T_star, std::abs(o.t));
    for (int i = 0; i < m.n; ++i)
      if (o.Ytilde[i] >= 8 * d2) rep.T_j[i] = std::min(rep.T_j[i], std::abs(o.t));
  }
  rep.pass = rep.max_distance <= 2.0 * sc.delta;
  if (dcfg.eps == 0.0) rep.verdict = rep.pass ? "stable (linear)" : "unstable (linear)";
  else rep.verdict = rep.pass ? "stable" : "unstable";
  return rep;
}

}  // namespace dnlsnf
