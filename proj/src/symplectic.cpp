#include "dnlsnf/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace dnlsnf {

namespace {

const cplx I(0.0, 1.0);

struct Acc {
  std::unordered_map<TermIndex, cplx, TermHash> m;
  void add(TermIndex&& t, cplx c) { m[std::move(t)] += c; }
};

bool k_nonzero(const TermIndex& t) {
  return std::any_of(t.k.begin(), t.k.end(), [](int v) { return v != 0; });
}
bool alpha_nonzero(const TermIndex& t) {
  return std::any_of(t.alpha.begin(), t.alpha.end(), [](int v) { return v != 0; });
}

}  // namespace

namespace {

// A(X,Y) = <d_x X, d_y Y> + i sum_j j d_{z_j}X d_{zb_j}Y, so {U,V} = A(U,V) - A(V,U).
// Both halves are always accumulated with X as the outer loop, which makes the bracket
// antisymmetric bit for bit.
void half_bracket(const HamSeries& X, const HamSeries& Y, int K, int D, Acc& acc) {
  const int n = X.modes().n;
  using Entry = std::pair<const TermIndex*, cplx>;
  std::vector<Entry> y_alpha;
  std::unordered_map<int, std::vector<Entry>> y_by_gamma;
  for (auto& [t, c] : Y.terms()) {
    if (alpha_nonzero(t)) y_alpha.push_back({&t, c});
    for (auto& [j, p] : t.gamma) y_by_gamma[j].push_back({&t, c});
  }
  auto combine_k = [&](const TermIndex& a, const TermIndex& b, IVec& k) {
    k.resize(n);
    int s = 0;
    for (int i = 0; i < n; ++i) {
      k[i] = a.k[i] + b.k[i];
      s += std::abs(k[i]);
    }
    return s <= K;
  };

  for (auto& [tx, cx] : X.terms()) {
    const int dx = tx.degree();
    if (k_nonzero(tx)) {
      for (auto& [typ, cy] : y_alpha) {
        const TermIndex& ty = *typ;
        if (dx + ty.degree() - 2 > D) continue;
        IVec k;
        if (!combine_k(tx, ty, k)) continue;
        for (int i = 0; i < n; ++i) {
          if (tx.k[i] == 0 || ty.alpha[i] == 0) continue;
          TermIndex t;
          t.k = k;
          t.alpha.resize(n);
          for (int q = 0; q < n; ++q) t.alpha[q] = tx.alpha[q] + ty.alpha[q] - (q == i ? 1 : 0);
          t.mu = site_sum(tx.mu, ty.mu);
          t.gamma = site_sum(tx.gamma, ty.gamma);
          acc.add(std::move(t), I * static_cast<double>(tx.k[i]) * static_cast<double>(ty.alpha[i]) * cx * cy);
        }
      }
    }
    for (auto& [j, px] : tx.mu) {
      auto it = y_by_gamma.find(j);
      if (it == y_by_gamma.end()) continue;
      for (auto& [typ, cy] : it->second) {
        const TermIndex& ty = *typ;
        if (dx + ty.degree() - 2 > D) continue;
        IVec k;
        if (!combine_k(tx, ty, k)) continue;
        int py = site_pow(ty.gamma, j);
        TermIndex t;
        t.k = std::move(k);
        t.alpha.resize(n);
        for (int q = 0; q < n; ++q) t.alpha[q] = tx.alpha[q] + ty.alpha[q];
        t.mu = site_sum(tx.mu, ty.mu);
        site_add(t.mu, j, -1);
        t.gamma = site_sum(tx.gamma, ty.gamma);
        site_add(t.gamma, j, -1);
        acc.add(std::move(t), I * static_cast<double>(j) * static_cast<double>(px * py) * cx * cy);
      }
    }
  }
}

}  // namespace

HamSeries poisson_bracket(const HamSeries& U, const HamSeries& V) {
  check_compatible(U, V);
  const int K = std::min(U.K(), V.K());
  const int D = std::min(U.D(), V.D());
  Acc plus, minus;
  half_bracket(U, V, K, D, plus);
  half_bracket(V, U, K, D, minus);
  for (auto& [t, c] : minus.m) plus.m.try_emplace(t, cplx(0.0));
  HamSeries out(U.modes_ptr(), K, D, U.real_flag() && V.real_flag());
  for (auto& [t, c] : plus.m) {
    auto it = minus.m.find(t);
    cplx v = it == minus.m.end() ? c : c - it->second;
    if (v != cplx(0.0)) out.add_term(t, v);
  }
  out.prune();
  return out;
}

HamSeries d_x(const HamSeries& h, int i) {
  HamSeries out = h.empty_like();
  out.set_real_flag(false);
  for (auto& [t, c] : h.terms())
    if (t.k[i]) out.add_term(t, I * static_cast<double>(t.k[i]) * c);
  return out;
}

HamSeries d_y(const HamSeries& h, int i) {
  HamSeries out = h.empty_like();
  for (auto& [t, c] : h.terms())
    if (t.alpha[i]) {
      TermIndex s = t;
      s.alpha[i] -= 1;
      out.add_term(s, static_cast<double>(t.alpha[i]) * c);
    }
  return out;
}

HamSeries d_z(const HamSeries& h, int site) {
  HamSeries out = h.empty_like();
  out.set_real_flag(false);
  for (auto& [t, c] : h.terms()) {
    int p = site_pow(t.mu, site);
    if (!p) continue;
    TermIndex s = t;
    site_add(s.mu, site, -1);
    out.add_term(s, static_cast<double>(p) * c);
  }
  return out;
}

HamSeries d_zb(const HamSeries& h, int site) {
  HamSeries out = h.empty_like();
  out.set_real_flag(false);
  for (auto& [t, c] : h.terms()) {
    int p = site_pow(t.gamma, site);
    if (!p) continue;
    TermIndex s = t;
    site_add(s.gamma, site, -1);
    out.add_term(s, static_cast<double>(p) * c);
  }
  return out;
}

VectorFieldEval vector_field(const HamSeries& W, const PhasePoint& w) {
  const auto& m = W.modes();
  const int n = m.n;
  const std::size_t nn = m.normal_sites.size();
  VectorFieldEval out;
  std::vector<cplx> gx(n, 0.0), gy(n, 0.0), gz(nn, 0.0), gzb(nn, 0.0);
  for (auto& [t, c] : W.terms()) {
    cplx ph = 0.0;
    for (int i = 0; i < n; ++i) ph += static_cast<double>(t.k[i]) * w.x[i];
    cplx e = c * std::exp(I * ph);
    // Monomial factors, kept separately so partial derivatives skip one power.
    cplx ypow = 1.0;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < t.alpha[i]; ++a) ypow *= w.y[i];
    cplx zpow = 1.0;
    for (auto& [j, p] : t.mu)
      for (int a = 0; a < p; ++a) zpow *= w.z[m.normal_index(j)];
    for (auto& [j, p] : t.gamma)
      for (int a = 0; a < p; ++a) zpow *= w.zb[m.normal_index(j)];
    cplx full = e * ypow * zpow;
    for (int i = 0; i < n; ++i) {
      if (t.k[i]) gx[i] += I * static_cast<double>(t.k[i]) * full;
      if (t.alpha[i]) {
        cplx yp = 1.0;
        for (int q = 0; q < n; ++q)
          for (int a = 0; a < t.alpha[q] - (q == i ? 1 : 0); ++a) yp *= w.y[q];
        gy[i] += static_cast<double>(t.alpha[i]) * e * yp * zpow;
      }
    }
    auto partial = [&](const SiteMap& own, bool is_mu, std::vector<cplx>& g) {
      for (auto& [j, p] : own) {
        cplx zp = 1.0;
        for (auto& [jj, pp] : t.mu)
          for (int a = 0; a < pp - ((is_mu && jj == j) ? 1 : 0); ++a) zp *= w.z[m.normal_index(jj)];
        for (auto& [jj, pp] : t.gamma)
          for (int a = 0; a < pp - ((!is_mu && jj == j) ? 1 : 0); ++a) zp *= w.zb[m.normal_index(jj)];
        g[m.normal_index(j)] += static_cast<double>(p) * e * ypow * zp;
      }
    };
    partial(t.mu, true, gz);
    partial(t.gamma, false, gzb);
  }
  out.dx = gy;
  out.dy.resize(n);
  for (int i = 0; i < n; ++i) out.dy[i] = -gx[i];
  out.dz.resize(nn);
  out.dzb.resize(nn);
  for (std::size_t q = 0; q < nn; ++q) {
    double j = m.normal_sites[q];
    out.dz[q] = I * j * gzb[q];
    out.dzb[q] = -I * j * gz[q];
  }
  return out;
}

double vf_norm_at(const HamSeries& W, const DomainSpec& d, double p,
                  const std::vector<PhasePoint>& pts) {
  if (W.empty()) return 0.0;
  const auto& m = W.modes();
  double best = 0;
  for (auto& w : pts) {
    auto v = vector_field(W, w);
    double ny = 0, nx = 0;
    for (auto& c : v.dx) ny = std::max(ny, std::abs(c));  // d_y W
    for (auto& c : v.dy) nx = std::max(nx, std::abs(c));  // d_x W
    double nz = sobolev_norm(v.dz, m, p), nzb = sobolev_norm(v.dzb, m, p);
    best = std::max(best, ny + nx / (d.r * d.r) + (nz + nzb) / d.r);
  }
  return best;
}

double vf_norm(const HamSeries& W, const DomainSpec& d, double p, const GridSpec& g) {
  return vf_norm_at(W, d, p, sample_domain(W.modes(), d, g));
}

LieResult lie_transform(const HamSeries& H, const HamSeries& F, const LiePlan& plan) {
  if (plan.order_cap < 1) throw std::invalid_argument("Lie order cap must be >= 1");
  LieResult res;
  res.value = plan.increment_only ? H.empty_like() : H;
  if (F.empty() || H.empty()) return res;
  const double base = std::max(majorant_norms(H, plan.domain).first, 1e-300);
  HamSeries term = H;
  double prev = base;
  int growth = 0;
  for (int j = 1; j <= plan.order_cap; ++j) {
    term = scale(poisson_bracket(term, F), 1.0 / j);
    double nt = majorant_norms(term, plan.domain).first;
    res.term_norms.push_back(nt);
    if (term.empty()) {
      res.orders_used = j;
      res.remainder = 0.0;
      return res;
    }
    res.value = add(res.value, term);
    res.orders_used = j;
    // Smallness gate: summands must shrink geometrically.
    if (nt > 0.5 * prev) ++growth;
    prev = nt;
    if (nt < plan.stop_rel * base) {
      res.remainder = 2.0 * nt;
      return res;
    }
  }
  HamSeries next = scale(poisson_bracket(term, F), 1.0 / (plan.order_cap + 1));
  res.remainder = 2.0 * majorant_norms(next, plan.domain).first;
  if (growth > plan.order_cap / 2 && res.remainder > 1e-12 * base) res.converged = false;
  return res;
}

PhasePoint flow(const HamSeries& F, const PhasePoint& w, double t, int steps) {
  auto axpy = [](const PhasePoint& a, const VectorFieldEval& v, double h) {
    PhasePoint r = a;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      r.x[i] += h * v.dx[i];
      r.y[i] += h * v.dy[i];
    }
    for (std::size_t i = 0; i < r.z.size(); ++i) {
      r.z[i] += h * v.dz[i];
      r.zb[i] += h * v.dzb[i];
    }
    return r;
  };
  PhasePoint cur = w;
  double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    auto k1 = vector_field(F, cur);
    auto k2 = vector_field(F, axpy(cur, k1, h / 2));
    auto k3 = vector_field(F, axpy(cur, k2, h / 2));
    auto k4 = vector_field(F, axpy(cur, k3, h));
    for (std::size_t i = 0; i < cur.x.size(); ++i) {
      cur.x[i] += h / 6 * (k1.dx[i] + 2.0 * k2.dx[i] + 2.0 * k3.dx[i] + k4.dx[i]);
      cur.y[i] += h / 6 * (k1.dy[i] + 2.0 * k2.dy[i] + 2.0 * k3.dy[i] + k4.dy[i]);
    }
    for (std::size_t i = 0; i < cur.z.size(); ++i) {
      cur.z[i] += h / 6 * (k1.dz[i] + 2.0 * k2.dz[i] + 2.0 * k3.dz[i] + k4.dz[i]);
      cur.zb[i] += h / 6 * (k1.dzb[i] + 2.0 * k2.dzb[i] + 2.0 * k3.dzb[i] + k4.dzb[i]);
    }
  }
  return cur;
}

}  // namespace dnlsnf
