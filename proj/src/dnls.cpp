#include "dnlsnf/dnls.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dnlsnf {

double DnlsConfig::xi(int j) const {
  auto it = xi_set.find(j);
  return it != xi_set.end() ? it->second : 1.5 / std::abs(j);
}

void DnlsConfig::validate() const {
  if (tangent.empty()) throw std::invalid_argument("need at least one tangent site");
  for (int j : tangent)
    if (j <= 0) throw std::invalid_argument("tangent sites must be positive");
  if (zeta.size() != tangent.size()) throw std::invalid_argument("zeta needs one entry per tangent site");
  for (double z : zeta)
    if (z < 1.0 || z > 2.0) throw std::invalid_argument("zeta_i must lie in [1,2]");
  for (auto& [j, x] : xi_set) {
    if (j == 0 || std::abs(j) > jmax) throw std::invalid_argument("xi set for a site outside the lattice");
    double lo = 1.0 / std::abs(j), hi = 2.0 / std::abs(j);
    if (x < lo - 1e-15 || x > hi + 1e-15) throw std::invalid_argument("xi_j must lie in [1,2]/|j|");
  }
  if (eps < 0) throw std::invalid_argument("eps must be nonnegative");
}

namespace {

// Generalised binomial coefficient binom(a, t) for real a.
double gbinom(double a, int t) {
  double r = 1.0;
  for (int i = 0; i < t; ++i) r *= (a - i) / (i + 1);
  return r;
}

// All alpha with 2|alpha| <= budget.
void alpha_list(int n, int budget, int i, IVec& cur, std::vector<IVec>& out) {
  if (i == n) {
    out.push_back(cur);
    return;
  }
  int used = 0;
  for (int q = 0; q < i; ++q) used += cur[q];
  for (int a = 0; 2 * (used + a) <= budget; ++a) {
    cur[i] = a;
    alpha_list(n, budget, i + 1, cur, out);
  }
  cur[i] = 0;
}

}  // namespace

DnlsModel build_hamiltonian(const DnlsConfig& cfg, double r) {
  cfg.validate();
  DnlsModel model;
  model.modes = ModeSystem::make(cfg.tangent, cfg.jmax);
  const auto& m = *model.modes;
  const int n = m.n;

  NormalForm& nf = model.nf;
  nf.modes = model.modes;
  nf.omega.resize(n);
  for (int i = 0; i < n; ++i) {
    nf.omega[i] = cfg.lambda(cfg.tangent[i]);
    nf.energy += nf.omega[i] * cfg.zeta[i];
  }
  for (int j : m.normal_sites) nf.Omega[j][IVec(n, 0)] = cfg.lambda(j);

  model.P = HamSeries(model.modes, cfg.K, cfg.D, true);
  if (cfg.eps == 0.0) return model;

  // Accumulate eps/(8 pi) q_a qbar_b q_c qbar_d over ordered tuples with a - b + c - d = 0.
  struct Key {
    std::vector<int> A, B;  // sorted q sites and qbar sites
    bool operator<(const Key& o) const { return std::tie(A, B) < std::tie(o.A, o.B); }
  };
  std::map<Key, double> mono;
  const std::vector<int> S = lattice_sites(cfg.jmax);
  const double c0 = cfg.eps / (8.0 * M_PI);
  for (int a : S)
    for (int b : S)
      for (int c : S) {
        int d = a - b + c;
        if (d == 0 || std::abs(d) > cfg.jmax) continue;
        Key key{{std::min(a, c), std::max(a, c)}, {std::min(b, d), std::max(b, d)}};
        mono[key] += c0;
      }

  auto tangent_pos = [&](int j) {
    for (int i = 0; i < n; ++i)
      if (m.tangent_sites[i] == j) return i;
    return -1;
  };

  double remainder = 0.0;
  for (auto& [key, coef] : mono) {
    IVec k(n, 0);
    std::vector<int> mpow(n, 0);
    SiteMap mu, gamma;
    for (int j : key.A) {
      int t = tangent_pos(j);
      if (t >= 0) {
        k[t] += 1;
        mpow[t] += 1;
      } else {
        site_add(mu, j, 1);
      }
    }
    for (int j : key.B) {
      int t = tangent_pos(j);
      if (t >= 0) {
        k[t] -= 1;
        mpow[t] += 1;
      } else {
        site_add(gamma, j, 1);
      }
    }
    double pref = coef;
    for (int i = 0; i < n; ++i) pref *= std::pow(double(m.tangent_sites[i]), 0.5 * mpow[i]);
    const int dn = site_total(mu) + site_total(gamma);
    if (dn > cfg.D) continue;
    std::vector<IVec> alphas;
    IVec cur(n, 0);
    alpha_list(n, cfg.D - dn + 2, 0, cur, alphas);
    for (auto& al : alphas) {
      double c = pref;
      int tot = 0;
      for (int i = 0; i < n; ++i) {
        double h = 0.5 * mpow[i];
        c *= gbinom(h, al[i]) * std::pow(cfg.zeta[i], h - al[i]);
        tot += al[i];
      }
      if (c == 0.0) continue;
      if (2 * tot + dn > cfg.D) {
        remainder += std::abs(c) * std::pow(r, 2 * tot + dn);
        continue;
      }
      model.P.add_term(TermIndex{k, al, mu, gamma}, c);
    }
  }
  model.P.prune();
  model.taylor_remainder = remainder;
  return model;
}

std::vector<int> lattice_sites(int jmax) {
  std::vector<int> s;
  for (int j = -jmax; j <= jmax; ++j)
    if (j != 0) s.push_back(j);
  return s;
}

DnlsSimulator::DnlsSimulator(const DnlsConfig& cfg)
    : jmax_(cfg.jmax), eps_(cfg.eps), sites_(lattice_sites(cfg.jmax)) {
  for (int j : sites_) lambda_.push_back(cfg.lambda(j));
}

double DnlsSimulator::energy(const std::vector<cplx>& q) const {
  double e = 0;
  for (std::size_t i = 0; i < q.size(); ++i) e += lambda_[i] / sites_[i] * std::norm(q[i]);
  if (eps_ == 0.0) return e;
  // sum_{a+c=b+d} q_a q_c conj(q_b q_d) = sum_s |S_s|^2 with S_s = sum_{a+c=s} q_a q_c.
  double quartic = 0;
  for (int s = -2 * jmax_; s <= 2 * jmax_; ++s) {
    cplx S = 0;
    for (int a : sites_) {
      int c = s - a;
      if (c == 0 || std::abs(c) > jmax_) continue;
      S += q[site_index(a)] * q[site_index(c)];
    }
    quartic += std::norm(S);
  }
  return e + eps_ / (8.0 * M_PI) * quartic;
}

double DnlsSimulator::mass(const std::vector<cplx>& q) const {
  double s = 0;
  for (auto& v : q) s += std::norm(v);
  return s;
}

double DnlsSimulator::gauge(const std::vector<cplx>& q) const {
  double s = 0;
  for (std::size_t i = 0; i < q.size(); ++i) s += std::norm(q[i]) / sites_[i];
  return s;
}

void DnlsSimulator::nonlinear_field(const std::vector<cplx>& q, std::vector<cplx>& out) const {
  // qdot_m = i m eps/(4 pi) sum_l S_{m+l} conj(q_l).
  const int J = jmax_;
  std::vector<cplx> S(4 * J + 1, 0.0);
  for (int a : sites_)
    for (int c : sites_) S[a + c + 2 * J] += q[site_index(a)] * q[site_index(c)];
  const double f = eps_ / (4.0 * M_PI);
  out.assign(q.size(), 0.0);
  for (int mm : sites_) {
    cplx acc = 0;
    for (int l : sites_) acc += S[mm + l + 2 * J] * std::conj(q[site_index(l)]);
    out[site_index(mm)] = cplx(0, mm * f) * acc;
  }
}

void DnlsSimulator::step(std::vector<cplx>& q, double dt, const IntegratorOptions& opt) const {
  for (std::size_t i = 0; i < q.size(); ++i) q[i] *= std::polar(1.0, lambda_[i] * dt / 2);
  if (eps_ != 0.0) {
    std::vector<cplx> q0 = q, mid(q.size()), f;
    for (int it = 0; it < opt.fp_max; ++it) {
      for (std::size_t i = 0; i < q.size(); ++i) mid[i] = 0.5 * (q0[i] + q[i]);
      nonlinear_field(mid, f);
      double change = 0, scale = 0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        cplx nq = q0[i] + dt * f[i];
        change = std::max(change, std::abs(nq - q[i]));
        scale = std::max(scale, std::abs(nq));
        q[i] = nq;
      }
      if (change <= opt.fp_tol * std::max(scale, 1.0)) break;
    }
  }
  for (std::size_t i = 0; i < q.size(); ++i) q[i] *= std::polar(1.0, lambda_[i] * dt / 2);
}

IntegrationStats DnlsSimulator::integrate(LatticeState& s, double T, const IntegratorOptions& opt,
                                          double sample_dt, const Observer& obs) const {
  IntegrationStats st;
  const double dir = T >= 0 ? 1.0 : -1.0;
  const double span = std::abs(T);
  const double t0 = s.t;
  const double E0 = energy(s.q);
  const double Escale = std::max(std::abs(E0), 1e-300);
  if (obs) obs(s);
  if (span == 0) return st;
  long nsteps = std::max(1L, static_cast<long>(std::ceil(span / opt.dt - 1e-9)));
  const double h = span / nsteps;
  long per_sample = 0;
  if (sample_dt > 0) per_sample = std::max(1L, static_cast<long>(std::llround(sample_dt / h)));
  double Ecur = E0;
  if (eps_ == 0.0) {
    // Each Strang step is then an exact rotation; evaluating it from the start avoids the
    // modulus drift that repeated multiplication by a rounded unit factor accumulates.
    const std::vector<cplx> qs = s.q;
    for (long k = 1; k <= nsteps; ++k) {
      bool emit = obs && (per_sample > 0 ? (k % per_sample == 0 || k == nsteps) : k == nsteps);
      if (!emit && k != nsteps) continue;
      const double tau = dir * h * k;
      for (std::size_t i = 0; i < qs.size(); ++i) s.q[i] = qs[i] * std::polar(1.0, lambda_[i] * tau);
      s.t = t0 + tau;
      if (emit) obs(s);
    }
    st.steps = nsteps;
    return st;
  }
  for (long k = 1; k <= nsteps; ++k) {
    std::vector<cplx> trial = s.q;
    step(trial, dir * h, opt);
    double E1 = energy(trial);
    double drift = std::abs(E1 - Ecur) / Escale;
    // Retry with halved substeps while the per-step drift is too large.
    int halvings = 0;
    while (drift > opt.drift_tol && halvings < opt.max_halvings) {
      ++halvings;
      ++st.rejections;
      trial = s.q;
      int sub = 1 << halvings;
      for (int q = 0; q < sub; ++q) step(trial, dir * h / sub, opt);
      E1 = energy(trial);
      drift = std::abs(E1 - Ecur) / Escale;
    }
    s.q = std::move(trial);
    s.t = t0 + dir * h * k;
    Ecur = E1;
    ++st.steps;
    st.max_step_drift = std::max(st.max_step_drift, drift);
    st.max_energy_drift = std::max(st.max_energy_drift, std::abs(E1 - E0) / Escale);
    if (obs && per_sample > 0 && (k % per_sample == 0 || k == nsteps)) obs(s);
    else if (obs && per_sample == 0 && k == nsteps) obs(s);
  }
  return st;
}

std::vector<cplx> to_lattice(const PhasePoint& w, const ModeSystem& m,
                             const std::vector<double>& zeta) {
  const int J = m.lattice_cutoff;
  std::vector<cplx> q(2 * J, 0.0);
  auto idx = [J](int j) { return j < 0 ? j + J : j + J - 1; };
  for (int i = 0; i < m.n; ++i) {
    int j = m.tangent_sites[i];
    // Complex y allowed; principal branch of the square root.
    q[idx(j)] = std::sqrt(double(j) * (zeta[i] + w.y[i])) * std::exp(cplx(0, 1) * w.x[i]);
  }
  for (std::size_t a = 0; a < m.normal_sites.size(); ++a) q[idx(m.normal_sites[a])] = w.z[a];
  return q;
}

PhasePoint from_lattice(const std::vector<cplx>& q, const ModeSystem& m,
                        const std::vector<double>& zeta) {
  const int J = m.lattice_cutoff;
  auto idx = [J](int j) { return j < 0 ? j + J : j + J - 1; };
  PhasePoint w = PhasePoint::zeros(m);
  for (int i = 0; i < m.n; ++i) {
    int j = m.tangent_sites[i];
    cplx v = q[idx(j)];
    w.x[i] = std::arg(v);
    w.y[i] = std::norm(v) / j - zeta[i];
  }
  for (std::size_t a = 0; a < m.normal_sites.size(); ++a) {
    w.z[a] = q[idx(m.normal_sites[a])];
    w.zb[a] = std::conj(w.z[a]);
  }
  return w;
}

double lattice_norm(const std::vector<cplx>& q, int jmax, double p) {
  double acc = 0;
  auto sites = lattice_sites(jmax);
  for (std::size_t i = 0; i < q.size(); ++i) acc += std::pow(std::abs(sites[i]), 2 * p) * std::norm(q[i]);
  return std::sqrt(acc);
}

}  // namespace dnlsnf
