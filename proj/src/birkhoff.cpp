#include "dnlsnf/birkhoff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dnlsnf {

namespace {

const cplx I(0.0, 1.0);

void accumulate(HamSeries& out, const HamSeries& h, cplx f = 1.0) {
  for (auto& [t, c] : h.terms()) out.add_term(t, f * c);
}

Fourier pattern_L(const NormalForm& nf, const Pattern& p) {
  Fourier L;
  for (auto& [j, e] : p.mu) {
    auto it = nf.Omega.find(j);
    if (it != nf.Omega.end()) L = f_add(L, it->second, double(e));
  }
  for (auto& [j, e] : p.gamma) {
    auto it = nf.Omega.find(j);
    if (it != nf.Omega.end()) L = f_add(L, it->second, -double(e));
  }
  return L;
}

int class_of(const Pattern& p) {
  int b = 0;
  for (auto& [j, e] : p.mu) b += j * e;
  for (auto& [j, e] : p.gamma) b -= j * e;
  return b;
}

KFilter keep_for(const ModeSystem& m, int b) {
  std::vector<int> js = m.tangent_sites;
  return [js, b](const IVec& k) {
    int s = 0;
    for (std::size_t i = 0; i < js.size(); ++i) s += k[i] * js[i];
    return s == -b;
  };
}

int abs_alpha(const IVec& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

// Signed l = mu - gamma split into positive and negative parts.
std::pair<SiteMap, SiteMap> signed_l(const Pattern& p) {
  SiteMap pos, neg;
  std::map<int, int> diff;
  for (auto& [j, e] : p.mu) diff[j] += e;
  for (auto& [j, e] : p.gamma) diff[j] -= e;
  for (auto& [j, e] : diff)
    if (e != 0) (e > 0 ? pos : neg).push_back({j, std::abs(e)});
  return {pos, neg};
}

bool is_paired(const Pattern& p) { return p.mu == p.gamma; }

std::string dispatch_label(const Pattern& p, int N, double sub_thr) {
  auto [pos, neg] = signed_l(p);
  std::vector<int> hat;  // hat sites with multiplicity
  for (auto* m : {&pos, &neg})
    for (auto& [j, e] : *m)
      if (std::abs(j) > N)
        for (int q = 0; q < e; ++q) hat.push_back(j);
  if (hat.empty()) return "case4";
  if (hat.size() == 2 && hat[0] == -hat[1]) return "case3";
  int mx = 0;
  for (int j : hat) mx = std::max(mx, std::abs(j));
  return mx > sub_thr ? "subcase1" : "subcase2";
}

HamSeries select(const HamSeries& h, const std::function<bool(const TermIndex&)>& pred) {
  HamSeries out = h.empty_like();
  for (auto& [t, c] : h.terms())
    if (pred(t)) out.add_term(t, c);
  return out;
}

}  // namespace

void BirkhoffConfig::validate(int n, int jmax) const {
  if (M < 0) throw std::invalid_argument("Birkhoff order M must be nonnegative");
  if (N_split < 1 || N_split > jmax) throw std::invalid_argument("split index N must lie in [1, jmax]");
  if (!(rho > 0 && rho < 1)) throw std::invalid_argument("rho must lie in (0,1)");
  if (!(eta_acute > 0)) throw std::invalid_argument("Birkhoff eta must be positive");
  if (!(tau > n)) throw std::invalid_argument("Birkhoff tau must exceed the number of tangent sites");
}

int hat_count(const SiteMap& m, int N) {
  int h = 0;
  for (auto& [j, e] : m)
    if (std::abs(j) > N) h += e;
  return h;
}

const char* class_name(TermClass c) {
  switch (c) {
    case TermClass::Z: return "Z";
    case TermClass::R: return "R";
    case TermClass::Q: return "Q";
    default: return "T";
  }
}

TermClass classify_term(const TermIndex& t, const BirkhoffConfig& cfg) {
  int d = t.degree();
  if (d <= 2 || d >= cfg.M + 3) return TermClass::T;
  int N = cfg.N_split;
  if (hat_count(t.mu, N) + hat_count(t.gamma, N) >= 3) return TermClass::Q;
  if (t.mu == t.gamma) {
    int hm = hat_count(t.mu, N);
    if (hm == 1 || (hm == 0 && is_zero_k(t.k))) return TermClass::Z;
  }
  return TermClass::R;
}

Classified classify_terms(const HamSeries& P, const BirkhoffConfig& cfg) {
  Classified c{P.empty_like(), P.empty_like(), P.empty_like(), P.empty_like()};
  for (auto& [t, v] : P.terms()) {
    switch (classify_term(t, cfg)) {
      case TermClass::Z: c.Z.add_term(t, v); break;
      case TermClass::R: c.R.add_term(t, v); break;
      case TermClass::Q: c.Q.add_term(t, v); break;
      case TermClass::T: c.T.add_term(t, v); break;
    }
  }
  return c;
}

double resonance_threshold(double eta_acute, int M, int N, int k_l1, const SiteMap& l_pos,
                           const SiteMap& l_neg, double tau) {
  int acute = 0;
  for (auto* m : {&l_pos, &l_neg})
    for (auto& [j, e] : *m)
      if (std::abs(j) <= N) acute += e;
  Pattern p{{}, l_pos, l_neg};
  double w = lattice_weight(p);
  double logC = double(acute + 4) * (acute + 4) * std::log(double(N));
  return eta_acute * w * std::exp(-logC) / (std::pow(4.0, M) * std::pow(k_l1 + 1.0, tau));
}

BirkhoffDerived birkhoff_derived(const NormalForm& nf, const BirkhoffConfig& cfg, int K_series) {
  BirkhoffDerived d;
  const auto& m = *nf.modes;
  d.c1 = cfg.c1;
  d.c2 = cfg.c2;
  if (d.c1 <= 0 || d.c2 <= 0) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (int j : m.normal_sites) {
      double r = std::abs(nf.Omega_mean(j)) / (double(j) * j);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    if (d.c1 <= 0) d.c1 = lo;
    if (d.c2 <= 0) d.c2 = hi;
  }
  d.C0 = cfg.C0 > 0 ? cfg.C0 : 40.0 * (cfg.tau + m.n) + 1.0;
  double N = cfg.N_split;
  d.subcase_threshold = 8.0 * d.c2 * (cfg.M + 2) * N * N / d.c1;
  double kr = cfg.M * N * N * std::abs(std::log(cfg.rho));
  d.K_raw = static_cast<int>(std::min(kr, 1e9));
  std::ostringstream note;
  double upper = std::pow(cfg.eta_acute / (2.0 * cfg.rho), 1.0 / (2.0 * d.C0 * std::pow(cfg.M + 7.0, 2)));
  if (!(N > cfg.N0 && N < upper)) {
    d.window_ok = false;
    note << "N=" << cfg.N_split << " outside (" << cfg.N0 << ", " << upper << ")";
  }
  if (cfg.rho0 > 0 && cfg.rho >= cfg.rho0) {
    d.window_ok = false;
    note << (note.tellp() > 0 ? "; " : "") << "rho >= rho0";
  }
  if (d.K_raw > K_series) note << (note.tellp() > 0 ? "; " : "") << "K clamped to " << K_series;
  d.window_note = note.str();
  return d;
}

BirkhoffStepResult birkhoff_step(const NormalForm& nf, const HamSeries& P, int j0,
                                 const BirkhoffConfig& cfg, const DioParams& dio) {
  const auto& m = P.modes();
  const int deg = j0 + 1;
  const int N = cfg.N_split;
  BirkhoffDerived der = birkhoff_derived(nf, cfg, P.K());
  BirkhoffStepResult st;
  st.K_used = std::min(der.K_raw, P.K());
  const int K = st.K_used;
  st.F = P.empty_like();
  st.Zhat = P.empty_like();
  st.That = P.empty_like();
  HamSeries Nser = nf.to_series(P.K(), P.D());

  Classified before = classify_terms(P, cfg);
  HamSeries rem = select(before.R, [&](const TermIndex& t) { return t.degree() == deg; });

  int top = deg / 2;
  for (int a = top; a >= 0; --a) {
    HamSeries level = select(rem, [&](const TermIndex& t) { return abs_alpha(t.alpha) == a; });
    if (level.empty()) continue;
    HamSeries G = P.empty_like();
    for (auto& [pat, f0] : group_patterns(level)) {
      TermIndex probe{IVec(m.n, 0), pat.alpha, pat.mu, pat.gamma};
      if (classify_term(probe, cfg) == TermClass::Q) continue;  // coupling spill into Q stays there
      Fourier f = f0;
      if (is_paired(pat)) {
        int hm = hat_count(pat.mu, N);
        if (hm == 1) {
          add_pattern(st.Zhat, pat, f);
          continue;
        }
        cplx mean = f_mean(f, m.n);
        if (mean != cplx(0.0)) st.Zhat.add_term(probe, mean);
        f = f_zero_mean(f);
      }
      for (auto& [k, c] : f)
        if (l1(k) > K) st.That.add_term(TermIndex{k, pat.alpha, pat.mu, pat.gamma}, c);
      Fourier R = f_truncate(f, K);
      if (R.empty()) continue;

      Fourier L = pattern_L(nf, pat);
      double Lmean = f_mean(L, m.n).real();
      Fourier Lt = f_zero_mean(L);
      KFilter keep = keep_for(m, class_of(pat));
      auto [lpos, lneg] = signed_l(pat);
      for (auto& k : l1_ball(m.n, K, keep)) {
        if (is_zero_k(k) && is_paired(pat)) continue;
        double dv = std::abs(Lmean + dot(k, nf.omega));
        double thr = resonance_threshold(cfg.eta_acute, cfg.M, N, l1(k), lpos, lneg, cfg.tau);
        if (dv < thr) throw ResonanceError("Birkhoff divisor below the resonance threshold", k, dv);
      }

      BirkhoffSolve bs;
      bs.pattern = pat;
      bs.dispatch = dispatch_label(pat, N, der.subcase_threshold);
      HomologicalProblem hp;
      hp.omega = nf.omega;
      hp.L_mean = Lmean;
      hp.L_tilde = Lt;
      hp.R = R;
      hp.K = K;
      hp.keep = keep;
      hp.dio = dio;
      if (!Lt.empty()) hp.force_branch = bs.dispatch == "subcase1" ? "large_coeff" : "liu_yuan";
      SolveOutcome o;
      try {
        o = solve_homological(hp);
      } catch (const std::invalid_argument& e) {
        throw ResonanceError(std::string("exact resonance: ") + e.what(), IVec(m.n, 0), 0.0);
      }
      if (o.report.residual > 1e-9)
        throw SolverFailure("Birkhoff component failed its residual check (" + o.report.branch + ")");
      bs.dispatch_sound = o.report.residual <= 1e-9;
      st.min_divisor = std::min(st.min_divisor, o.report.min_divisor);
      bs.report = o.report;
      st.solves.push_back(bs);
      add_pattern(G, pat, o.x);
    }
    if (G.empty()) continue;
    accumulate(st.F, G);
    // Coupling through d_x Omega lowers |alpha|; those terms join the lower levels.
    HamSeries C = poisson_bracket(Nser, G);
    for (auto& [t, c] : C.terms())
      if (t.degree() == deg && abs_alpha(t.alpha) < a) rem.add_term(t, c);
  }
  st.F = realify(st.F);

  LiePlan plan;
  plan.increment_only = true;
  plan.domain = DomainSpec{cfg.varrho(), std::sqrt(cfg.rho), 2.0};
  LieResult a = lie_transform(Nser, st.F, plan);
  LieResult b = lie_transform(P, st.F, plan);
  HamSeries Pn = P.empty_like();
  accumulate(Pn, P);
  accumulate(Pn, a.value);
  accumulate(Pn, b.value);
  Pn.prune();
  st.P_next = realify(Pn);

  Classified after = classify_terms(st.P_next, cfg);
  HamSeries Rd = select(after.R, [&](const TermIndex& t) { return t.degree() == deg; });
  st.eliminated_max = Rd.max_abs();
  auto row = [&](const std::string& cls, const HamSeries& x, const HamSeries& y, const std::string& br) {
    st.rows.push_back({j0, cls, x.max_abs(), y.max_abs(), st.min_divisor, br});
  };
  row("R" + std::to_string(deg),
      select(before.R, [&](const TermIndex& t) { return t.degree() == deg; }), Rd, "solve");
  row("Z", before.Z, after.Z, "kept");
  row("Q", before.Q, after.Q, "kept");
  row("T", before.T, after.T, "kept");
  return st;
}

BirkhoffRun run_birkhoff(const NormalForm& nf, const HamSeries& P0, const BirkhoffConfig& cfg,
                         const DioParams& dio, double p) {
  const auto& m = P0.modes();
  cfg.validate(m.n, m.lattice_cutoff);
  BirkhoffRun run;
  run.derived = birkhoff_derived(nf, cfg, P0.K());
  run.P = P0;
  run.initial_scale = P0.max_abs();
  for (int j0 = 2; j0 <= cfg.M + 1; ++j0) {
    try {
      BirkhoffStepResult st = birkhoff_step(nf, run.P, j0, cfg, dio);
      run.P = st.P_next;
      run.generators.push_back(st.F);
      run.rows.insert(run.rows.end(), st.rows.begin(), st.rows.end());
      run.solves.insert(run.solves.end(), st.solves.begin(), st.solves.end());
    } catch (const ResonanceError& e) {
      run.status = "resonance";
      run.message = e.what();
      break;
    } catch (const SolverFailure& e) {
      run.status = "failure";
      run.message = e.what();
      break;
    }
  }
  run.parts = classify_terms(run.P, cfg);
  run.max_R_rel = run.initial_scale > 0 ? run.parts.R.max_abs() / run.initial_scale : 0.0;
  DomainSpec dom{cfg.varrho(), std::sqrt(cfg.rho), p};
  GridSpec g{8, 4, 7};
  run.vf_T_p2 = vf_norm(run.parts.T, dom, p / 2.0, g);
  run.vf_T_pm1 = vf_norm(run.parts.T, dom, p - 1.0, g);
  run.vf_Q_p2 = vf_norm(run.parts.Q, dom, p / 2.0, g);
  run.vf_Q_pm1 = vf_norm(run.parts.Q, dom, p - 1.0, g);
  return run;
}

// ---------------------------------------------------------------- x-dependence

std::map<int, double> x_dependence_by_degree(const HamSeries& h, int max_abs_alpha, int G) {
  const int n = h.modes().n;
  std::map<IVec, std::pair<double, double>> per;  // alpha -> (sup deviation, |mean|)
  double scale = 0;
  TorusGrid grid{n, G};
  for (auto& [pat, f] : group_patterns(h)) {
    if (!pat.mu.empty() || !pat.gamma.empty()) continue;
    if (abs_alpha(pat.alpha) > max_abs_alpha) continue;
    double mean = std::abs(f_mean(f, n));
    Fourier osc = f_zero_mean(f);
    double dev = 0;
    if (!osc.empty())
      for (auto& v : to_grid(osc, grid)) dev = std::max(dev, std::abs(v));
    per[pat.alpha] = {dev, mean};
    scale = std::max(scale, mean);
  }
  std::map<int, double> out;
  for (int a = 0; a <= max_abs_alpha; ++a) out[a] = 0.0;
  for (auto& [alpha, dm] : per) {
    double ref = dm.second > 1e-12 * scale ? dm.second : scale;
    double rel = ref > 0 ? dm.first / ref : dm.first;
    int a = abs_alpha(alpha);
    out[a] = std::max(out[a], rel);
  }
  return out;
}

namespace {

double max_of(const std::map<int, double>& m, int lo, int hi) {
  double v = 0;
  for (auto& [a, r] : m)
    if (a >= lo && a <= hi) v = std::max(v, r);
  return v;
}

// Expands prod_j |z_j|^{2 beta_j} = prod_j sum_t C(beta_j,t) w_j^t |z0_j|^{2(beta_j - t)}.
void expand_paired(const TermIndex& t, cplx c, const std::vector<double>& z0sq,
                   const ModeSystem& m, HamSeries& h, std::map<SiteMap, HamSeries>& B) {
  const SiteMap& beta = t.mu;
  std::vector<int> tv(beta.size(), 0);
  while (true) {
    cplx v = c;
    SiteMap wexp;
    for (std::size_t q = 0; q < beta.size(); ++q) {
      auto [j, e] = beta[q];
      int tt = tv[q];
      double binom = 1;
      for (int r = 0; r < tt; ++r) binom = binom * (e - r) / (r + 1);
      v *= binom * std::pow(z0sq[m.normal_index(j)], e - tt);
      if (tt > 0) wexp.push_back({j, tt});
    }
    TermIndex xy{t.k, t.alpha, {}, {}};
    if (wexp.empty()) {
      h.add_term(xy, v);
    } else {
      auto it = B.find(wexp);
      if (it == B.end()) it = B.emplace(wexp, h.empty_like()).first;
      it->second.add_term(xy, v);
    }
    std::size_t q = 0;
    while (q < beta.size() && ++tv[q] > beta[q].second) tv[q++] = 0;
    if (q == beta.size()) break;
  }
}

}  // namespace

XRemoval remove_x_dependence(const NormalForm& nf, const HamSeries& P, const BirkhoffConfig& cfg,
                             const DioParams& dio, double delta, const std::vector<cplx>& z0) {
  const auto& m = P.modes();
  if (z0.size() != m.normal_sites.size()) throw std::invalid_argument("z0 must cover every normal site");
  if (cfg.M < 1) throw std::invalid_argument("x-dependence removal needs M >= 1");
  XRemoval out;
  out.h = P.empty_like();
  out.Q = P.empty_like();
  out.T = P.empty_like();
  std::vector<double> z0sq(z0.size());
  for (std::size_t q = 0; q < z0.size(); ++q) z0sq[q] = std::norm(z0[q]);

  for (int i = 0; i < m.n; ++i) {
    IVec a(m.n, 0);
    a[i] = 1;
    out.h.add_term(TermIndex{IVec(m.n, 0), a, {}, {}}, nf.omega[i]);
  }
  for (auto& [j, f] : nf.Omega)
    for (auto& [k, c] : f)
      expand_paired(TermIndex{k, IVec(m.n, 0), {{j, 1}}, {{j, 1}}}, c / double(j), z0sq, m, out.h, out.B);
  for (auto& [t, c] : P.terms()) {
    switch (classify_term(t, cfg)) {
      case TermClass::Z: expand_paired(t, c, z0sq, m, out.h, out.B); break;
      case TermClass::Q: out.Q.add_term(t, c); break;
      default: out.T.add_term(t, c); break;
    }
  }

  const int maxa = cfg.M + 2;
  const int top = std::min(maxa, P.D() / 2);
  double ldm = -std::log(std::pow(delta, cfg.M));
  int K = static_cast<int>(std::min(std::abs(ldm / cfg.varrho()), 1e9));
  out.K_used = std::min(K, P.K());
  out.budget_a = std::max(1, static_cast<int>(std::ceil(std::log2(double(cfg.M)))));
  out.initial_rel_xdep = max_of(x_dependence_by_degree(out.h, maxa), 0, maxa);

  LiePlan plan;
  plan.increment_only = true;
  plan.domain = DomainSpec{cfg.varrho(), std::sqrt(cfg.rho), 2.0};

  auto omega_eff = [&]() {
    std::vector<double> w(m.n);
    for (int i = 0; i < m.n; ++i) {
      IVec a(m.n, 0);
      a[i] = 1;
      w[i] = out.h.coeff(TermIndex{IVec(m.n, 0), a, {}, {}}).real();
    }
    return w;
  };

  // Builds F = sum F^alpha(x) y^alpha with omega.d F^alpha = h_alpha - [h_alpha] for the chosen degrees.
  auto generator = [&](int lo, int hi) {
    std::vector<double> w = omega_eff();
    HamSeries F = P.empty_like();
    for (auto& [pat, f] : group_patterns(out.h)) {
      int a = abs_alpha(pat.alpha);
      if (a < lo || a > hi) continue;
      Fourier A = f_truncate(f_zero_mean(f), out.K_used);
      if (A.empty()) continue;
      SolveOutcome o = dw_inverse(f_scale(A, I), w, dio, 0.0, 0.0);
      double thr = cfg.eta_acute;
      for (auto& [k, c] : A) {
        if (is_zero_k(k)) continue;
        double dv = std::abs(dot(k, w));
        if (dv < thr / (1.0 + std::pow(double(l1(k)), cfg.tau)))
          throw ResonanceError("shifted frequency fails the Diophantine bound", k, dv);
      }
      add_pattern(F, pat, o.x);
    }
    return realify(F);
  };

  auto apply = [&](const HamSeries& F) {
    out.h = add(out.h, lie_transform(out.h, F, plan).value);
    for (auto& [beta, b] : out.B) b = add(b, lie_transform(b, F, plan).value);
    out.Q = add(out.Q, lie_transform(out.Q, F, plan).value);
    out.T = add(out.T, lie_transform(out.T, F, plan).value);
    out.generators.push_back(F);
  };

  try {
    // Phase (a): x-dependence of the degree-0 and y-linear parts, Newton rounds.
    const double tol = 1e-10;
    const int cap = 30;
    while (max_of(x_dependence_by_degree(out.h, maxa), 0, 1) > tol && out.rounds_a < cap) {
      HamSeries F = generator(0, 1);
      if (F.empty()) break;
      apply(F);
      ++out.rounds_a;
    }
    // Phase (b): one round per |alpha| from 2 up.
    for (int a = 2; a <= top; ++a) {
      HamSeries F = generator(a, a);
      if (F.empty()) continue;
      apply(F);
      ++out.rounds_b;
    }
  } catch (const ResonanceError& e) {
    out.status = "resonance";
    out.message = e.what();
  }

  out.rel_xdep_by_degree = x_dependence_by_degree(out.h, maxa);
  out.max_rel_xdep = max_of(out.rel_xdep_by_degree, 0, maxa);
  if (out.rounds_a > out.budget_a)
    out.message += (out.message.empty() ? "" : "; ") + std::string("phase (a) used ") +
                   std::to_string(out.rounds_a) + " rounds against a nominal " +
                   std::to_string(out.budget_a);
  for (auto& [beta, b] : out.B) {
    double nrm = 0;
    for (auto& [t, c] : b.terms()) nrm += std::abs(c);
    out.B_norms.push_back(nrm);
    out.B_fit_C = std::max(out.B_fit_C, nrm * std::pow(delta, 2.0 * site_total(beta) - 2.0));
  }
  return out;
}

}  // namespace dnlsnf
