#include "dnlsnf/kam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dnlsnf {

namespace {

const cplx I(0.0, 1.0);

bool is_diagonal(const Pattern& p) {
  return p.mu.size() == 1 && p.gamma.size() == 1 && p.mu[0] == p.gamma[0] && p.mu[0].second == 1;
}

bool no_normal(const Pattern& p) { return p.mu.empty() && p.gamma.empty(); }

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

// Accumulates without pruning so near-cancelled sums stay exact.
void accumulate(HamSeries& out, const HamSeries& h, cplx f = 1.0) {
  for (auto& [t, c] : h.terms()) out.add_term(t, f * c);
}

double low_norm(const HamSeries& P, const DomainSpec& d) {
  return majorant_norms(split_low_high(P).first, d).first;
}

}  // namespace

// ---------------------------------------------------------------- schedule

double KamSchedule::eta_m(int m) const { return eta * std::pow(2.0, -m); }

double KamSchedule::eps_m(int m) const {
  return std::pow(eta, 12) * std::pow(varepsilon, std::pow(4.0 / 3.0, m));
}

double KamSchedule::tau_m(int m) const {
  double acc = 0;
  for (int j = 1; j <= m; ++j) acc += 1.0 / (double(j) * j);
  return acc / (2.0 * M_PI * M_PI / 6.0);
}

double KamSchedule::s_m(int m) const { return m == 0 ? s0 : (1.0 - tau_m(m)) * chi; }
double KamSchedule::r_m(int m) const { return m == 0 ? r0 : (1.0 - tau_m(m)) * chi; }

double KamSchedule::K_m_raw(int m) const {
  double gap = r_m(m) - r_m(m + 1);
  return std::abs(std::log(1.0 / eps_m(m)) / gap);
}

int KamSchedule::K_m(int m) const {
  double raw = K_m_raw(m);
  if (!std::isfinite(raw) || raw > K_glob) return K_glob;
  return static_cast<int>(std::floor(raw));
}

void KamSchedule::validate() const {
  if (!(eta > 0 && eta < 1)) throw std::invalid_argument("eta must lie in (0,1)");
  if (!(varepsilon > 0)) throw std::invalid_argument("varepsilon must be positive");
  if (!(chi > 0 && chi <= std::min(s0, r0))) throw std::invalid_argument("chi must lie in (0, min(s0,r0)]");
  if (K_glob < 0) throw std::invalid_argument("global Fourier cutoff must be nonnegative");
}

// ---------------------------------------------------------------- right-hand sides

int pattern_class(const Pattern& p) {
  int b = 0;
  for (auto& [j, e] : p.mu) b += j * e;
  for (auto& [j, e] : p.gamma) b -= j * e;
  return b;
}

RhsParts assemble_homological_rhs(const HamSeries& P_low, const HamSeries& P_high,
                                  const HamSeries& F_partial) {
  HamSeries B = poisson_bracket(P_high, F_partial);
  RhsParts r{P_low.empty_like(), P_low.empty_like(), P_low.empty_like()};
  HamSeries* parts[3] = {&r.R0, &r.R1, &r.R2};
  for (auto& [t, c] : P_low.terms())
    if (t.degree() <= 2) parts[t.degree()]->add_term(t, c);
  for (auto& [t, c] : B.terms())
    if (t.degree() <= 2) parts[t.degree()]->add_term(t, c);
  for (auto* p : parts) {
    for (auto& [t, c] : p->terms())
      if (t.degree() > 2) throw std::logic_error("right-hand side lost homogeneity");
  }
  return r;
}

RhsParts assemble_homological_rhs_products(const HamSeries& P_low, const HamSeries& P_high,
                                           const HamSeries& F_partial) {
  const auto& m = P_low.modes();
  HamSeries B = P_low.empty_like();
  B.set_real_flag(false);
  for (int i = 0; i < m.n; ++i) {
    accumulate(B, mul(d_x(P_high, i), d_y(F_partial, i)));
    accumulate(B, mul(d_y(P_high, i), d_x(F_partial, i)), -1.0);
  }
  for (int j : m.normal_sites) {
    HamSeries a = d_z(P_high, j), b = d_zb(F_partial, j);
    if (!a.empty() && !b.empty()) accumulate(B, mul(a, b), I * double(j));
    HamSeries c = d_zb(P_high, j), d = d_z(F_partial, j);
    if (!c.empty() && !d.empty()) accumulate(B, mul(c, d), -I * double(j));
  }
  RhsParts r{P_low.empty_like(), P_low.empty_like(), P_low.empty_like()};
  HamSeries* parts[3] = {&r.R0, &r.R1, &r.R2};
  for (auto& [t, c] : P_low.terms())
    if (t.degree() <= 2) parts[t.degree()]->add_term(t, c);
  for (auto& [t, c] : B.terms())
    if (t.degree() <= 2) parts[t.degree()]->add_term(t, c);
  return r;
}

// ---------------------------------------------------------------- one step

StepResult kam_solve_step(const NormalForm& nf, const HamSeries& P, int K_m, const KamOptions& opt) {
  const auto& m = P.modes();
  StepResult st;
  const int Kg = P.K();
  st.K_used = std::min(K_m, Kg);
  st.clamped = K_m >= Kg;
  const int K = st.K_used;

  HamSeries N = nf.to_series(Kg, P.D());
  auto [Plow, Phigh] = split_low_high(P);
  st.plow_norm = majorant_norms(Plow, opt.domain).first;
  st.Nhat = P.empty_like();
  st.Fx = st.F1 = st.Fy = st.F2 = P.empty_like();

  auto keep_for = [&](int b) {
    std::vector<int> js = m.tangent_sites;
    return KFilter([js, b](const IVec& k) {
      int s = 0;
      for (std::size_t i = 0; i < js.size(); ++i) s += k[i] * js[i];
      return s == -b;
    });
  };

  auto solve_pattern = [&](const Pattern& pat, Fourier R, const std::string& comp, HamSeries& out) {
    Fourier L = pattern_L(nf, pat);
    double Lmean = f_mean(L, m.n).real();
    Fourier Lt = f_zero_mean(L);
    HomologicalProblem hp;
    hp.omega = nf.omega;
    hp.L_mean = Lmean;
    hp.L_tilde = Lt;
    hp.R = R;
    hp.K = K;
    hp.keep = keep_for(pattern_class(pat));
    hp.dio = opt.dio;
    SolveOutcome o = solve_homological(hp);
    if (o.report.residual > 1e-9)
      throw SolverFailure("homological component failed its residual check (" + o.report.branch + ")");
    if (std::isfinite(o.report.min_divisor)) {
      int kl = l1(o.report.min_divisor_k);
      double thr = opt.resonance_gamma / std::pow(1.0 + kl, opt.dio.tau);
      if (o.report.min_divisor < thr)
        throw ResonanceError("stage resonance: divisor below gamma/(1+|k|)^tau", o.report.min_divisor_k,
                             o.report.min_divisor);
      if (o.report.min_divisor < st.min_divisor) {
        st.min_divisor = o.report.min_divisor;
        st.min_divisor_k = o.report.min_divisor_k;
      }
    }
    st.solves.push_back({pat, comp, pattern_class(pat), o.report});
    add_pattern(out, pat, o.x);
  };

  // Component x: degree 0. The mean is a constant and goes into the normal form.
  RhsParts r0 = assemble_homological_rhs(Plow, Phigh, P.empty_like());
  st.R0 = r0.R0;
  for (auto& [pat, f] : group_patterns(st.R0)) {
    cplx mean = f_mean(f, m.n);
    if (mean != cplx(0.0)) st.Nhat.add_term(TermIndex{IVec(m.n, 0), pat.alpha, pat.mu, pat.gamma}, mean);
    Fourier R = f_truncate(f_zero_mean(f), K);
    if (!R.empty()) solve_pattern(pat, R, "x", st.Fx);
  }

  // Component 1: degree 1, with the {P^high, F^x} correction.
  st.R1 = assemble_homological_rhs(Plow, Phigh, st.Fx).R1;
  for (auto& [pat, f] : group_patterns(st.R1)) {
    Fourier R = f_truncate(f, K);
    if (!R.empty()) solve_pattern(pat, R, "1", st.F1);
  }

  // Degree 2 with the {P^high, F^x + F^1} correction: y first, then the z pairs.
  HamSeries F01 = P.empty_like();
  accumulate(F01, st.Fx);
  accumulate(F01, st.F1);
  st.R2 = assemble_homological_rhs(Plow, Phigh, F01).R2;
  auto groups2 = group_patterns(st.R2);
  for (auto& [pat, f] : groups2) {
    if (!no_normal(pat)) continue;
    cplx mean = f_mean(f, m.n);
    if (mean != cplx(0.0)) st.Nhat.add_term(TermIndex{IVec(m.n, 0), pat.alpha, pat.mu, pat.gamma}, mean);
    Fourier R = f_truncate(f_zero_mean(f), K);
    if (!R.empty()) solve_pattern(pat, R, "y", st.Fy);
  }
  for (auto& [pat, f] : groups2) {
    if (no_normal(pat)) continue;
    if (is_diagonal(pat)) {
      // z_j zbar_j terms cannot be eliminated; they join the normal form as they are.
      add_pattern(st.Nhat, pat, f);
      continue;
    }
    Fourier R = f_truncate(f, K);
    if (!R.empty()) solve_pattern(pat, R, "2", st.F2);
  }
  // {N, F^y} carries <d_x Omega_j / j, d_y F^y> z_j zbar_j; it also joins the normal form.
  if (!st.Fy.empty()) {
    HamSeries C = poisson_bracket(N, st.Fy);
    for (auto& [t, c] : C.terms()) {
      Pattern p{t.alpha, t.mu, t.gamma};
      if (is_diagonal(p)) st.Nhat.add_term(t, c);
    }
  }

  st.F = P.empty_like();
  for (auto* part : {&st.Fx, &st.F1, &st.Fy, &st.F2}) accumulate(st.F, *part);
  for (auto& [t, c] : st.F.terms())
    if (momentum(t, m) != 0)
      throw std::logic_error("generating function left its momentum class");
  st.F_reality_defect = reality_defect(st.F);
  st.F = realify(st.F);

  // E = {N,F} + P^low + {P^high,F}^low - Nhat, recomputed from scratch.
  HamSeries E = P.empty_like();
  E.set_real_flag(false);
  accumulate(E, poisson_bracket(N, st.F));
  accumulate(E, Plow);
  HamSeries HF = poisson_bracket(Phigh, st.F);
  for (auto& [t, c] : HF.terms())
    if (t.degree() <= 2) E.add_term(t, c);
  accumulate(E, st.Nhat, -1.0);
  HamSeries Einner = P.empty_like();
  st.Phat = P.empty_like();
  for (auto& [t, c] : E.terms()) {
    if (t.degree() > 2) continue;
    (t.k_l1() <= K ? Einner : st.Phat).add_term(t, c);
  }
  st.residual = majorant_norms(Einner, opt.domain).first;
  st.residual_rel = st.plow_norm > 0 ? st.residual / st.plow_norm : st.residual;
  return st;
}

ComposeResult compose_step(const NormalForm& nf, const HamSeries& P, const StepResult& step,
                           const LiePlan& plan) {
  ComposeResult out;
  HamSeries N = nf.to_series(P.K(), P.D());
  LiePlan inc = plan;
  inc.increment_only = true;
  LieResult a = lie_transform(N, step.F, inc);
  LieResult b = lie_transform(P, step.F, inc);
  HamSeries Pp = P.empty_like();
  accumulate(Pp, P);
  accumulate(Pp, a.value);
  accumulate(Pp, b.value);
  accumulate(Pp, step.Nhat, -1.0);
  Pp.prune();
  out.P = realify(Pp);
  out.lie_remainder = a.remainder + b.remainder;
  out.lie_orders = std::max(a.orders_used, b.orders_used);
  out.gate_ok = a.converged && b.converged;

  out.nf = nf;
  NormalForm d = NormalForm::from_series(step.Nhat);
  out.nf.energy += d.energy;
  for (int i = 0; i < nf.modes->n; ++i) out.nf.omega[i] += d.omega[i];
  for (auto& [j, f] : d.Omega) {
    Fourier sym = f;
    // Keep Omega_j(x) real: average each mode with its conjugate partner.
    for (auto& [k, c] : f) {
      IVec mk = k;
      for (auto& v : mk) v = -v;
      auto it = f.find(mk);
      cplx partner = it == f.end() ? cplx(0.0) : std::conj(it->second);
      sym[k] = 0.5 * (c + partner);
      if (it == f.end()) sym[mk] = 0.5 * std::conj(c);
    }
    out.nf.Omega[j] = f_add(out.nf.Omega[j], sym);
  }
  return out;
}

double torus_residual(const NormalForm& nf, const HamSeries& P, int G) {
  const auto& m = P.modes();
  HamSeries H = P.empty_like();
  accumulate(H, nf.to_series(P.K(), P.D()));
  accumulate(H, P);
  TorusGrid grid{m.n, G};
  double best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    PhasePoint w = PhasePoint::zeros(m);
    auto th = grid.point(i);
    for (int q = 0; q < m.n; ++q) w.x[q] = th[q];
    auto v = vector_field(H, w);
    double s = 0;
    for (auto& c : v.dy) s = std::max(s, std::abs(c));
    for (auto& c : v.dz) s = std::max(s, std::abs(c));
    best = std::max(best, s);
  }
  return best;
}

KamRun run_kam(const NormalForm& nf0, const HamSeries& P0, const KamSchedule& sched, int steps,
               const KamOptions& opt) {
  sched.validate();
  KamRun run;
  run.nf = nf0;
  run.P = P0;
  int slow = 0;
  for (int mstep = 0; mstep < steps; ++mstep) {
    double plow = low_norm(run.P, opt.domain);
    if (plow == 0.0) break;
    KamTraceRow row;
    row.step = mstep;
    row.plow = plow;
    row.eps_m = sched.eps_m(mstep);
    row.K_raw = sched.K_m_raw(mstep);
    StepResult st;
    try {
      st = kam_solve_step(run.nf, run.P, sched.K_m(mstep), opt);
    } catch (const ResonanceError& e) {
      run.status = "resonance";
      run.message = e.what();
      break;
    } catch (const SolverFailure& e) {
      run.status = "failure";
      run.message = e.what();
      break;
    }
    ComposeResult c = compose_step(run.nf, run.P, st, opt.lie);
    row.plow_next = low_norm(c.P, opt.domain);
    row.log_ratio = row.plow_next == 0.0 ? std::numeric_limits<double>::infinity()
                                         : std::log(row.plow_next) / std::log(plow);
    row.residual_rel = st.residual_rel;
    row.phigh = majorant_norms(split_low_high(c.P).second, opt.domain).first;
    row.F_norm = majorant_norms(st.F, opt.domain).first;
    row.min_divisor = st.min_divisor;
    row.K_used = st.K_used;
    row.clamped = st.clamped;
    row.lie_remainder = c.lie_remainder;
    for (int i = 0; i < nf0.modes->n; ++i)
      row.omega_shift = std::max(row.omega_shift, std::abs(c.nf.omega[i] - run.nf.omega[i]));
    row.omega = c.nf.omega;
    row.minus1_norm = c.nf.minus1_norm(sched.s_m(mstep + 1));
    run.nf = c.nf;
    run.P = c.P;
    run.generators.push_back(st.F);
    row.torus_residual = torus_residual(run.nf, run.P);
    run.trace.push_back(row);
    if (!c.gate_ok) {
      run.status = "failure";
      run.message = "Lie series failed the smallness gate";
      break;
    }
    slow = row.plow_next > 0.9 * plow ? slow + 1 : 0;
    if (slow >= 2) {
      run.status = "diverged";
      run.message = "|||P^low||| failed to decrease twice in a row";
      break;
    }
    if (row.plow_next == 0.0) break;
  }
  run.final_plow = low_norm(run.P, opt.domain);
  double scale = std::max(majorant_norms(P0, opt.domain).first, 1e-300);
  run.converged = run.status == "ok" && run.final_plow <= 1e-12 * scale;
  return run;
}

}  // namespace dnlsnf
