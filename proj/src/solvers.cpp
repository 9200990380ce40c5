#include "dnlsnf/solvers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dnlsnf {

namespace {

const cplx I(0.0, 1.0);

double norm_l1(const Fourier& f) { return f_l1(f); }

void enumerate_ball(int n, int K, int i, IVec& cur, int used, std::vector<IVec>& out,
                    const KFilter& keep) {
  if (i == n) {
    if (!keep || keep(cur)) out.push_back(cur);
    return;
  }
  for (int v = -(K - used); v <= K - used; ++v) {
    cur[i] = v;
    enumerate_ball(n, K, i + 1, cur, used + std::abs(v), out, keep);
  }
}

bool is_real_function(const Fourier& a) {
  double m = 0, defect = 0;
  for (auto& [k, c] : a) {
    m = std::max(m, std::abs(c));
    IVec mk = k;
    for (auto& v : mk) v = -v;
    auto it = a.find(mk);
    cplx partner = it == a.end() ? cplx(0.0) : it->second;
    defect = std::max(defect, std::abs(std::conj(c) - partner));
  }
  return defect <= 1e-12 * std::max(m, 1e-300);
}

int max_abs_k(const Fourier& f) {
  int m = 0;
  for (auto& [k, c] : f)
    for (int v : k) m = std::max(m, std::abs(v));
  return m;
}

int max_l1(const Fourier& f) {
  int m = 0;
  for (auto& [k, c] : f) m = std::max(m, l1(k));
  return m;
}

}  // namespace

std::string SolverReport::to_json() const {
  std::ostringstream os;
  os << "{\"branch\":\"" << branch << "\",\"min_divisor\":" << format_double(min_divisor)
     << ",\"residual\":" << format_double(residual) << ",\"picard_iters\":" << picard_iters
     << ",\"norm_in\":" << format_double(norm_in) << ",\"norm_out\":" << format_double(norm_out)
     << ",\"widths\":[";
  for (std::size_t i = 0; i < widths.size(); ++i) os << (i ? "," : "") << format_double(widths[i]);
  os << "],\"fallback\":" << (fallback ? "true" : "false") << "}";
  return os.str();
}

std::vector<IVec> l1_ball(int n, int K, const KFilter& keep) {
  std::vector<IVec> out;
  IVec cur(n, 0);
  enumerate_ball(n, K, 0, cur, 0, out, keep);
  return out;
}

SolverReport diophantine_scan(const std::vector<double>& omega, std::optional<double> lambda,
                              const DioParams& d) {
  SolverReport rep;
  rep.branch = "scan";
  const int n = static_cast<int>(omega.size());
  for (const IVec& k : l1_ball(n, d.K_scan)) {
    const int kl = l1(k);
    double v = dot(k, omega);
    if (kl > 0) {
      double dv = d.modulo_integers ? std::abs(v - std::round(v)) : std::abs(v);
      double thr = d.gamma0 / std::pow(kl, d.tau);
      double margin = dv / thr;
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        if (margin < 1) rep.violator = k;
      }
      if (dv < rep.min_divisor) {
        rep.min_divisor = dv;
        rep.min_divisor_k = k;
      }
    }
    if (lambda) {
      double thr = d.gamma / std::pow(std::max(kl, 1), d.tau);
      for (double sg : {1.0, -1.0}) {
        double dv = std::abs(sg * v + *lambda);
        double margin = dv / thr;
        if (margin < rep.worst_margin) {
          rep.worst_margin = margin;
          if (margin < 1) rep.violator = k;
        }
        if (dv < rep.min_divisor) {
          rep.min_divisor = dv;
          rep.min_divisor_k = k;
        }
      }
    }
  }
  rep.pass = rep.worst_margin >= 1.0;
  return rep;
}

SolveOutcome dw_inverse(const Fourier& A, const std::vector<double>& omega, const DioParams&,
                        double s, double sigma) {
  SolveOutcome out;
  out.report.branch = "dw_inverse";
  const int n = static_cast<int>(omega.size());
  double scale = norm_l1(A);
  if (std::abs(f_mean(A, n)) > 1e-14 * std::max(scale, 1e-300) && std::abs(f_mean(A, n)) > 0)
    throw std::invalid_argument("D_omega inverse needs zero-mean data");
  for (auto& [k, c] : A) {
    if (is_zero_k(k)) continue;
    double d = dot(k, omega);
    if (std::abs(d) < kDivisorFloor)
      throw ResonanceError("divisor below floor in D_omega inverse", k, d);
    if (std::abs(d) < out.report.min_divisor) {
      out.report.min_divisor = std::abs(d);
      out.report.min_divisor_k = k;
    }
    out.x[k] = -c / d;
  }
  // Independent check: i * (i<k,omega>) X - A.
  Fourier back = f_scale(f_omega_d(out.x, omega), I);
  Fourier diff = f_add(back, f_zero_mean(A), -1.0);
  out.report.residual = scale > 0 ? norm_l1(diff) / scale : norm_l1(diff);
  out.report.norm_in = norm_coeff(A, s);
  out.report.norm_out = norm_coeff(out.x, std::max(s - sigma, 0.0));
  out.report.widths = {s, s - sigma};
  return out;
}

SolveOutcome solve_division(const std::vector<double>& omega, double lambda, const Fourier& R,
                            int K, double s) {
  SolveOutcome out;
  out.report.branch = "division";
  for (auto& [k, c] : R) {
    if (l1(k) > K) continue;
    double d = lambda - dot(k, omega);
    if (std::abs(d) < kDivisorFloor) throw ResonanceError("divisor below floor in division", k, d);
    if (std::abs(d) < out.report.min_divisor) {
      out.report.min_divisor = std::abs(d);
      out.report.min_divisor_k = k;
    }
    out.x[k] = c / d;
  }
  out.report.residual = relative_residual(omega, lambda, {}, out.x, f_truncate(R, K), K);
  out.report.norm_in = norm_coeff(R, s);
  out.report.norm_out = norm_coeff(out.x, s);
  return out;
}

Fourier apply_operator(const std::vector<double>& omega, double lambda, const Fourier& m,
                       const Fourier& x) {
  Fourier out;
  // (i omega.d) e^{ik.phi} = -<k,omega> e^{ik.phi}
  for (auto& [k, c] : x) out[k] += (lambda - dot(k, omega)) * c;
  if (!m.empty()) out = f_add(out, f_mul(m, x));
  return out;
}

double relative_residual(const std::vector<double>& omega, double lambda, const Fourier& m,
                         const Fourier& x, const Fourier& R, int K) {
  Fourier r = f_truncate(f_add(apply_operator(omega, lambda, m, x), R, -1.0), K);
  double nr = norm_l1(f_truncate(R, K));
  return nr > 0 ? norm_l1(r) / nr : norm_l1(r);
}

SolveOutcome dense_oracle(const std::vector<double>& omega, double lambda, const Fourier& m,
                          const Fourier& R, int K, const KFilter& keep) {
  const int n = static_cast<int>(omega.size());
  double box = std::pow(2.0 * K + 1.0, n);
  if (box > static_cast<double>(kDenseCap))
    throw SolverFailure("dense oracle refuses: (2K+1)^n exceeds the size cap");
  std::vector<IVec> basis = l1_ball(n, K, keep);
  if (basis.size() > kDenseBasisCap)
    throw SolverFailure("dense oracle refuses: basis too large to factorise");
  SolveOutcome out;
  out.report.branch = "dense";
  if (basis.empty()) return out;
  std::map<IVec, int> row;
  for (std::size_t i = 0; i < basis.size(); ++i) row[basis[i]] = static_cast<int>(i);
  const int N = static_cast<int>(basis.size());
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(N);
  for (int i = 0; i < N; ++i) {
    const IVec& k = basis[i];
    double d = lambda - dot(k, omega);
    A(i, i) += d;
    if (std::abs(d) < out.report.min_divisor) {
      out.report.min_divisor = std::abs(d);
      out.report.min_divisor_k = k;
    }
    for (auto& [mk, c] : m) {
      IVec kk(n);
      for (int q = 0; q < n; ++q) kk[q] = k[q] - mk[q];
      auto it = row.find(kk);
      if (it != row.end()) A(i, it->second) += c;
    }
    auto rit = R.find(k);
    if (rit != R.end()) b(i) = rit->second;
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  double rc = lu.rcond();
  if (!(rc > 1e-15)) throw SolverFailure("singular truncated operator");
  Eigen::VectorXcd sol = lu.solve(b);
  for (int i = 0; i < N; ++i)
    if (sol(i) != cplx(0.0)) out.x[basis[i]] = sol(i);
  // Galerkin residual on the basis.
  Fourier r = f_add(apply_operator(omega, lambda, m, out.x), R, -1.0);
  double acc = 0;
  for (auto& k : basis) {
    auto it = r.find(k);
    if (it != r.end()) acc += std::abs(it->second);
  }
  double nr = norm_l1(R);
  out.report.residual = nr > 0 ? acc / nr : acc;
  return out;
}

double WidthLadder::s(int m) const {
  double acc = 0;
  for (int j = 1; j <= m; ++j) acc += 1.0 / (static_cast<double>(j) * j);
  return s0 * (1.0 - acc / (100.0 * M_PI * M_PI / 6.0));
}

double WidthLadder::sub(int m, int i) const {
  return s(m + 1) + (1.0 - i / 10.0) * (s(m) - s(m + 1));
}

SolveOutcome solve_large_coeff(const std::vector<double>& omega, double lambda, const Fourier& a_in,
                               const Fourier& R, const DioParams& d,
                               const LargeCoeffOptions& opt) {
  const int n = static_cast<int>(omega.size());
  Fourier a = f_prune(a_in, 1e-16);
  double amean = std::abs(f_mean(a, n));
  if (amean > 1e-14 * std::max(f_l1(a), 1e-300) && amean > 0)
    throw std::invalid_argument("variable coefficient must have zero mean");
  if (a.empty()) {
    SolveOutcome o = solve_division(omega, lambda, R, opt.K_out, opt.ladder.s(opt.ladder_stage));
    if (opt.keep) {
      Fourier kept;
      for (auto& [k, c] : o.x)
        if (opt.keep(k)) kept[k] = c;
      o.x = kept;
    }
    o.report.branch = "large_coeff";
    return o;
  }
  if (!is_real_function(a)) throw std::invalid_argument("variable coefficient must be real");

  SolveOutcome out;
  out.report.branch = "large_coeff";
  const int a_reach = max_l1(a);
  const int K_keep = opt.K_out + 2 * a_reach;
  int G = opt.grid;
  if (G <= 0) {
    int want = std::max({4 * (K_keep + max_abs_k(R)), 32});
    if (n >= 3) want = std::max(2 * K_keep + 4, 16);
    G = 1;
    while (G < want) G *= 2;
    if (n == 2) G = std::min(G, 128);
  }
  TorusGrid grid{n, G};

  // (i) alpha with omega.d alpha = a.
  Fourier alpha;
  for (auto& [k, c] : a) {
    double dv = dot(k, omega);
    if (std::abs(dv) < kDivisorFloor) throw ResonanceError("divisor below floor for alpha", k, dv);
    alpha[k] = c / cplx(0.0, dv);
  }
  (void)d;

  const std::size_t N = grid.size();
  std::vector<std::vector<double>> theta(N);
  for (std::size_t i = 0; i < N; ++i) theta[i] = grid.point(i);
  double wmax = 0;
  for (double w : omega) wmax = std::max(wmax, std::abs(w));

  // (ii)-(iii) inverse of theta = phi + alpha(phi) omega by Picard iteration on beta, h = -beta omega.
  std::vector<cplx> beta = eval_at(alpha, theta);
  for (auto& v : beta) v = v.real();
  int iters = 0;
  double prev_step = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 1; it <= opt.picard_max; ++it) {
    std::vector<std::vector<double>> pts(N);
    for (std::size_t i = 0; i < N; ++i) {
      pts[i] = theta[i];
      for (int q = 0; q < n; ++q) pts[i][q] -= beta[i].real() * omega[q];
    }
    std::vector<cplx> nb = eval_at(alpha, pts);
    double step = 0;
    for (std::size_t i = 0; i < N; ++i) {
      step = std::max(step, std::abs(nb[i].real() - beta[i].real()) * wmax);
      beta[i] = nb[i].real();
    }
    iters = it;
    out.report.picard_steps.push_back(step);
    if (step > prev_step) ++growth;
    if (growth > 3 || !std::isfinite(step)) throw SolverFailure("Picard iteration diverges");
    prev_step = step;
    if (step < opt.picard_tol) break;
  }
  out.report.picard_iters = iters;

  // (iv) R* = (R / (1 + a)) at phi = theta + h(theta).
  std::vector<std::vector<double>> back(N);
  for (std::size_t i = 0; i < N; ++i) {
    back[i] = theta[i];
    for (int q = 0; q < n; ++q) back[i][q] -= beta[i].real() * omega[q];
  }
  std::vector<cplx> Rv = eval_at(R, back), av = eval_at(a, back);
  std::vector<cplx> Rstar(N);
  for (std::size_t i = 0; i < N; ++i) Rstar[i] = Rv[i] / (1.0 + av[i]);

  // (v) constant-coefficient division.
  Fourier Rhat = from_grid(Rstar, grid, n * (G / 2));
  Fourier y;
  for (auto& [k, c] : Rhat) {
    if (opt.keep && !opt.keep(k)) continue;
    double dv = lambda - dot(k, omega);
    if (std::abs(dv) < kDivisorFloor) throw ResonanceError("divisor below floor in division", k, dv);
    if (std::abs(dv) < out.report.min_divisor) {
      out.report.min_divisor = std::abs(dv);
      out.report.min_divisor_k = k;
    }
    y[k] = c / dv;
  }
  y = f_prune(y, 1e-17);

  // (vi) x(phi) = y(phi + alpha(phi) omega).
  std::vector<cplx> alpha_v = eval_at(alpha, theta);
  std::vector<std::vector<double>> fwd(N);
  for (std::size_t i = 0; i < N; ++i) {
    fwd[i] = theta[i];
    for (int q = 0; q < n; ++q) fwd[i][q] += alpha_v[i].real() * omega[q];
  }
  std::vector<cplx> xv = eval_at(y, fwd);
  Fourier xfull = from_grid(xv, grid, K_keep);
  if (opt.keep) {
    Fourier kept;
    for (auto& [k, c] : xfull)
      if (opt.keep(k)) kept[k] = c;
    xfull = kept;
  }

  // Im-contraction diagnostic: |Im alpha(theta + i eta)| / |eta| on a small sample.
  {
    double sw = opt.ladder.s(opt.ladder_stage);
    double worst = 0;
    for (std::size_t i = 0; i < N; i += std::max<std::size_t>(1, N / 64)) {
      std::vector<cplx> zc(n);
      for (int q = 0; q < n; ++q) zc[q] = cplx(theta[i][q], sw * (q % 2 ? -1.0 : 1.0));
      worst = std::max(worst, std::abs(f_eval(alpha, zc).imag()) / sw);
    }
    out.report.im_contraction = worst;
  }

  Fourier lam_a = f_scale(a, lambda);
  out.report.residual = relative_residual(omega, lambda, lam_a, xfull, R, opt.K_out);
  out.x = f_truncate(xfull, opt.K_out);
  int m = opt.ladder_stage;
  out.report.widths = {opt.ladder.s(m), opt.ladder.s(m + 1)};
  out.report.norm_in = norm_coeff(R, opt.ladder.s(m));
  out.report.norm_out = norm_coeff(out.x, opt.ladder.s(m + 1));

  if (!(out.report.residual <= opt.residual_tol)) {
    if (!opt.allow_fallback)
      throw SolverFailure("large-coefficient solve failed its residual check");
    SolveOutcome o = dense_oracle(omega, lambda, lam_a, R, opt.K_out, opt.keep);
    o.report.branch = "large_coeff->dense";
    o.report.fallback = true;
    o.report.picard_iters = out.report.picard_iters;
    o.report.picard_steps = out.report.picard_steps;
    o.report.residual = relative_residual(omega, lambda, lam_a, o.x, R, opt.K_out);
    return o;
  }
  return out;
}

SolveOutcome solve_liu_yuan_mode(const std::vector<double>& omega, double lambda,
                                 const Fourier& mu, const Fourier& p, int K, double s,
                                 double tau, const KFilter& keep) {
  const int n = static_cast<int>(omega.size());
  double mm = std::abs(f_mean(mu, n));
  if (mm > 1e-14 * std::max(f_l1(mu), 1e-300) && mm > 0)
    throw std::invalid_argument("Liu-Yuan mode needs a zero-average coefficient");
  SolveOutcome out = dense_oracle(omega, lambda, mu, p, K, keep);
  out.report.branch = "liu_yuan";
  double weighted = 0;
  for (auto& [k, c] : mu) weighted += std::abs(c) * std::pow(l1(k), tau + 1) * std::exp(l1(k) * s);
  out.report.norm_in = norm_coeff(p, s);
  out.report.norm_out = norm_coeff(out.x, s);
  out.report.widths = {s, weighted};
  out.report.residual = relative_residual(omega, lambda, mu, out.x, f_truncate(p, K), K);
  return out;
}

SolveOutcome solve_homological(const HomologicalProblem& prob) {
  const auto& w = prob.omega;
  Fourier iR = f_scale(f_truncate(prob.R, prob.K), I);
  Fourier Lt = f_prune(prob.L_tilde, 1e-15);
  auto keep_only = [&](SolveOutcome o) {
    if (prob.keep) {
      Fourier kept;
      for (auto& [k, c] : o.x)
        if (prob.keep(k)) kept[k] = c;
      o.x = kept;
    }
    o.x = f_truncate(o.x, prob.K);
    return o;
  };
  std::string branch = prob.force_branch;
  if (branch.empty()) {
    if (Lt.empty()) branch = prob.L_mean == 0.0 ? "dw_inverse" : "division";
    else {
      double ratio = f_l1(Lt) / std::max(std::abs(prob.L_mean), 1e-300);
      double min_dw = std::numeric_limits<double>::infinity();
      for (auto& [k, c] : Lt) min_dw = std::min(min_dw, std::abs(dot(k, w)));
      bool large = prob.L_mean != 0.0 && ratio <= 0.25 && min_dw > 1e-3 && is_real_function(Lt);
      branch = large ? "large_coeff" : "liu_yuan";
    }
  }
  SolveOutcome o;
  if (branch == "dw_inverse") {
    o = dw_inverse(iR, w, prob.dio, 0.0, 0.0);
  } else if (branch == "division") {
    o = solve_division(w, -prob.L_mean, iR, prob.K);
  } else if (branch == "large_coeff") {
    LargeCoeffOptions opt;
    opt.K_out = prob.K;
    opt.keep = prob.keep;
    o = solve_large_coeff(w, -prob.L_mean, f_scale(Lt, 1.0 / prob.L_mean), iR, prob.dio, opt);
  } else {
    o = solve_liu_yuan_mode(w, -prob.L_mean, f_scale(Lt, -1.0), iR, prob.K, 0.0, prob.dio.tau,
                            prob.keep);
  }
  o = keep_only(std::move(o));
  // Residual of the original equation, recomputed from scratch.
  o.report.residual = relative_residual(w, -prob.L_mean, f_scale(Lt, -1.0), o.x, iR, prob.K);
  return o;
}

}  // namespace dnlsnf
