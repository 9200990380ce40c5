#include "dnlsnf/measure.hpp"

#include "dnlsnf/fourier.hpp"
#include "dnlsnf/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

namespace dnlsnf {

namespace {

using Signed = std::map<int, int>;  // site -> signed power

bool is_tangent(const MeasureConfig& cfg, int j) {
  return std::find(cfg.tangent.begin(), cfg.tangent.end(), j) != cfg.tangent.end();
}

ResonanceQuery make_query(const IVec& k, const Signed& l, int N) {
  // Canonical sign: first nonzero entry of (k, l by site) positive.
  int sgn = 0;
  for (int v : k)
    if (v) {
      sgn = v > 0 ? 1 : -1;
      break;
    }
  if (!sgn)
    for (auto& [j, e] : l)
      if (e) {
        sgn = e > 0 ? 1 : -1;
        break;
      }
  if (!sgn) sgn = 1;
  ResonanceQuery q;
  q.k = k;
  for (auto& v : q.k) v *= sgn;
  for (auto& [j, e0] : l) {
    int e = e0 * sgn;
    if (!e) continue;
    bool hat = std::abs(j) > N;
    SiteMap& dst = hat ? (e > 0 ? q.l_hat_pos : q.l_hat_neg) : (e > 0 ? q.l_acute_pos : q.l_acute_neg);
    dst.push_back({j, std::abs(e)});
  }
  return q;
}

Signed signed_l(const ResonanceQuery& q) {
  Signed l;
  for (auto& [j, e] : q.l_acute_pos) l[j] += e;
  for (auto& [j, e] : q.l_hat_pos) l[j] += e;
  for (auto& [j, e] : q.l_acute_neg) l[j] -= e;
  for (auto& [j, e] : q.l_hat_neg) l[j] -= e;
  return l;
}

double omega_shift(const MeasureConfig& cfg, int i) {
  return i < int(cfg.omega_shift.size()) ? cfg.omega_shift[i] : 0.0;
}

double Omega_shift(const MeasureConfig& cfg, int j) {
  auto it = cfg.Omega_shift.find(j);
  return it == cfg.Omega_shift.end() ? 0.0 : it->second;
}

// Divisor as c0 + sum coef_j xi_j.
std::pair<double, Signed> affine_divisor(const ResonanceQuery& q, const MeasureConfig& cfg) {
  double c0 = 0;
  Signed coef;
  for (std::size_t i = 0; i < cfg.tangent.size(); ++i) {
    int j = cfg.tangent[i];
    if (!q.k[i]) continue;
    c0 += q.k[i] * (double(j) * j + omega_shift(cfg, int(i)));
    coef[j] += q.k[i];
  }
  for (auto& [j, e] : signed_l(q)) {
    c0 += e * (double(j) * j + Omega_shift(cfg, j));
    coef[j] += e;
  }
  return {c0, coef};
}

bool is_excluded(const IVec& k, const Signed& l, int N) {
  // k = 0, l_acute = 0 and a hat pair i = -j carries no resonant set.
  for (int v : k)
    if (v) return false;
  std::vector<std::pair<int, int>> nz;
  for (auto& [j, e] : l)
    if (e) nz.push_back({j, e});
  for (auto& [j, e] : nz)
    if (std::abs(j) <= N) return false;
  return nz.size() == 2 && nz[0].first == -nz[1].first && std::abs(nz[0].second) == 1 &&
         nz[0].second == -nz[1].second;
}

bool nonzero(const IVec& k, const Signed& l) {
  for (int v : k)
    if (v) return true;
  for (auto& [j, e] : l)
    if (e) return true;
  return false;
}

// Signed multi-indices over `sites` with total size <= maxsize.
void signed_indices(const std::vector<int>& sites, int maxsize, std::vector<Signed>& out) {
  Signed cur;
  std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
    if (pos == sites.size()) {
      out.push_back(cur);
      return;
    }
    for (int e = -left; e <= left; ++e) {
      if (e) cur[sites[pos]] = e;
      else cur.erase(sites[pos]);
      rec(pos + 1, left - std::abs(e));
    }
    cur.erase(sites[pos]);
  };
  rec(0, maxsize);
}

bool passes_interval(const ResonanceQuery& q, const MeasureConfig& cfg, double eta_max) {
  auto [lo, hi] = divisor_range(q, cfg);
  double thr = eta_max * query_threshold_unit(q, cfg);
  return lo < thr && hi > -thr;
}

}  // namespace

ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == "full") return ThresholdMode::Full;
  if (s == "reduced") return ThresholdMode::Reduced;
  throw std::invalid_argument("unknown threshold mode: " + s);
}

const char* threshold_mode_name(ThresholdMode m) { return m == ThresholdMode::Full ? "full" : "reduced"; }

void MeasureConfig::validate() const {
  if (tangent.empty()) throw std::invalid_argument("measure config needs tangent sites");
  for (int j : tangent)
    if (j <= 0) throw std::invalid_argument("tangent sites must be positive");
  if (N_split < 1) throw std::invalid_argument("N_split must be at least 1");
  if (M < 0) throw std::invalid_argument("M must be nonnegative");
  if (K < 0) throw std::invalid_argument("K must be nonnegative");
  if (!(c1 > 0 && c2 > 0)) throw std::invalid_argument("c1, c2 must be positive");
}

int ResonanceQuery::M_weight() const {
  int m = 1;
  for (auto* s : {&l_acute_pos, &l_acute_neg, &l_hat_pos, &l_hat_neg})
    for (auto& [j, e] : *s) m = std::max(m, std::abs(j));
  return m;
}

int ResonanceQuery::acute_size() const { return site_total(l_acute_pos) + site_total(l_acute_neg); }
int ResonanceQuery::hat_size() const { return site_total(l_hat_pos) + site_total(l_hat_neg); }

bool ResonanceQuery::operator<(const ResonanceQuery& o) const {
  return std::tie(k, l_acute_pos, l_acute_neg, l_hat_pos, l_hat_neg) <
         std::tie(o.k, o.l_acute_pos, o.l_acute_neg, o.l_hat_pos, o.l_hat_neg);
}
bool ResonanceQuery::operator==(const ResonanceQuery& o) const { return !(*this < o) && !(o < *this); }

double query_threshold_unit(const ResonanceQuery& q, const MeasureConfig& cfg) {
  double base = q.M_weight() / (std::pow(4.0, cfg.M) * std::pow(l1(q.k) + 1.0, cfg.tau));
  if (cfg.mode == ThresholdMode::Reduced) return base;
  int a = q.acute_size();
  return base * std::exp(-double(a + 4) * (a + 4) * std::log(double(cfg.N_split)));
}

std::pair<double, double> divisor_range(const ResonanceQuery& q, const MeasureConfig& cfg) {
  auto [c0, coef] = affine_divisor(q, cfg);
  double lo = c0, hi = c0;
  for (auto& [j, c] : coef) {
    double a = c * 1.0 / std::abs(j), b = c * 2.0 / std::abs(j);
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

double divisor_at(const ResonanceQuery& q, const MeasureConfig& cfg, const std::map<int, double>& xi) {
  auto [c0, coef] = affine_divisor(q, cfg);
  double d = c0;
  for (auto& [j, c] : coef) {
    auto it = xi.find(j);
    d += c * (it == xi.end() ? 1.5 / std::abs(j) : it->second);
  }
  return d;
}

std::vector<ResonanceQuery> enumerate_queries(const MeasureConfig& cfg, double eta_max,
                                              EnumerationInfo* info) {
  cfg.validate();
  const int n = int(cfg.tangent.size());
  const int N = cfg.N_split;
  std::vector<int> acute;
  for (int j = -N; j <= N; ++j)
    if (j != 0 && !is_tangent(cfg, j)) acute.push_back(j);
  auto is_hat = [&](int j) { return std::abs(j) > N && !is_tangent(cfg, j); };

  double wmax = 0;
  for (std::size_t i = 0; i < cfg.tangent.size(); ++i)
    wmax = std::max(wmax, std::abs(double(cfg.tangent[i]) * cfg.tangent[i] + 2.0 + omega_shift(cfg, int(i))));
  EnumerationInfo inf;
  inf.j_star = 8.0 / cfg.c1 * (cfg.K * wmax + cfg.c2 * (cfg.M + 2) * double(N) * N);
  inf.j_star2 = cfg.C_star2 * cfg.K + 0.5 * (cfg.M + 2) * N;
  // Threshold growth per unit site weight, an upper bound for either mode.
  const double c = eta_max / std::pow(4.0, cfg.M);

  std::vector<Signed> lacs;
  signed_indices(acute, cfg.M + 2, lacs);
  std::set<ResonanceQuery> found;
  auto consider = [&](const IVec& k, const Signed& l) {
    ++inf.candidates;
    if (!nonzero(k, l) || is_excluded(k, l, N)) return;
    ResonanceQuery q = make_query(k, l, N);
    if (passes_interval(q, cfg, eta_max)) {
      found.insert(q);
      for (auto& [j, e] : l)
        if (std::abs(j) > N) inf.max_site = std::max(inf.max_site, std::abs(j));
    }
  };

  for (const IVec& k : l1_ball(n, cfg.K)) {
    for (const Signed& la : lacs) {
      int size_a = 0;
      for (auto& [j, e] : la) size_a += std::abs(e);
      int hb = std::min(2, cfg.M + 2 - size_a);
      long r0 = 0;
      for (int i = 0; i < n; ++i) r0 += long(k[i]) * cfg.tangent[i];
      for (auto& [j, e] : la) r0 += long(j) * e;
      ResonanceQuery base = make_query(k, la, N);
      auto [lo0, hi0] = divisor_range(base, cfg);
      double A = std::max(std::abs(lo0), std::abs(hi0)) + 4.0;

      if (r0 == 0) consider(k, la);
      if (hb >= 1) {
        for (int s : {1, -1}) {
          long j = -s * r0;
          if (j != 0 && is_hat(int(j))) {
            Signed l = la;
            l[int(j)] += s;
            consider(k, l);
          }
        }
      }
      if (hb >= 2) {
        // Same-sign pair: |Omega_i + Omega_j| >= i^2 + j^2 bounds both sites.
        int jb = int(std::ceil((c + std::sqrt(c * c + 4 * A)) / 2.0)) + 1;
        for (int s : {1, -1}) {
          long t = -s * r0;  // i + j
          for (int i = -jb; i <= jb; ++i) {
            long j = t - i;
            if (j < i || !is_hat(i) || !is_hat(int(j))) continue;
            Signed l = la;
            l[i] += s;
            l[int(j)] += s;
            consider(k, l);
          }
        }
        // Opposite pair e_i - e_j: |Omega_i - Omega_j| >= |i - j| |i + j| - 4 / N.
        long r = -r0;  // i - j
        if (r != 0) {
          double denom = std::abs(double(r)) - c / 2.0;
          if (denom <= 0) throw std::invalid_argument("eta_max too large for a finite enumeration");
          long ub = long(std::ceil((A + c * std::abs(double(r)) / 2.0 + 1.0) / denom)) + 1;
          for (long u = -ub; u <= ub; ++u) {
            if ((u + r) % 2 != 0) continue;
            long i = (u + r) / 2, j = (u - r) / 2;
            if (!is_hat(int(i)) || !is_hat(int(j))) continue;
            Signed l = la;
            l[int(i)] += 1;
            l[int(j)] -= 1;
            consider(k, l);
          }
        }
      }
    }
  }
  if (info) *info = inf;
  return {found.begin(), found.end()};
}

std::vector<ResonanceQuery> enumerate_queries_brute(const MeasureConfig& cfg, double eta_max, int J_box) {
  cfg.validate();
  const int n = int(cfg.tangent.size());
  const int N = cfg.N_split;
  std::vector<int> sites;
  for (int j = -J_box; j <= J_box; ++j)
    if (j != 0 && !is_tangent(cfg, j)) sites.push_back(j);
  std::set<ResonanceQuery> found;
  // Every k in the cube, every signed l on the site box, then all the filters.
  std::vector<IVec> ks;
  IVec k(n, -cfg.K);
  while (true) {
    int s = 0;
    for (int v : k) s += std::abs(v);
    if (s <= cfg.K) ks.push_back(k);
    int p = 0;
    while (p < n && ++k[p] > cfg.K) k[p++] = -cfg.K;
    if (p == n) break;
  }
  Signed cur;
  std::function<void(std::size_t, int, int)> rec = [&](std::size_t pos, int left, int hat_left) {
    if (pos == sites.size()) {
      for (const IVec& kk : ks) {
        long mom = 0;
        for (int i = 0; i < n; ++i) mom += long(kk[i]) * cfg.tangent[i];
        for (auto& [j, e] : cur) mom += long(j) * e;
        if (mom != 0 || !nonzero(kk, cur) || is_excluded(kk, cur, N)) continue;
        ResonanceQuery q = make_query(kk, cur, N);
        if (passes_interval(q, cfg, eta_max)) found.insert(q);
      }
      return;
    }
    int j = sites[pos];
    bool hat = std::abs(j) > N;
    int lim = hat ? std::min(left, hat_left) : left;
    for (int e = -lim; e <= lim; ++e) {
      if (e) cur[j] = e;
      else cur.erase(j);
      rec(pos + 1, left - std::abs(e), hat ? hat_left - std::abs(e) : hat_left);
    }
    cur.erase(j);
  };
  rec(0, cfg.M + 2, 2);
  return {found.begin(), found.end()};
}

std::vector<int> active_sites(const std::vector<ResonanceQuery>& qs, const MeasureConfig& cfg) {
  std::set<int> s(cfg.tangent.begin(), cfg.tangent.end());
  for (int j = -cfg.jmax; j <= cfg.jmax; ++j)
    if (j) s.insert(j);
  for (auto& q : qs)
    for (auto& [j, e] : signed_l(q)) s.insert(j);
  return {s.begin(), s.end()};
}

bool is_resonant(const std::vector<ResonanceQuery>& qs, const MeasureConfig& cfg,
                 const std::map<int, double>& xi, double eta) {
  for (auto& q : qs)
    if (std::abs(divisor_at(q, cfg, xi)) < eta * query_threshold_unit(q, cfg)) return true;
  return false;
}

MeasureReport measure_estimate(const MeasureConfig& cfg, const std::vector<double>& etas,
                               std::size_t samples, std::uint64_t seed, int bootstrap) {
  if (etas.empty()) throw std::invalid_argument("need at least one eta value");
  if (samples < 1000) throw std::invalid_argument("measure estimates need at least 1000 samples");
  MeasureReport rep;
  double eta_max = *std::max_element(etas.begin(), etas.end());
  auto qs = enumerate_queries(cfg, eta_max, &rep.info);
  rep.queries = qs.size();
  rep.active = active_sites(qs, cfg);

  std::map<int, int> slot;
  for (std::size_t a = 0; a < rep.active.size(); ++a) slot[rep.active[a]] = int(a);
  struct Compiled {
    double c0, unit;
    std::vector<std::pair<int, double>> coef;
  };
  std::vector<Compiled> comp;
  for (auto& q : qs) {
    auto [c0, coef] = affine_divisor(q, cfg);
    Compiled c{c0, query_threshold_unit(q, cfg), {}};
    for (auto& [j, v] : coef) c.coef.push_back({slot.at(j), double(v)});
    comp.push_back(std::move(c));
  }

  // Per sample, the smallest eta' at which it becomes resonant.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(1.0, 2.0);
  std::vector<double> crit(samples);
  std::vector<double> xi(rep.active.size());
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t a = 0; a < xi.size(); ++a) xi[a] = U(rng) / std::abs(rep.active[a]);
    double r = std::numeric_limits<double>::infinity();
    for (auto& c : comp) {
      double d = c.c0;
      for (auto& [a, v] : c.coef) d += v * xi[a];
      r = std::min(r, std::abs(d) / c.unit);
    }
    crit[s] = r;
  }

  auto fraction = [&](const std::vector<double>& v, double eta) {
    std::size_t cnt = 0;
    for (double r : v)
      if (r < eta) ++cnt;
    return double(cnt) / double(v.size());
  };
  std::uniform_int_distribution<std::size_t> pick(0, samples - 1);
  std::vector<std::vector<double>> boot(etas.size());
  std::vector<double> rs(samples);
  for (int b = 0; b < bootstrap; ++b) {
    for (auto& v : rs) v = crit[pick(rng)];
    std::sort(rs.begin(), rs.end());
    for (std::size_t e = 0; e < etas.size(); ++e) {
      auto it = std::lower_bound(rs.begin(), rs.end(), etas[e]);
      boot[e].push_back(double(it - rs.begin()) / double(samples));
    }
  }
  for (std::size_t e = 0; e < etas.size(); ++e) {
    MeasurePoint p;
    p.eta = etas[e];
    p.fraction = fraction(crit, etas[e]);
    p.samples = samples;
    auto& bv = boot[e];
    std::sort(bv.begin(), bv.end());
    if (!bv.empty()) {
      p.ci_lo = bv[std::size_t(0.025 * (bv.size() - 1))];
      p.ci_hi = bv[std::size_t(std::ceil(0.975 * (bv.size() - 1)))];
    }
    rep.points.push_back(p);
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (auto& p : rep.points) {
    if (p.fraction <= 0) continue;
    double x = std::log(p.eta), y = std::log(p.fraction);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++m;
  }
  if (m >= 2 && m * sxx - sx * sx > 0) {
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    rep.slope_defined = true;
  }
  return rep;
}

FreqDerivReport frequency_derivative_check(const DnlsConfig& base, const std::vector<int>& sites_a,
                                           const KamRunner& run, double h_rel, double C_bound) {
  FreqDerivReport rep;
  NormalForm nf0;
  try {
    nf0 = run(base);
  } catch (const std::exception& e) {
    rep.status = "failure";
    rep.message = std::string("KAM failed at the base parameter: ") + e.what();
    return rep;
  }
  const auto& m = *nf0.modes;
  for (int a : sites_a) {
    DnlsConfig c2 = base;
    double x0 = base.xi(a);
    double x1 = x0 * (1.0 + h_rel);
    c2.xi_set[a] = x1;
    double h = x1 - x0;
    NormalForm nf1;
    try {
      nf1 = run(c2);
    } catch (const std::exception& e) {
      rep.status = "failure";
      rep.message = "KAM failed at the shifted parameter for site " + std::to_string(a) + ": " + e.what();
      return rep;
    }
    double scale_eps = base.eps > 0 ? base.eps : 1.0;
    for (int i = 0; i < m.n; ++i) {
      double d = (nf1.omega[i] - nf0.omega[i]) / h;
      double dl = m.tangent_sites[i] == a ? 1.0 : 0.0;
      rep.rows.push_back({a, "omega", i, d, std::abs(d - dl) * std::abs(a) / scale_eps});
    }
    for (int j : m.normal_sites) {
      double d = (nf1.Omega_mean(j) - nf0.Omega_mean(j)) / h;
      double dl = j == a ? 1.0 : 0.0;
      rep.rows.push_back({a, "Omega", j, d, std::abs(d - dl) * std::abs(a) / (std::abs(j) * scale_eps)});
    }
  }
  for (auto& r : rep.rows) rep.fitted_C = std::max(rep.fitted_C, r.scaled);
  rep.pass = rep.fitted_C <= C_bound;
  return rep;
}

}  // namespace dnlsnf
