#include "dnlsnf/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace dnlsnf {

// ---------------------------------------------------------------- ModeSystem

std::shared_ptr<const ModeSystem> ModeSystem::make(std::vector<int> tangent, int jmax) {
  if (jmax < 1) throw std::invalid_argument("lattice cutoff must be positive");
  std::set<int> seen;
  for (int j : tangent) {
    if (j == 0) throw std::invalid_argument("tangent site 0 is not allowed");
    if (std::abs(j) > jmax) throw std::invalid_argument("tangent site outside lattice");
    if (!seen.insert(j).second) throw std::invalid_argument("tangent sites must be distinct");
  }
  auto m = std::make_shared<ModeSystem>();
  m->n = static_cast<int>(tangent.size());
  m->tangent_sites = std::move(tangent);
  m->lattice_cutoff = jmax;
  m->lookup_.assign(2 * jmax + 1, -1);
  for (int j = -jmax; j <= jmax; ++j) {
    if (j == 0 || seen.count(j)) continue;
    m->lookup_[j + jmax] = static_cast<int>(m->normal_sites.size());
    m->normal_sites.push_back(j);
  }
  return m;
}

int ModeSystem::normal_index(int site) const {
  if (site < -lattice_cutoff || site > lattice_cutoff) return -1;
  return lookup_[site + lattice_cutoff];
}

bool ModeSystem::same_as(const ModeSystem& o) const {
  return n == o.n && tangent_sites == o.tangent_sites && lattice_cutoff == o.lattice_cutoff;
}

// ---------------------------------------------------------------- TermIndex

int site_total(const SiteMap& m) {
  int s = 0;
  for (auto& [j, p] : m) s += p;
  return s;
}

int TermIndex::degree() const {
  int a = 0;
  for (int v : alpha) a += v;
  return 2 * a + site_total(mu) + site_total(gamma);
}

int TermIndex::k_l1() const {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

bool TermIndex::operator<(const TermIndex& o) const {
  if (k != o.k) return k < o.k;
  if (alpha != o.alpha) return alpha < o.alpha;
  if (mu != o.mu) return mu < o.mu;
  return gamma < o.gamma;
}

bool TermIndex::operator==(const TermIndex& o) const {
  return k == o.k && alpha == o.alpha && mu == o.mu && gamma == o.gamma;
}

std::size_t TermHash::operator()(const TermIndex& t) const {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&h](long v) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  for (int v : t.k) mix(v);
  mix(1000003);
  for (int v : t.alpha) mix(v);
  mix(1000033);
  for (auto& [j, p] : t.mu) mix(j * 64 + p);
  mix(1000037);
  for (auto& [j, p] : t.gamma) mix(j * 64 + p);
  return h;
}

int site_pow(const SiteMap& m, int site) {
  for (auto& [j, p] : m)
    if (j == site) return p;
  return 0;
}

void site_add(SiteMap& m, int site, int dp) {
  auto it = std::lower_bound(m.begin(), m.end(), site,
                             [](const std::pair<int, int>& e, int s) { return e.first < s; });
  if (it != m.end() && it->first == site) {
    it->second += dp;
    if (it->second == 0) m.erase(it);
    else if (it->second < 0) throw std::logic_error("negative site power");
  } else {
    if (dp < 0) throw std::logic_error("negative site power");
    if (dp > 0) m.insert(it, {site, dp});
  }
}

SiteMap site_sum(const SiteMap& a, const SiteMap& b) {
  SiteMap out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) out.push_back(a[i++]);
    else if (i == a.size() || b[j].first < a[i].first) out.push_back(b[j++]);
    else {
      out.push_back({a[i].first, a[i].second + b[j].second});
      ++i;
      ++j;
    }
  }
  return out;
}

int normal_momentum(const TermIndex& t) {
  int m = 0;
  for (auto& [j, p] : t.mu) m += j * p;
  for (auto& [j, p] : t.gamma) m -= j * p;
  return m;
}

int momentum(const TermIndex& t, const ModeSystem& m) {
  if (static_cast<int>(t.k.size()) != m.n) throw IndexError("Fourier index has wrong length");
  for (auto& [j, p] : t.mu)
    if (!m.is_normal(j)) throw IndexError("site " + std::to_string(j) + " is not a normal site");
  for (auto& [j, p] : t.gamma)
    if (!m.is_normal(j)) throw IndexError("site " + std::to_string(j) + " is not a normal site");
  int s = normal_momentum(t);
  for (int i = 0; i < m.n; ++i) s += t.k[i] * m.tangent_sites[i];
  return s;
}

// ---------------------------------------------------------------- Domain / points

void DomainSpec::validate() const {
  if (!(s > 0 && s <= 1)) throw std::invalid_argument("domain width s must lie in (0,1]");
  if (!(r > 0 && r <= 1)) throw std::invalid_argument("domain radius r must lie in (0,1]");
  if (!(p >= 1)) throw std::invalid_argument("Sobolev exponent p must be >= 1");
}

PhasePoint PhasePoint::zeros(const ModeSystem& m) {
  PhasePoint w;
  w.x.assign(m.n, 0.0);
  w.y.assign(m.n, 0.0);
  w.z.assign(m.normal_sites.size(), 0.0);
  w.zb.assign(m.normal_sites.size(), 0.0);
  return w;
}

// ---------------------------------------------------------------- HamSeries

HamSeries::HamSeries(ModesPtr modes, int K, int D, bool real)
    : modes_(std::move(modes)), K_(K), D_(D), real_(real) {
  if (!modes_) throw std::invalid_argument("series needs a mode system");
  if (K < 0 || D < 0) throw std::invalid_argument("cutoffs must be nonnegative");
}

TermIndex HamSeries::idx(const ModeSystem& m, IVec k, IVec alpha, SiteMap mu, SiteMap gamma) {
  TermIndex t;
  t.k = k.empty() ? IVec(m.n, 0) : std::move(k);
  t.alpha = alpha.empty() ? IVec(m.n, 0) : std::move(alpha);
  std::sort(mu.begin(), mu.end());
  std::sort(gamma.begin(), gamma.end());
  for (auto& e : mu) site_add(t.mu, e.first, e.second);
  for (auto& e : gamma) site_add(t.gamma, e.first, e.second);
  return t;
}

void HamSeries::add_term(const TermIndex& t, cplx c) {
  const auto& m = *modes_;
  if (static_cast<int>(t.k.size()) != m.n || static_cast<int>(t.alpha.size()) != m.n)
    throw IndexError("term index length does not match tangent dimension");
  for (auto& [j, p] : t.mu)
    if (!m.is_normal(j) || p < 1) throw IndexError("invalid z site " + std::to_string(j));
  for (auto& [j, p] : t.gamma)
    if (!m.is_normal(j) || p < 1) throw IndexError("invalid zbar site " + std::to_string(j));
  for (int a : t.alpha)
    if (a < 0) throw IndexError("negative y power");
  if (t.k_l1() > K_ || t.degree() > D_) return;
  if (c == cplx(0.0)) return;
  auto [it, inserted] = terms_.emplace(t, c);
  if (!inserted) it->second += c;
}

cplx HamSeries::coeff(const TermIndex& t) const {
  auto it = terms_.find(t);
  return it == terms_.end() ? cplx(0.0) : it->second;
}

double HamSeries::max_abs() const {
  double m = 0;
  for (auto& [t, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

void HamSeries::prune(double rel) {
  double thr = rel * max_abs();
  for (auto it = terms_.begin(); it != terms_.end();) {
    double a = std::abs(it->second);
    if (a == 0.0 || a < thr) it = terms_.erase(it);
    else ++it;
  }
}

HamSeries HamSeries::with_cutoffs(int K, int D) const {
  HamSeries out(modes_, K, D, real_);
  for (auto& [t, c] : terms_) out.add_term(t, c);
  return out;
}

void check_compatible(const HamSeries& a, const HamSeries& b) {
  if (a.modes_ptr() != b.modes_ptr() && !a.modes().same_as(b.modes()))
    throw std::invalid_argument("series live on different mode systems");
}

// ---------------------------------------------------------------- arithmetic

HamSeries add(const HamSeries& a, const HamSeries& b) {
  check_compatible(a, b);
  HamSeries out(a.modes_ptr(), std::min(a.K(), b.K()), std::min(a.D(), b.D()),
                a.real_flag() && b.real_flag());
  for (auto& [t, c] : a.terms()) out.add_term(t, c);
  for (auto& [t, c] : b.terms()) out.add_term(t, c);
  out.prune();
  return out;
}

HamSeries scale(const HamSeries& a, cplx c) {
  HamSeries out = a.empty_like();
  bool real = a.real_flag() && c.imag() == 0.0;
  out.set_real_flag(real);
  if (c == cplx(0.0)) return out;
  for (auto& [t, v] : a.terms()) out.add_term(t, v * c);
  return out;
}

HamSeries sub(const HamSeries& a, const HamSeries& b) { return add(a, scale(b, -1.0)); }

HamSeries mul(const HamSeries& a, const HamSeries& b) {
  check_compatible(a, b);
  const int K = std::min(a.K(), b.K());
  const int D = std::min(a.D(), b.D());
  const int n = a.modes().n;
  std::unordered_map<TermIndex, cplx, TermHash> acc;
  for (auto& [ta, ca] : a.terms()) {
    int da = ta.degree();
    for (auto& [tb, cb] : b.terms()) {
      if (da + tb.degree() > D) continue;
      TermIndex t;
      t.k.resize(n);
      t.alpha.resize(n);
      int kl1 = 0;
      for (int i = 0; i < n; ++i) {
        t.k[i] = ta.k[i] + tb.k[i];
        kl1 += std::abs(t.k[i]);
        t.alpha[i] = ta.alpha[i] + tb.alpha[i];
      }
      if (kl1 > K) continue;
      t.mu = site_sum(ta.mu, tb.mu);
      t.gamma = site_sum(ta.gamma, tb.gamma);
      acc[t] += ca * cb;
    }
  }
  HamSeries out(a.modes_ptr(), K, D, a.real_flag() && b.real_flag());
  for (auto& [t, c] : acc) out.add_term(t, c);
  out.prune();
  return out;
}

HamSeries filter_momentum_class(const HamSeries& h, int b) {
  HamSeries out = h.empty_like();
  for (auto& [t, c] : h.terms())
    if (momentum(t, h.modes()) == b) out.add_term(t, c);
  return out;
}

HamSeries gamma_truncate(const HamSeries& h, int K) {
  if (K < 0) throw std::invalid_argument("truncation order must be nonnegative");
  HamSeries out = h.empty_like();
  for (auto& [t, c] : h.terms())
    if (t.k_l1() <= K) out.add_term(t, c);
  return out;
}

std::pair<HamSeries, HamSeries> split_low_high(const HamSeries& h) {
  HamSeries lo = h.empty_like(), hi = h.empty_like();
  for (auto& [t, c] : h.terms()) (t.degree() <= 2 ? lo : hi).add_term(t, c);
  return {lo, hi};
}

HamSeries degree_part(const HamSeries& h, int deg) {
  HamSeries out = h.empty_like();
  for (auto& [t, c] : h.terms())
    if (t.degree() == deg) out.add_term(t, c);
  return out;
}

HamSeries x_mean(const HamSeries& h) {
  HamSeries out = h.empty_like();
  for (auto& [t, c] : h.terms()) {
    bool zero = std::all_of(t.k.begin(), t.k.end(), [](int v) { return v == 0; });
    if (zero) out.add_term(t, c);
  }
  return out;
}

static TermIndex partner_index(const TermIndex& t) {
  TermIndex p = t;
  for (auto& v : p.k) v = -v;
  std::swap(p.mu, p.gamma);
  return p;
}

HamSeries conj_partner(const HamSeries& h) {
  HamSeries out = h.empty_like();
  for (auto& [t, c] : h.terms()) out.add_term(partner_index(t), std::conj(c));
  return out;
}

double reality_defect(const HamSeries& h) {
  double worst = 0;
  for (auto& [t, c] : h.terms()) {
    cplx d = std::conj(c) - h.coeff(partner_index(t));
    worst = std::max(worst, std::abs(d));
  }
  double m = h.max_abs();
  return m > 0 ? worst / m : 0.0;
}

HamSeries realify(const HamSeries& h) {
  HamSeries out = scale(add(h, conj_partner(h)), 0.5);
  out.set_real_flag(true);
  return out;
}

// ---------------------------------------------------------------- patterns and norms

bool Pattern::operator<(const Pattern& o) const {
  if (alpha != o.alpha) return alpha < o.alpha;
  if (mu != o.mu) return mu < o.mu;
  return gamma < o.gamma;
}

int Pattern::degree() const {
  int a = 0;
  for (int v : alpha) a += v;
  return 2 * a + site_total(mu) + site_total(gamma);
}

std::map<Pattern, Fourier> group_patterns(const HamSeries& h) {
  std::map<Pattern, Fourier> out;
  for (auto& [t, c] : h.terms()) out[Pattern{t.alpha, t.mu, t.gamma}][t.k] += c;
  return out;
}

void add_pattern(HamSeries& h, const Pattern& p, const Fourier& f, cplx factor) {
  for (auto& [k, c] : f) h.add_term(TermIndex{k, p.alpha, p.mu, p.gamma}, c * factor);
}

double norm_coeff(const Fourier& w, double s) {
  if (s < 0) throw std::invalid_argument("norm width must be nonnegative");
  double acc = 0;
  for (auto& [k, c] : w) {
    int l1 = 0;
    for (int v : k) l1 += std::abs(v);
    acc += std::abs(c) * std::exp(l1 * s);
  }
  if (!std::isfinite(acc)) throw std::overflow_error("Fourier norm overflows");
  return acc;
}

int lattice_weight(const Pattern& p) {
  int m = 1;
  for (auto& [j, q] : p.mu) m = std::max(m, std::abs(j));
  for (auto& [j, q] : p.gamma) m = std::max(m, std::abs(j));
  return m;
}

std::pair<double, double> majorant_norms(const HamSeries& h, const DomainSpec& d) {
  std::map<int, double> sup, sup_star;
  for (auto& [p, f] : group_patterns(h)) {
    double v = norm_coeff(f, d.s);
    int deg = p.degree();
    sup[deg] = std::max(sup[deg], v);
    sup_star[deg] = std::max(sup_star[deg], v * lattice_weight(p));
  }
  double a = 0, b = 0;
  for (auto& [deg, v] : sup) a += std::pow(d.r, deg) * v;
  for (auto& [deg, v] : sup_star) b += std::pow(d.r, deg) * v;
  return {a, b};
}

// ---------------------------------------------------------------- evaluation

cplx term_value(const TermIndex& t, cplx c, const PhasePoint& w, const ModeSystem& m) {
  cplx phase = 0.0;
  cplx v = c;
  for (int i = 0; i < m.n; ++i) {
    if (t.k[i]) phase += static_cast<double>(t.k[i]) * w.x[i];
    for (int a = 0; a < t.alpha[i]; ++a) v *= w.y[i];
  }
  if (phase != cplx(0.0)) v *= std::exp(cplx(0, 1) * phase);
  for (auto& [j, p] : t.mu) {
    cplx z = w.z[m.normal_index(j)];
    for (int a = 0; a < p; ++a) v *= z;
  }
  for (auto& [j, p] : t.gamma) {
    cplx z = w.zb[m.normal_index(j)];
    for (int a = 0; a < p; ++a) v *= z;
  }
  return v;
}

cplx evaluate(const HamSeries& h, const PhasePoint& w) {
  cplx acc = 0.0;
  for (auto& [t, c] : h.terms()) acc += term_value(t, c, w, h.modes());
  return acc;
}

double sobolev_norm(const std::vector<cplx>& z, const ModeSystem& m, double p) {
  double acc = 0;
  for (std::size_t i = 0; i < z.size(); ++i)
    acc += std::pow(std::abs(m.normal_sites[i]), 2 * p) * std::norm(z[i]);
  return std::sqrt(acc);
}

std::vector<PhasePoint> sample_domain(const ModeSystem& m, const DomainSpec& d, const GridSpec& g) {
  std::mt19937_64 rng(g.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<PhasePoint> pts;
  int total_angles = 1;
  for (int i = 0; i < m.n; ++i) total_angles *= g.angle_points;
  const double two_pi = 2 * M_PI;
  for (int ia = 0; ia < total_angles; ++ia) {
    std::vector<double> theta(m.n);
    int rest = ia;
    for (int i = 0; i < m.n; ++i) {
      theta[i] = two_pi * (rest % g.angle_points) / g.angle_points;
      rest /= g.angle_points;
    }
    for (int ir = 1; ir <= g.radial_points; ++ir) {
      double rho = static_cast<double>(ir) / g.radial_points;
      PhasePoint w = PhasePoint::zeros(m);
      for (int i = 0; i < m.n; ++i) {
        double sign = U(rng) < 0.5 ? -1.0 : 1.0;
        w.x[i] = cplx(theta[i], sign * d.s);
        w.y[i] = std::polar(rho * d.r * d.r, two_pi * U(rng));
      }
      // Random directions for z and zbar scaled to ||z||_p = ||zb||_p = rho r / 2.
      for (std::size_t j = 0; j < w.z.size(); ++j) {
        w.z[j] = std::polar(U(rng), two_pi * U(rng));
        w.zb[j] = std::polar(U(rng), two_pi * U(rng));
      }
      double nz = sobolev_norm(w.z, m, d.p), nzb = sobolev_norm(w.zb, m, d.p);
      for (std::size_t j = 0; j < w.z.size(); ++j) {
        if (nz > 0) w.z[j] *= 0.5 * rho * d.r / nz;
        if (nzb > 0) w.zb[j] *= 0.5 * rho * d.r / nzb;
      }
      pts.push_back(std::move(w));
    }
  }
  return pts;
}

// ---------------------------------------------------------------- serialization

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

static std::string join_ivec(const IVec& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

static std::string join_sites(const SiteMap& m) {
  std::string s;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(m[i].first) + ":" + std::to_string(m[i].second);
  }
  return s;
}

std::string serialize(const HamSeries& h) {
  std::ostringstream os;
  const auto& m = h.modes();
  os << "# dnlsnf series v1\n";
  os << "n " << m.n << "\n";
  os << "tangent";
  for (int j : m.tangent_sites) os << ' ' << j;
  os << "\njmax " << m.lattice_cutoff << "\n";
  os << "K " << h.K() << "\nD " << h.D() << "\nreal " << (h.real_flag() ? 1 : 0) << "\n";
  os << "terms " << h.size() << "\n";
  for (auto& [t, c] : h.terms())
    os << join_ivec(t.k) << '|' << join_ivec(t.alpha) << '|' << join_sites(t.mu) << '|'
       << join_sites(t.gamma) << '|' << format_double(c.real()) << ',' << format_double(c.imag())
       << '\n';
  return os.str();
}

static std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

static IVec parse_ivec(const std::string& s) {
  IVec v;
  if (s.empty()) return v;
  for (auto& part : split(s, ',')) v.push_back(std::stoi(part));
  return v;
}

static SiteMap parse_sites(const std::string& s) {
  SiteMap m;
  if (s.empty()) return m;
  for (auto& part : split(s, ',')) {
    auto kv = split(part, ':');
    if (kv.size() != 2) throw std::runtime_error("malformed site entry '" + part + "'");
    site_add(m, std::stoi(kv[0]), std::stoi(kv[1]));
  }
  return m;
}

HamSeries deserialize(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int n = -1, jmax = -1, K = -1, D = -1, real = 1;
  std::size_t count = 0;
  std::vector<int> tangent;
  bool header_done = false;
  std::vector<std::string> body;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_done) {
      std::istringstream ls(line);
      std::string key;
      ls >> key;
      if (key == "n") ls >> n;
      else if (key == "tangent") {
        int j;
        while (ls >> j) tangent.push_back(j);
      } else if (key == "jmax") ls >> jmax;
      else if (key == "K") ls >> K;
      else if (key == "D") ls >> D;
      else if (key == "real") ls >> real;
      else if (key == "terms") {
        ls >> count;
        header_done = true;
      } else throw std::runtime_error("unknown series header key '" + key + "'");
      continue;
    }
    body.push_back(line);
  }
  if (!header_done || n < 0 || jmax < 0 || K < 0 || D < 0 || static_cast<int>(tangent.size()) != n)
    throw std::runtime_error("incomplete series header");
  if (body.size() != count) throw std::runtime_error("term count mismatch");
  HamSeries h(ModeSystem::make(tangent, jmax), K, D, real != 0);
  for (auto& b : body) {
    auto f = split(b, '|');
    if (f.size() != 5) throw std::runtime_error("malformed term line");
    auto c = split(f[4], ',');
    if (c.size() != 2) throw std::runtime_error("malformed coefficient");
    TermIndex t{parse_ivec(f[0]), parse_ivec(f[1]), parse_sites(f[2]), parse_sites(f[3])};
    h.add_term(t, cplx(std::strtod(c[0].c_str(), nullptr), std::strtod(c[1].c_str(), nullptr)));
  }
  return h;
}

}  // namespace dnlsnf
