// Sparse truncated Fourier-Taylor series on T^n x C^n x (z, zbar) lattice.
#pragma once

#include <boost/container/small_vector.hpp>

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dnlsnf {

using cplx = std::complex<double>;
using IVec = boost::container::small_vector<int, 4>;
// Sorted by site, powers >= 1.
using SiteMap = boost::container::small_vector<std::pair<int, int>, 4>;

inline constexpr double kPruneRel = 1e-14;

struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModeSystem {
  int n = 0;
  std::vector<int> tangent_sites;
  int lattice_cutoff = 0;
  std::vector<int> normal_sites;  // ascending

  static std::shared_ptr<const ModeSystem> make(std::vector<int> tangent, int jmax);
  // Position of a normal site in normal_sites, -1 if not a normal site.
  int normal_index(int site) const;
  bool is_normal(int site) const { return normal_index(site) >= 0; }
  bool same_as(const ModeSystem& o) const;

 private:
  std::vector<int> lookup_;
};
using ModesPtr = std::shared_ptr<const ModeSystem>;

struct TermIndex {
  IVec k;
  IVec alpha;
  SiteMap mu;
  SiteMap gamma;

  int degree() const;
  int k_l1() const;
  bool operator<(const TermIndex& o) const;
  bool operator==(const TermIndex& o) const;
};

struct TermHash {
  std::size_t operator()(const TermIndex& t) const;
};

// Helpers on SiteMap.
int site_pow(const SiteMap& m, int site);
void site_add(SiteMap& m, int site, int dp);  // keeps sorted, drops zeros
SiteMap site_sum(const SiteMap& a, const SiteMap& b);
int site_total(const SiteMap& m);

// Total lattice momentum of a monomial (see README for the sign convention).
int momentum(const TermIndex& t, const ModeSystem& m);
// Normal-site part sum_j j (mu_j - gamma_j).
int normal_momentum(const TermIndex& t);

struct DomainSpec {
  double s = 0.5;
  double r = 0.5;
  double p = 2.0;
  void validate() const;
};

struct PhasePoint {
  std::vector<cplx> x, y;
  std::vector<cplx> z, zb;  // aligned with ModeSystem::normal_sites
  static PhasePoint zeros(const ModeSystem& m);
};

class HamSeries {
 public:
  using Map = std::map<TermIndex, cplx>;

  HamSeries() = default;
  HamSeries(ModesPtr modes, int K, int D, bool real = true);

  const ModeSystem& modes() const { return *modes_; }
  const ModesPtr& modes_ptr() const { return modes_; }
  int K() const { return K_; }
  int D() const { return D_; }
  bool real_flag() const { return real_; }
  void set_real_flag(bool r) { real_ = r; }
  const Map& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  // Accumulate; terms beyond the cutoffs are dropped silently, invalid sites throw.
  void add_term(const TermIndex& t, cplx c);
  cplx coeff(const TermIndex& t) const;
  void erase(const TermIndex& t) { terms_.erase(t); }
  void prune(double rel = kPruneRel);
  double max_abs() const;
  HamSeries empty_like() const { return HamSeries(modes_, K_, D_, real_); }
  HamSeries with_cutoffs(int K, int D) const;

  // Convenience monomial builders.
  static TermIndex idx(const ModeSystem& m, IVec k = {}, IVec alpha = {}, SiteMap mu = {},
                       SiteMap gamma = {});

 private:
  ModesPtr modes_;
  int K_ = 0;
  int D_ = 0;
  bool real_ = true;
  Map terms_;
};

void check_compatible(const HamSeries& a, const HamSeries& b);

HamSeries add(const HamSeries& a, const HamSeries& b);
HamSeries sub(const HamSeries& a, const HamSeries& b);
HamSeries scale(const HamSeries& a, cplx c);
HamSeries mul(const HamSeries& a, const HamSeries& b);

HamSeries filter_momentum_class(const HamSeries& h, int b);
HamSeries gamma_truncate(const HamSeries& h, int K);
std::pair<HamSeries, HamSeries> split_low_high(const HamSeries& h);
HamSeries degree_part(const HamSeries& h, int deg);
HamSeries x_mean(const HamSeries& h);

// Reality: conj(c(k,a,mu,g)) == c(-k,a,g,mu) within tol * max|c|.
double reality_defect(const HamSeries& h);
HamSeries conj_partner(const HamSeries& h);  // c(k,a,mu,g) -> conj(c(-k,a,g,mu))
HamSeries realify(const HamSeries& h);        // (h + conj_partner(h)) / 2

// Coefficient functions grouped by (alpha, mu, gamma).
struct Pattern {
  IVec alpha;
  SiteMap mu, gamma;
  bool operator<(const Pattern& o) const;
  int degree() const;
};
using Fourier = std::map<IVec, cplx>;
std::map<Pattern, Fourier> group_patterns(const HamSeries& h);
void add_pattern(HamSeries& h, const Pattern& p, const Fourier& f, cplx factor = 1.0);

// Weighted l1 Fourier norm sum |W_k| e^{|k|_1 s}.
double norm_coeff(const Fourier& w, double s);
int lattice_weight(const Pattern& p);  // M_{mu gamma}, 1 if no normal site
std::pair<double, double> majorant_norms(const HamSeries& h, const DomainSpec& d);

cplx evaluate(const HamSeries& h, const PhasePoint& w);
cplx term_value(const TermIndex& t, cplx c, const PhasePoint& w, const ModeSystem& m);

double sobolev_norm(const std::vector<cplx>& z, const ModeSystem& m, double p);

// Deterministic boundary sample of D(s,r,r): angles x_i = theta_i + i*s*sign.
struct GridSpec {
  int angle_points = 16;
  int radial_points = 8;
  std::uint64_t seed = 12345;
};
std::vector<PhasePoint> sample_domain(const ModeSystem& m, const DomainSpec& d, const GridSpec& g);

std::string serialize(const HamSeries& h);
HamSeries deserialize(const std::string& text);

std::string format_double(double v);  // 17 significant digits

}  // namespace dnlsnf
