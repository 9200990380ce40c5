#include "dnlsnf/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace dnlsnf {

namespace {

using VT = ValueType;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string t = boost::trim_copy(s);
  if (t.empty()) return parts;
  boost::split(parts, t, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  return parts;
}

bool parse_long(const std::string& s, long& out) {
  std::string t = boost::trim_copy(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && p == t.data() + t.size() && !t.empty();
}

bool parse_real(const std::string& s, double& out) {
  std::string t = boost::trim_copy(s);
  if (t.empty()) return false;
  std::istringstream is(t);
  is.imbue(std::locale::classic());
  is >> out;
  return !is.fail() && is.eof();
}

bool parse_bool(const std::string& s, bool& out) {
  std::string t = boost::to_lower_copy(boost::trim_copy(s));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return out = true, true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return out = false, true;
  return false;
}

bool valid(VT type, const std::string& v) {
  long l;
  double d;
  bool b;
  switch (type) {
    case VT::Int: return parse_long(v, l);
    case VT::Real: return parse_real(v, d);
    case VT::Bool: return parse_bool(v, b);
    case VT::String: return true;
    case VT::IntList:
      for (auto& p : split_list(v))
        if (!parse_long(p, l)) return false;
      return true;
    case VT::RealList:
      for (auto& p : split_list(v))
        if (!parse_real(p, d)) return false;
      return true;
    case VT::SiteReals:
      for (auto& p : split_list(v)) {
        auto c = p.find(':');
        if (c == std::string::npos || !parse_long(p.substr(0, c), l) || !parse_real(p.substr(c + 1), d))
          return false;
      }
      return true;
  }
  return false;
}

const ConfigKey* find_key(const std::string& full) {
  for (const auto& k : config_schema())
    if (k.full() == full) return &k;
  return nullptr;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"modes", "tangent", VT::IntList, "1,2", "tangent sites j_1..j_n (positive, distinct)"},
      {"modes", "jmax", VT::Int, "12", "lattice cutoff J_max"},
      {"modes", "zeta", VT::RealList, "1.5,1.5", "torus actions zeta_i"},
      {"modes", "xi", VT::SiteReals, "1:1.6180339887,2:0.6180339887",
       "explicit parameters xi_j as site:value; other sites sit at 1.5/|j|"},

      {"domain", "s", VT::Real, "0.5", "analyticity width"},
      {"domain", "r", VT::Real, "0.5", "radius in (y, z)"},
      {"domain", "p", VT::Real, "2", "Sobolev index"},

      {"kam", "steps", VT::Int, "4", "number of KAM steps"},
      {"kam", "eta", VT::Real, "0.5", "schedule eta"},
      {"kam", "chi", VT::Real, "0.5", "schedule chi, 0 < chi <= min(s, r)"},
      {"kam", "K_glob", VT::Int, "12", "global Fourier cutoff"},
      {"kam", "resonance_gamma", VT::Real, "1e-4", "stage resonance threshold gamma"},
      {"kam", "residual_tol", VT::Real, "1e-11", "large-coefficient residual before dense fallback"},
      {"kam", "gamma0", VT::Real, "0.1", "Diophantine gamma_0 for omega"},
      {"kam", "gamma", VT::Real, "0.05", "Diophantine gamma for omega and lambda"},
      {"kam", "tau", VT::Real, "2", "Diophantine exponent"},
      {"kam", "K_scan", VT::Int, "50", "|k| range of the Diophantine scan"},
      {"kam", "modulo_integers", VT::Bool, "false", "scan distance of <k,omega> to the integers"},
      {"kam", "lie_order_cap", VT::Int, "12", "maximum Lie series order"},

      {"birkhoff", "M", VT::Int, "2", "normal form order M"},
      {"birkhoff", "N_split", VT::Int, "4", "low/high site split N"},
      {"birkhoff", "rho", VT::Real, "0.1", "rho"},
      {"birkhoff", "eta_acute", VT::Real, "0.1", "non-resonance scale"},
      {"birkhoff", "tau", VT::Real, "2.5", "exponent in the resonance threshold"},
      {"birkhoff", "c1", VT::Real, "0", "frequency growth lower constant, 0 = measured"},
      {"birkhoff", "c2", VT::Real, "0", "frequency growth upper constant, 0 = measured"},
      {"birkhoff", "C0", VT::Real, "0", "constant C0, 0 = 40(tau+n)+1"},
      {"birkhoff", "N0", VT::Real, "1", "N0"},
      {"birkhoff", "rho0", VT::Real, "0", "rho0 bound, 0 disables the check"},
      {"birkhoff", "delta", VT::Real, "0.02", "delta for the x-dependence removal"},
      {"birkhoff", "remove_x", VT::Bool, "true", "run the x-dependence removal"},

      {"dnls", "eps", VT::Real, "1e-3", "nonlinearity epsilon"},
      {"dnls", "K", VT::Int, "12", "Fourier cutoff of the model series"},
      {"dnls", "D", VT::Int, "4", "degree cutoff of the model series"},
      {"dnls", "dt", VT::Real, "1e-3", "integrator step"},
      {"dnls", "drift_tol", VT::Real, "1e-8", "per-step energy change that triggers step halving"},
      {"dnls", "T", VT::Real, "1000", "simulate: final time"},
      {"dnls", "sample_dt", VT::Real, "10", "simulate: output spacing"},
      {"dnls", "z_norm", VT::Real, "0.01", "simulate: ||z0||_p of the initial data"},
      {"dnls", "deltas", VT::RealList, "0.02,0.05", "stability: delta values"},
      {"dnls", "samples_per_direction", VT::Int, "40", "stability: samples per time direction"},
      {"dnls", "z0_fraction", VT::Real, "0.5", "stability: ||z0||_p / delta"},
      {"dnls", "rk_steps", VT::Int, "16", "stability: RK4 substeps per generator flow"},
      {"dnls", "horizon", VT::Real, "0", "stability: horizon override, 0 = delta^(-M/4)"},

      {"measure", "K", VT::Int, "6", "|k|_1 bound of the queries"},
      {"measure", "N_split", VT::Int, "4", "low/high site split N"},
      {"measure", "M", VT::Int, "2", "order M"},
      {"measure", "tau", VT::Real, "2.5", "threshold exponent"},
      {"measure", "c1", VT::Real, "1", "frequency growth lower constant"},
      {"measure", "c2", VT::Real, "2", "frequency growth upper constant"},
      {"measure", "C_star2", VT::Real, "1", "constant in the logged j_** cutoff"},
      {"measure", "mode", VT::String, "reduced", "threshold mode: full | reduced"},
      {"measure", "eta_min", VT::Real, "1e-3", "smallest eta'"},
      {"measure", "eta_max", VT::Real, "1e-2", "largest eta'"},
      {"measure", "points", VT::Int, "5", "eta' values, log spaced"},
      {"measure", "samples", VT::Int, "10000", "Monte-Carlo samples per eta'"},
      {"measure", "bootstrap", VT::Int, "200", "bootstrap resamples"},
      {"measure", "fd_sites", VT::IntList, "", "sites a for the frequency-derivative table, empty = skip"},
      {"measure", "fd_h", VT::Real, "1e-6", "relative finite-difference step"},
      {"measure", "fd_C", VT::Real, "10", "bound on the fitted derivative constant"},

      {"output", "seed", VT::Int, "1", "master seed"},
      {"output", "jobs", VT::Int, "1", "worker count (outputs do not depend on it)"},
      {"output", "tidy", VT::Bool, "true", "emit long-format plot data after the run"},
  };
  return schema;
}

RunConfig::RunConfig() {
  for (const auto& k : config_schema()) values_[k.full()] = k.default_value;
}

void RunConfig::set(const std::string& full_key, const std::string& value) {
  const ConfigKey* k = find_key(full_key);
  if (!k) throw SchemaError("unknown configuration key '" + full_key + "'");
  std::string v = boost::trim_copy(value);
  if (!valid(k->type, v)) throw SchemaError("malformed value '" + v + "' for '" + full_key + "'");
  values_[full_key] = v;
}

void RunConfig::apply_override(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw SchemaError("override '" + assignment + "' is not key=value");
  set(boost::trim_copy(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig RunConfig::from_string(const std::string& ini_text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(ini_text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw SchemaError(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw SchemaError("key '" + section + "' outside any section");
    for (const auto& [key, val] : body) cfg.set(section + "." + key, val.get_value<std::string>());
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

const std::string& RunConfig::raw(const std::string& k) const {
  auto it = values_.find(k);
  if (it == values_.end()) throw SchemaError("unknown configuration key '" + k + "'");
  return it->second;
}

long RunConfig::get_int(const std::string& k) const {
  long v = 0;
  if (!parse_long(raw(k), v)) throw SchemaError("'" + k + "' is not an integer");
  return v;
}

std::uint64_t RunConfig::get_u64(const std::string& k) const {
  long v = get_int(k);
  if (v < 0) throw SchemaError("'" + k + "' must be non-negative");
  return std::uint64_t(v);
}

double RunConfig::get_real(const std::string& k) const {
  double v = 0;
  if (!parse_real(raw(k), v)) throw SchemaError("'" + k + "' is not a number");
  return v;
}

bool RunConfig::get_bool(const std::string& k) const {
  bool v = false;
  if (!parse_bool(raw(k), v)) throw SchemaError("'" + k + "' is not a boolean");
  return v;
}

std::string RunConfig::get_string(const std::string& k) const { return raw(k); }

std::vector<int> RunConfig::get_ints(const std::string& k) const {
  std::vector<int> out;
  for (auto& p : split_list(raw(k))) {
    long v;
    if (!parse_long(p, v)) throw SchemaError("'" + k + "' is not an integer list");
    out.push_back(int(v));
  }
  return out;
}

std::vector<double> RunConfig::get_reals(const std::string& k) const {
  std::vector<double> out;
  for (auto& p : split_list(raw(k))) {
    double v;
    if (!parse_real(p, v)) throw SchemaError("'" + k + "' is not a number list");
    out.push_back(v);
  }
  return out;
}

std::map<int, double> RunConfig::get_site_reals(const std::string& k) const {
  std::map<int, double> out;
  for (auto& p : split_list(raw(k))) {
    auto c = p.find(':');
    long j;
    double v;
    if (c == std::string::npos || !parse_long(p.substr(0, c), j) || !parse_real(p.substr(c + 1), v))
      throw SchemaError("'" + k + "' is not a site:value list");
    out[int(j)] = v;
  }
  return out;
}

}  // namespace dnlsnf
