// Run configuration: INI document with a fixed schema, typed accessors and overrides.
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnlsnf {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ValueType { Int, Real, Bool, String, IntList, RealList, SiteReals };

struct ConfigKey {
  std::string section, key;
  ValueType type;
  std::string default_value;
  std::string help;
  std::string full() const { return section + "." + key; }
};

const std::vector<ConfigKey>& config_schema();

class RunConfig {
 public:
  RunConfig();  // every key at its default

  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& ini_text);

  // "section.key=value"; unknown keys and malformed values throw SchemaError.
  void apply_override(const std::string& assignment);
  void set(const std::string& full_key, const std::string& value);

  const std::string& raw(const std::string& full_key) const;
  long get_int(const std::string& k) const;
  std::uint64_t get_u64(const std::string& k) const;
  double get_real(const std::string& k) const;
  bool get_bool(const std::string& k) const;
  std::string get_string(const std::string& k) const;
  std::vector<int> get_ints(const std::string& k) const;
  std::vector<double> get_reals(const std::string& k) const;
  std::map<int, double> get_site_reals(const std::string& k) const;  // "1:0.5, 2:0.25"

  // Ordered (section.key -> value text), used for the manifest echo.
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dnlsnf
