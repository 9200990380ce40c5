// CSV tables (comma, LF, header row) and long-format plot data emission.
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnlsnf {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  explicit Table(std::vector<std::string> h = {}) : header(std::move(h)) {}
  void add(std::vector<std::string> row);
  std::size_t column(const std::string& name) const;  // throws if absent
};

std::string cell(double v);  // 17 significant digits
std::string cell(long v);
std::string cell(int v);
std::string cell(std::size_t v);
std::string cell(bool v);
std::string cell(const std::string& v);
std::string cell(const char* v);

void write_csv(const std::filesystem::path& path, const Table& t);
Table read_csv(const std::filesystem::path& path);

// Long format: id columns kept, every other column becomes a (variable, value) row.
Table melt(const Table& wide, const std::vector<std::string>& id_columns,
           const std::string& variable_name = "variable");

struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads run_dir/manifest.json and writes the tidy CSVs it lists. Re-emission rewrites the
// same bytes. Returns the written paths.
std::vector<std::filesystem::path> emit_plotdata(const std::filesystem::path& run_dir);

}  // namespace dnlsnf
