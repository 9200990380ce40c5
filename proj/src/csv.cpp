#include "dnlsnf/csv.hpp"

#include "dnlsnf/series.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dnlsnf {

namespace fs = std::filesystem;

void Table::add(std::vector<std::string> row) {
  if (row.size() != header.size()) throw std::invalid_argument("row width does not match the header");
  rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::invalid_argument("no column '" + name + "'");
}

std::string cell(double v) { return format_double(v); }
std::string cell(long v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }
std::string cell(const std::string& v) { return v; }
std::string cell(const char* v) { return v; }

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> parse_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool q = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (q) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
      else if (c == '"') q = false;
      else cur += c;
    } else if (c == '"') {
      q = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_csv(const fs::path& path, const Table& t) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << quote(r[i]);
    os << '\n';
  };
  line(t.header);
  for (auto& r : t.rows) line(r);
}

Table read_csv(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifact("missing artifact " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw MissingArtifact("empty CSV " + path.string());
  Table t(parse_line(line));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    t.add(parse_line(line));
  }
  return t;
}

Table melt(const Table& wide, const std::vector<std::string>& ids, const std::string& var) {
  std::vector<std::size_t> id_idx, val_idx;
  for (auto& c : ids) id_idx.push_back(wide.column(c));
  for (std::size_t i = 0; i < wide.header.size(); ++i)
    if (std::find(id_idx.begin(), id_idx.end(), i) == id_idx.end()) val_idx.push_back(i);
  std::vector<std::string> h = ids;
  h.push_back(var);
  h.push_back("value");
  Table out(h);
  for (auto& r : wide.rows)
    for (std::size_t v : val_idx) {
      std::vector<std::string> row;
      for (std::size_t i : id_idx) row.push_back(r[i]);
      row.push_back(wide.header[v]);
      row.push_back(r[v]);
      out.add(std::move(row));
    }
  return out;
}

std::vector<fs::path> emit_plotdata(const fs::path& run_dir) {
  fs::path mpath = run_dir / "manifest.json";
  std::ifstream is(mpath);
  if (!is) throw MissingArtifact("missing artifact " + mpath.string());
  nlohmann::json m;
  try {
    is >> m;
  } catch (const nlohmann::json::exception& e) {
    throw MissingArtifact("unreadable manifest " + mpath.string() + ": " + e.what());
  }
  std::vector<fs::path> written;
  if (!m.contains("tables")) throw MissingArtifact("manifest lists no tables");
  for (auto& entry : m["tables"]) {
    if (!entry.contains("tidy")) continue;
    Table wide = read_csv(run_dir / entry["file"].get<std::string>());
    fs::path out = run_dir / entry["tidy"].get<std::string>();
    if (entry.value("mode", std::string("melt")) == "copy") {
      write_csv(out, wide);
    } else {
      std::vector<std::string> ids = entry["ids"].get<std::vector<std::string>>();
      write_csv(out, melt(wide, ids, entry.value("variable", std::string("variable"))));
    }
    written.push_back(out);
  }
  return written;
}

}  // namespace dnlsnf
