#pragma once

// CSV and manifest emission. Numbers are printed with %.17g so equal doubles give
// equal bytes; manifests carry no timestamps and sorted keys.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "convergence_lab.hpp"
#include "errors.hpp"

namespace spdelab {

inline constexpr int kManifestVersion = 1;

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    require(row.size() == header_.size(), "CsvTable: row width differs from the header");
    rows_.push_back(std::move(row));
  }

  std::string str() const {
    std::ostringstream os;
    write_row(os, header_);
    for (const auto& r : rows_) write_row(os, r);
    return os.str();
  }

  std::size_t size() const noexcept { return rows_.size(); }

 private:
  static void write_row(std::ostream& os, const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_escape(r[i]);
    os << '\n';
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// The long format time,statistic,value,std_err.
inline CsvTable series_table() { return CsvTable({"time", "statistic", "value", "std_err"}); }

inline void add_series(CsvTable& t, const Series& s) {
  for (std::size_t i = 0; i < s.times.size(); ++i)
    t.add({format_number(s.times[i]), s.name, format_number(s.value[i]), format_number(s.std_err[i])});
}

inline CsvTable report_table(const ConvergenceReport& r) {
  CsvTable t = series_table();
  for (const Series& s : r.series) add_series(t, s);
  return t;
}

/// Output directory: explicit path, else $SPDELAB_OUT_DIR, else ./spdelab-out.
inline std::filesystem::path resolve_out_dir(const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("SPDELAB_OUT_DIR"); env && *env) return env;
  return "spdelab-out";
}

class RunDirectory {
 public:
  RunDirectory(std::filesystem::path dir, std::string command) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    manifest_["format_version"] = kManifestVersion;
    manifest_["command"] = std::move(command);
    manifest_["outputs"] = nlohmann::json::array();
    manifest_["verdicts"] = nlohmann::json::array();
    manifest_["rates"] = nlohmann::json::array();
  }

  const std::filesystem::path& path() const noexcept { return dir_; }
  nlohmann::json& manifest() noexcept { return manifest_; }

  void write_text(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    out << content;
    manifest_["outputs"].push_back(name);
  }
  void write_csv(const std::string& name, const CsvTable& t) { write_text(name, t.str()); }

  void record(const std::string& experiment, const ConvergenceReport& r) {
    for (const Verdict& v : r.verdicts)
      manifest_["verdicts"].push_back({{"experiment", experiment}, {"invariant", v.invariant}, {"outcome", v.outcome},
                                       {"detail", v.detail}});
    for (const RateRow& rr : r.rates)
      manifest_["rates"].push_back({{"experiment", experiment}, {"name", rr.name}, {"fitted", format_number(rr.fitted)},
                                    {"theoretical", format_number(rr.theoretical)},
                                    {"residual", format_number(rr.residual)}});
  }
  void record_verdict(const std::string& experiment, const std::string& invariant, bool ok, const std::string& detail) {
    manifest_["verdicts"].push_back({{"experiment", experiment}, {"invariant", invariant},
                                     {"outcome", ok ? "pass" : "fail"}, {"detail", detail}});
  }
  void record_rate(const std::string& experiment, const std::string& name, double fitted, double theoretical,
                   double residual) {
    manifest_["rates"].push_back({{"experiment", experiment}, {"name", name}, {"fitted", format_number(fitted)},
                                  {"theoretical", format_number(theoretical)}, {"residual", format_number(residual)}});
  }

  void finish() {
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    if (!out) throw Error("cannot write manifest in " + dir_.string());
    out << manifest_.dump(2) << '\n';
  }

 private:
  std::filesystem::path dir_;
  nlohmann::json manifest_;
};

/// Reads a numeric CSV with a header row into columns-per-sample vectors.
inline std::vector<Vector> read_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open sample file " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
  std::size_t cols = 1;
  for (char c : line) cols += c == ',';
  std::vector<Vector> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vector v(static_cast<Eigen::Index>(cols));
    std::size_t k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= cols) throw SchemaError(path + ": row " + std::to_string(row) + " has too many columns");
      char* end = nullptr;
      const double d = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw SchemaError(path + ": row " + std::to_string(row) + " is not numeric");
      v[static_cast<Eigen::Index>(k++)] = d;
    }
    if (k != cols) throw SchemaError(path + ": row " + std::to_string(row) + " has too few columns");
    out.push_back(std::move(v));
  }
  if (out.empty()) throw SchemaError(path + ": no samples");
  return out;
}

inline CsvTable sample_table(std::span<const Vector> samples) {
  std::vector<std::string> header;
  for (Eigen::Index i = 0; i < samples.front().size(); ++i) header.push_back("x" + std::to_string(i));
  CsvTable t(header);
  for (const Vector& s : samples) {
    std::vector<std::string> row;
    for (Eigen::Index i = 0; i < s.size(); ++i) row.push_back(format_number(s[i]));
    t.add(std::move(row));
  }
  return t;
}

}  // namespace spdelab
