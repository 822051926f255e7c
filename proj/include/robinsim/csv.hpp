#pragma once

#include <robinsim/config.hpp>
#include <robinsim/errors.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#ifndef ROBINSIM_GIT_DESCRIBE
#define ROBINSIM_GIT_DESCRIBE "unknown"
#endif

namespace robinsim {

inline std::string git_describe() { return ROBINSIM_GIT_DESCRIBE; }

/// Run identity written as the first line of every CSV file:
/// `# seed=<s> dt=<dt list> n=<n> git=<describe>`.
struct Provenance {
  std::uint64_t seed = 0;
  std::vector<double> dt;
  std::uint64_t n = 0;
  std::string git = git_describe();

  std::string line() const {
    std::string dts;
    for (double h : dt) dts += (dts.empty() ? "" : ";") + format_number(h);
    if (dts.empty()) dts = "-";
    return "# seed=" + std::to_string(seed) + " dt=" + dts + " n=" + std::to_string(n) + " git=" + git;
  }
};

inline std::string csv_cell(double v) {
  if (std::isnan(v)) return "nan";
  return format_number(v);
}
inline std::string csv_cell(std::uint64_t v) { return std::to_string(v); }
inline std::string csv_cell(const std::string& v) { return v; }
inline std::string csv_cell(const char* v) { return v; }

/// Buffered CSV table; written in one go by save().
class CsvTable {
 public:
  CsvTable(std::vector<std::string> header, Provenance provenance)
      : header_(std::move(header)), provenance_(std::move(provenance)) {}

  template <class... Cells>
  void row(const Cells&... cells) {
    if (sizeof...(cells) != header_.size()) throw ConfigError("CSV row width does not match the header");
    std::string line;
    ((line += (line.empty() ? "" : ",") + csv_cell(cells)), ...);
    rows_.push_back(std::move(line));
  }

  std::string str() const {
    std::string out = provenance_.line() + "\n";
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += "\n";
    for (const auto& r : rows_) out += r + "\n";
    return out;
  }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << str();
  }

  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  Provenance provenance_;
  std::vector<std::string> rows_;
};

}  // namespace robinsim
