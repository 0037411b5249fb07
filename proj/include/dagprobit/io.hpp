#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dagprobit/errors.hpp"
#include "dagprobit/model.hpp"
#include "dagprobit/version.hpp"

namespace dagprobit {

// Round-trip decimal formatting for all numeric CSV output.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// FNV-1a over the canonical key=value dump; identifies the effective config
// in every output header.
inline std::string config_hash(const std::map<std::string, std::string>& kv) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [k, v] : kv) {
    for (const std::string* s : {&k, &v}) {
      for (char c : *s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
      }
      h ^= '\n';
      h *= 1099511628211ULL;
    }
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string file_header(std::uint64_t seed, const std::string& cfg_hash) {
  return "# seed=" + std::to_string(seed) + " config=" + cfg_hash + " version=" + kVersion;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return is;
}

inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(context + ": cannot parse number '" + s + "'");
  }
}

// Matrix CSV reader; '#' comment lines are skipped.
inline Eigen::MatrixXd read_matrix_csv(std::istream& is, const std::string& context) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    for (const auto& cell : split_csv_line(line)) row.push_back(parse_double(cell, context));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(context + ": no data rows");
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw IoError(context + ": ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

// Group data CSV: header "y,x2,...,xq", first column the binary response.
inline void write_group_csv(std::ostream& os, const GroupData& data,
                            const std::string& header_comment) {
  if (!header_comment.empty()) os << header_comment << '\n';
  os << 'y';
  for (int j = 2; j <= data.q(); ++j) os << ",x" << j;
  os << '\n';
  for (int i = 0; i < data.n(); ++i) {
    os << data.y(i);
    for (int j = 0; j < data.x_obs.cols(); ++j) os << ',' << format_double(data.x_obs(i, j));
    os << '\n';
  }
}

struct GroupCsv {
  GroupData data;
  std::vector<std::string> columns;
};

inline GroupCsv read_group_csv(std::istream& is, const std::string& context) {
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split_csv_line(line);
      if (header.empty() || header[0] != "y")
        throw ValidationError(context + ": first column must be named 'y'");
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split_csv_line(line)) row.push_back(parse_double(cell, context));
    if (row.size() != header.size())
      throw ValidationError(context + ": row width differs from header");
    rows.push_back(std::move(row));
  }
  if (header.empty()) throw IoError(context + ": missing header row");
  if (rows.empty()) throw ValidationError(context + ": no observations");
  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(header.size()) - 1;
  if (p < 1) throw ValidationError(context + ": need at least one covariate column");
  GroupCsv out;
  out.columns = header;
  out.data.y.resize(n);
  out.data.x_obs.resize(n, p);
  for (int i = 0; i < n; ++i) {
    if (rows[i][0] != 0.0 && rows[i][0] != 1.0)
      throw ValidationError(context + ": non-binary y at data row " + std::to_string(i + 1));
    out.data.y(i) = static_cast<int>(rows[i][0]);
    for (int j = 0; j < p; ++j) out.data.x_obs(i, j) = rows[i][j + 1];
  }
  return out;
}

// Flat "key = value" config with [section] headers and '#' comments.
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline ConfigMap parse_config(std::istream& is) {
  ConfigMap cfg;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw IoError("config line " + std::to_string(lineno) + ": empty key");
    cfg[section][key] = value;
  }
  return cfg;
}

inline ConfigMap load_config(const std::filesystem::path& path) {
  auto is = open_input(path);
  return parse_config(is);
}

}  // namespace dagprobit
