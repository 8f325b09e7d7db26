#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specseg/error.hpp"

namespace specseg {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace detail

// Single numeric column, '.' decimals. A non-numeric first line is taken as
// a header; blank lines are skipped. Errors name the 1-based file line.
inline std::vector<double> parse_column_csv(std::istream& in) {
  std::vector<double> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const std::string cell = detail::trim(line);
    if (cell.empty()) continue;
    if (cell.find(',') != std::string::npos || cell.find('\t') != std::string::npos) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(line_no) + ": expected a single column");
    }
    double v = 0.0;
    if (!detail::parse_double(cell, v)) {
      if (line_no == 1) continue;
      throw Error(ErrorCode::ParseError, "row " + std::to_string(line_no) + ": not a finite number: '" + cell + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no numeric rows");
  return out;
}

inline std::vector<double> read_column_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return parse_column_csv(in);
}

inline std::string format_column_csv(const std::vector<double>& values, const std::string& header = "value") {
  std::ostringstream os;
  os.precision(17);
  if (!header.empty()) os << header << '\n';
  for (double v : values) os << v << '\n';
  return os.str();
}

}  // namespace specseg
