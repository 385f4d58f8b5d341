#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "thermo/core/curve.hpp"
#include "thermo/core/errors.hpp"

namespace thermo::cli {

inline constexpr const char* kCurveHeader = "T,m_imp,s_imp,dm_dT,qfi,qsnr,neg_local";

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_number(const std::string& s) {
  if (s == "nan") return NAN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ValidationError("malformed number '" + s + "' in CSV");
  return v;
}

inline std::string curve_to_csv(const ThermoCurve& c) {
  std::string out = "# schema=1\n";
  out += kCurveHeader;
  out += '\n';
  for (const auto& r : c.rows) {
    out += fmt(r.T) + ',' + fmt(r.m_imp) + ',' + fmt(r.s_imp) + ',' + fmt(r.dm_dT) + ',' + fmt(r.qfi) + ',' +
           fmt(r.qsnr) + ',' + fmt(r.neg_local) + '\n';
  }
  return out;
}

inline ThermoCurve curve_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ThermoCurve c;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# schema=", 0) == 0 && line != "# schema=1")
        throw ValidationError("unsupported CSV schema: " + line);
      continue;
    }
    if (!header) {
      if (line != kCurveHeader) throw ValidationError("unexpected CSV header: " + line);
      header = true;
      continue;
    }
    std::vector<double> v;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) v.push_back(parse_number(cell));
    if (v.size() != 7) throw ValidationError("CSV line " + std::to_string(lineno) + ": expected 7 columns");
    c.rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
  }
  if (!header) throw ValidationError("CSV has no header");
  return c;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace thermo::cli
