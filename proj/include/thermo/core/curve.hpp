#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace thermo {

struct ThermoRecord {
  double T = 0.0;
  double m_imp = 0.0;
  double s_imp = NAN;
  double dm_dT = NAN;
  double qfi = NAN;
  double qsnr = NAN;
  double neg_local = NAN;
};

// Per-temperature probe observables at fixed couplings and field, ordered by
// strictly decreasing T.
struct ThermoCurve {
  std::vector<ThermoRecord> rows;
  std::string provenance;
  std::vector<std::string> warnings;
  bool smoothed = false;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  template <class F>
  std::vector<double> column(F&& f) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(f(r));
    return out;
  }
  std::vector<double> T() const { return column([](const ThermoRecord& r) { return r.T; }); }
  std::vector<double> m() const { return column([](const ThermoRecord& r) { return r.m_imp; }); }
  std::vector<double> qsnr() const { return column([](const ThermoRecord& r) { return r.qsnr; }); }
  std::vector<double> s_imp() const { return column([](const ThermoRecord& r) { return r.s_imp; }); }
};

} // namespace thermo
