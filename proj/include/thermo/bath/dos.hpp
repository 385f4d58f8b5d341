#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "thermo/core/errors.hpp"
#include "thermo/core/numeric.hpp"

namespace thermo {

enum class DosFamily { Flat, Nanowire, Gaussian, Graphene, TbgDiverging, Tabulated };

inline const char* to_string(DosFamily f) {
  switch (f) {
    case DosFamily::Flat: return "flat";
    case DosFamily::Nanowire: return "nanowire";
    case DosFamily::Gaussian: return "gaussian";
    case DosFamily::Graphene: return "graphene";
    case DosFamily::TbgDiverging: return "tbg";
    case DosFamily::Tabulated: return "tabulated";
  }
  return "?";
}

inline DosFamily dos_family_from_string(const std::string& s) {
  if (s == "flat") return DosFamily::Flat;
  if (s == "nanowire") return DosFamily::Nanowire;
  if (s == "gaussian") return DosFamily::Gaussian;
  if (s == "graphene") return DosFamily::Graphene;
  if (s == "tbg") return DosFamily::TbgDiverging;
  if (s == "tabulated") return DosFamily::Tabulated;
  throw ValidationError("unknown DoS family '" + s + "'");
}

// Declarative bath density of states. Built-in families are normalized and
// particle-hole symmetric; Tabulated is piecewise linear and renormalized on
// construction.
//
// The graphene family is the linear pseudogap |w|/D with a hard cutoff at D,
// not the full honeycomb-lattice DoS.
class DosSpec {
public:
  DosSpec() = default;

  static DosSpec flat(double D = 1.0) { return DosSpec(DosFamily::Flat, D, 0.0); }
  static DosSpec nanowire(double D = 1.0) { return DosSpec(DosFamily::Nanowire, D, 0.0); }
  static DosSpec gaussian(double D = 1.0) { return DosSpec(DosFamily::Gaussian, D, 0.0); }
  static DosSpec graphene(double D = 1.0, double r = 1.0) { return DosSpec(DosFamily::Graphene, D, r); }
  static DosSpec tbg(double D = 1.0, double r = -0.25) { return DosSpec(DosFamily::TbgDiverging, D, r); }

  static DosSpec tabulated(std::vector<std::pair<double, double>> table) {
    DosSpec s;
    s.family_ = DosFamily::Tabulated;
    s.set_table(std::move(table));
    return s;
  }

  // Two-column whitespace-delimited (w, rho); '#' starts a comment.
  static DosSpec from_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open DoS table '" + path + "'");
    std::vector<std::pair<double, double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ls(line);
      double w, r;
      if (!(ls >> w)) continue;
      if (!(ls >> r))
        throw ValidationError(path + ":" + std::to_string(lineno) + ": expected two columns");
      rows.emplace_back(w, r);
    }
    auto s = tabulated(std::move(rows));
    s.table_path_ = path;
    return s;
  }

  DosFamily family() const { return family_; }
  double D() const { return D_; }
  double r() const { return r_; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }
  const std::string& table_path() const { return table_path_; }

  bool is_power_law() const {
    return family_ == DosFamily::Graphene || family_ == DosFamily::TbgDiverging;
  }
  bool hard_band() const { return family_ != DosFamily::Gaussian; }
  bool symmetric() const { return family_ != DosFamily::Tabulated || symmetric_table_; }
  // Linear pseudogap stands in for the honeycomb lattice DoS.
  bool approximated() const { return family_ == DosFamily::Graphene; }

  // Support of rho. Gaussian has infinite support; `lo`/`hi` then refer to a
  // window outside which the weight is below 1e-60.
  double lo() const {
    if (family_ == DosFamily::Tabulated) return table_.front().first;
    return hard_band() ? -D_ : -gaussian_window * D_;
  }
  double hi() const {
    if (family_ == DosFamily::Tabulated) return table_.back().first;
    return hard_band() ? D_ : gaussian_window * D_;
  }

  // Energies where rho is non-analytic; used as quadrature breakpoints.
  std::vector<double> kinks() const {
    std::vector<double> k;
    switch (family_) {
      case DosFamily::Flat:
      case DosFamily::Nanowire: k = {-D_, D_}; break;
      case DosFamily::Gaussian: k = {0.0}; break;
      case DosFamily::Graphene:
      case DosFamily::TbgDiverging: k = {-D_, 0.0, D_}; break;
      case DosFamily::Tabulated:
        for (auto& [w, _] : table_) k.push_back(w);
        break;
    }
    return k;
  }

  // Value of the normalization prefactor rho_0; for a table, rho(0).
  double rho0() const {
    switch (family_) {
      case DosFamily::Flat: return 1.0 / (2.0 * D_);
      case DosFamily::Nanowire: return 2.0 / (num::pi * D_);
      case DosFamily::Gaussian: return 1.0 / (D_ * std::sqrt(num::pi));
      case DosFamily::Graphene:
      case DosFamily::TbgDiverging: return (r_ + 1.0) / (2.0 * D_);
      case DosFamily::Tabulated: return table_rho(0.0);
    }
    return 0.0;
  }

  double operator()(double w) const { return rho(w); }

  double rho(double w) const {
    const double x = w / D_;
    switch (family_) {
      case DosFamily::Flat: return std::abs(x) <= 1.0 ? rho0() : 0.0;
      case DosFamily::Nanowire: return std::abs(x) < 1.0 ? rho0() * std::sqrt((1.0 - x) * (1.0 + x)) : 0.0;
      case DosFamily::Gaussian: return rho0() * std::exp(-x * x);
      case DosFamily::Graphene:
      case DosFamily::TbgDiverging:
        if (std::abs(x) > 1.0) return 0.0;
        if (x == 0.0) {
          if (r_ < 0) throw ValidationError("power-law DoS diverges at w = 0");
          return r_ == 0.0 ? rho0() : 0.0;
        }
        return rho0() * std::pow(std::abs(x), r_);
      case DosFamily::Tabulated: return table_rho(w);
    }
    return 0.0;
  }

  // Weight and first moment of rho on [a, b], in closed form.
  double weight(double a, double b) const { return moments(a, b).first; }
  double first_moment(double a, double b) const { return moments(a, b).second; }

  std::pair<double, double> moments(double a, double b) const {
    if (!(b > a)) return {0.0, 0.0};
    if (family_ == DosFamily::Tabulated) return table_moments(a, b);
    if (a < 0.0 && b > 0.0) {
      auto l = moments(a, 0.0), r = moments(0.0, b);
      return {l.first + r.first, l.second + r.second};
    }
    if (b <= 0.0) {
      auto m = positive_moments(-b, -a);
      return {m.first, -m.second};
    }
    return positive_moments(a, b);
  }

  std::string id() const {
    std::ostringstream o;
    o.precision(17);
    o << to_string(family_) << ":D=" << D_;
    if (is_power_law()) o << ":r=" << r_;
    if (family_ == DosFamily::Tabulated) o << ":n=" << table_.size() << ":src=" << table_path_;
    return o.str();
  }

  static constexpr double gaussian_window = 12.0;

private:
  DosSpec(DosFamily f, double D, double r) : family_(f), D_(D), r_(r) {
    if (!(D > 0.0) || !std::isfinite(D)) throw ValidationError("bandwidth D must be positive");
    if (is_power_law() && !(r > -1.0)) throw ValidationError("power-law exponent must exceed -1");
  }

  // Moments on 0 <= a < b for the symmetric analytic families.
  std::pair<double, double> positive_moments(double a, double b) const {
    const double D = D_;
    if (hard_band()) {
      b = std::min(b, D);
      if (!(b > a)) return {0.0, 0.0};
    }
    const double xa = a / D, xb = b / D;
    switch (family_) {
      case DosFamily::Flat: {
        const double c = rho0();
        return {c * (b - a), 0.5 * c * (b - a) * (b + a)};
      }
      case DosFamily::Nanowire: {
        const double c = rho0();
        auto F = [](double x) { return 0.5 * (x * std::sqrt((1 - x) * (1 + x)) + std::asin(x)); };
        // u^{3/2} - v^{3/2} with u = 1 - xa^2, v = 1 - xb^2, written without cancellation.
        const double u = (1 - xa) * (1 + xa), v = (1 - xb) * (1 + xb);
        const double su = std::sqrt(u), sv = std::sqrt(v);
        const double umv = (xb - xa) * (xb + xa);
        const double diff32 = su + sv > 0 ? umv * (u + su * sv + v) / (su + sv) : 0.0;
        return {c * D * (F(xb) - F(xa)), c * D * D * diff32 / 3.0};
      }
      case DosFamily::Gaussian: {
        const double c = rho0();
        double w0;
        if (xa > 1.0)
          w0 = 0.5 * (std::erfc(xa) - std::erfc(xb));
        else
          w0 = 0.5 * (std::erf(xb) - std::erf(xa));
        const double m1 = -0.5 * c * D * D * std::exp(-xa * xa) * std::expm1(xa * xa - xb * xb);
        return {w0, m1};
      }
      case DosFamily::Graphene:
      case DosFamily::TbgDiverging: {
        const double r = r_;
        const double w0 = 0.5 * (std::pow(xb, r + 1) - std::pow(xa, r + 1));
        const double m1 = 0.5 * (r + 1) / (r + 2) * D * (std::pow(xb, r + 2) - std::pow(xa, r + 2));
        return {w0, m1};
      }
      case DosFamily::Tabulated: break;
    }
    return {0.0, 0.0};
  }

  void set_table(std::vector<std::pair<double, double>> t) {
    if (t.size() < 2) throw ValidationError("DoS table needs at least two rows");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t[i].first) || !std::isfinite(t[i].second))
        throw ValidationError("DoS table contains non-finite values");
      if (t[i].second < 0.0) throw ValidationError("DoS table has negative density");
      if (i && !(t[i].first > t[i - 1].first))
        throw ValidationError("DoS table frequencies must be strictly increasing");
    }
    double norm = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
      norm += 0.5 * (t[i].second + t[i + 1].second) * (t[i + 1].first - t[i].first);
    if (!(norm > 0.0)) throw ValidationError("DoS table is not normalizable");
    for (auto& p : t) p.second /= norm;
    table_ = std::move(t);
    D_ = std::max(std::abs(table_.front().first), std::abs(table_.back().first));
    symmetric_table_ = true;
    const std::size_t n = table_.size();
    for (std::size_t i = 0; i < n && symmetric_table_; ++i) {
      const auto& p = table_[i];
      const auto& q = table_[n - 1 - i];
      if (std::abs(p.first + q.first) > 1e-12 * D_ || std::abs(p.second - q.second) > 1e-12 * (p.second + q.second + 1e-300))
        symmetric_table_ = false;
    }
  }

  double table_rho(double w) const {
    if (w < table_.front().first || w > table_.back().first) return 0.0;
    auto it = std::upper_bound(table_.begin(), table_.end(), w,
                               [](double v, const auto& p) { return v < p.first; });
    if (it == table_.end()) return table_.back().second;
    if (it == table_.begin()) return table_.front().second;
    const auto& [w1, r1] = *it;
    const auto& [w0, r0] = *(it - 1);
    return r0 + (r1 - r0) * (w - w0) / (w1 - w0);
  }

  std::pair<double, double> table_moments(double a, double b) const {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i + 1 < table_.size(); ++i) {
      const double l = std::max(a, table_[i].first), h = std::min(b, table_[i + 1].first);
      if (!(h > l)) continue;
      const auto [w0, r0] = table_[i];
      const auto [w1, r1] = table_[i + 1];
      const double slope = (r1 - r0) / (w1 - w0);
      const double c0 = r0 - slope * w0;  // rho = c0 + slope*w
      m0 += c0 * (h - l) + 0.5 * slope * (h * h - l * l);
      m1 += 0.5 * c0 * (h * h - l * l) + slope * (h * h * h - l * l * l) / 3.0;
    }
    return {m0, m1};
  }

  DosFamily family_ = DosFamily::Flat;
  double D_ = 1.0;
  double r_ = 0.0;
  std::vector<std::pair<double, double>> table_;
  std::string table_path_;
  bool symmetric_table_ = false;
};

inline double dos_eval(const DosSpec& spec, double w) { return spec.rho(w); }

} // namespace thermo
