#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermo/bath/dos.hpp"
#include "thermo/core/curve.hpp"
#include "thermo/core/errors.hpp"
#include "thermo/core/interp.hpp"
#include "thermo/metrology/sensitivity.hpp"

namespace thermo {

struct DerivativeOptions {
  bool allow_smoothing = false;  // opt-in local quadratic smoothing
  double noise_threshold = 1e-4;
};

namespace metro_detail {

// Least-squares quadratic through (x_k, y_k); returns value and slope at x0.
inline std::pair<double, double> quad_fit(const std::vector<double>& x, const std::vector<double>& y, double x0) {
  Eigen::MatrixXd A(x.size(), 3);
  Eigen::VectorXd b(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - x0;
    A(k, 0) = 1.0;
    A(k, 1) = d;
    A(k, 2) = d * d;
    b[k] = y[k];
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(b);
  return {c[0], c[1]};
}

// Derivative at x[i] of the Lagrange interpolant through nodes [a, b].
inline double lagrange_slope(const std::vector<double>& x, const std::vector<double>& y, int i, int a, int b) {
  const double t = x[i];
  double d = 0.0;
  for (int j = a; j <= b; ++j) {
    double lj = 0.0;
    for (int k = a; k <= b; ++k) {
      if (k == j) continue;
      double term = 1.0 / (x[j] - x[k]);
      for (int m = a; m <= b; ++m)
        if (m != j && m != k) term *= (t - x[m]) / (x[j] - x[m]);
      lj += term;
    }
    d += lj * y[j];
  }
  return d;
}

} // namespace metro_detail

// dm/dT by Lagrange differentiation in ln T: centred 7-point stencils in the
// interior, the nearest 7-point window (off-centre) within 3 points of the ends. With smoothing allowed and point-to-point noise above the threshold,
// m is replaced by a local quadratic fit over a 5-point window.
inline ThermoCurve temperature_derivative(ThermoCurve c, const DerivativeOptions& o = {}) {
  const int n = static_cast<int>(c.rows.size());
  if (n < 5) throw ValidationError("temperature derivative needs at least 5 points");
  const bool dec = c.rows[0].T > c.rows[1].T;
  for (int i = 0; i + 1 < n; ++i) {
    const bool ok = dec ? c.rows[i].T > c.rows[i + 1].T : c.rows[i].T < c.rows[i + 1].T;
    if (!ok || !(c.rows[i].T > 0.0)) throw ValidationError("temperatures must be positive and strictly monotone");
  }
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = std::log(c.rows[i].T);
    y[i] = c.rows[i].m_imp;
  }
  // Noise: residual of each interior point against the quadratic through its
  // 5-point neighbourhood.
  double noise = 0.0;
  for (int i = 2; i + 2 < n; ++i) {
    std::vector<double> xs(x.begin() + i - 2, x.begin() + i + 3), ys(y.begin() + i - 2, y.begin() + i + 3);
    noise = std::max(noise, std::abs(metro_detail::quad_fit(xs, ys, x[i]).first - y[i]));
  }
  std::vector<double> dy(n);
  if (o.allow_smoothing && noise > o.noise_threshold) {
    for (int i = 0; i < n; ++i) {
      const int a = std::clamp(i - 2, 0, n - 5);
      std::vector<double> xs(x.begin() + a, x.begin() + a + 5), ys(y.begin() + a, y.begin() + a + 5);
      dy[i] = metro_detail::quad_fit(xs, ys, x[i]).second;
    }
    c.smoothed = true;
    std::ostringstream p;
    p << " | smoothed: local quadratic, window 5 (noise " << noise << ")";
    c.provenance += p.str();
  } else {
    for (int i = 0; i < n; ++i) {
      const int w = n >= 7 ? 3 : 2;
      const int a = std::clamp(i - w, 0, n - 1 - 2 * w);
      dy[i] = metro_detail::lagrange_slope(x, y, i, a, a + 2 * w);
    }
    c.warnings.push_back("derivatives near the ends use off-centre stencils (lower accuracy)");
  }
  for (int i = 0; i < n; ++i) c.rows[i].dm_dT = dy[i] / c.rows[i].T;
  return c;
}

// Fills qfi and qsnr from m and dm_dT. Saturated points get QFI 0 and a warning.
inline ThermoCurve with_sensitivity(ThermoCurve c) {
  bool sat = false;
  for (auto& r : c.rows) {
    if (std::abs(r.m_imp) >= 0.5 - 1e-12) {
      r.qfi = 0.0;
      sat = true;
    } else {
      r.qfi = qfi_two_level(r.m_imp, r.dm_dT);
    }
    r.qsnr = qsnr(r.T, r.qfi);
  }
  if (sat) c.warnings.push_back("probe saturated (|m| = 1/2) at some temperatures; QFI set to 0 there");
  return c;
}

struct PeakSummary {
  double T_max = 0.0;
  double Q_max = 0.0;
  int order = 2;          // 2: parabolic in (ln T, Q); 0: raw sample
  bool boundary = false;  // maximum on the first or last sample
};

inline PeakSummary peak_summary(const ThermoCurve& c) {
  const int n = static_cast<int>(c.rows.size());
  if (n < 3) throw ValidationError("peak extraction needs at least 3 points");
  int k = 0;
  for (int i = 1; i < n; ++i)
    if (c.rows[i].qsnr > c.rows[k].qsnr) k = i;
  PeakSummary p;
  if (k == 0 || k == n - 1) {
    p.T_max = c.rows[k].T;
    p.Q_max = c.rows[k].qsnr;
    p.order = 0;
    p.boundary = true;
    return p;
  }
  const double x0 = std::log(c.rows[k - 1].T), x1 = std::log(c.rows[k].T), x2 = std::log(c.rows[k + 1].T);
  const double y0 = c.rows[k - 1].qsnr, y1 = c.rows[k].qsnr, y2 = c.rows[k + 1].qsnr;
  // Vertex of the parabola through the three points.
  const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (!(a < 0.0)) {
    p.T_max = c.rows[k].T;
    p.Q_max = y1;
    p.order = 0;
    return p;
  }
  const double b = d01 - a * (x0 + x1);
  const double xv = -b / (2.0 * a);
  p.T_max = std::exp(xv);
  p.Q_max = y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1);
  return p;
}

enum class TkMethod { EntropyHalfLn2, MagnetizationQuarter, Perturbative, TbgPower };

inline std::string to_string(TkMethod m) {
  switch (m) {
    case TkMethod::EntropyHalfLn2: return "entropy";
    case TkMethod::MagnetizationQuarter: return "magnetization";
    case TkMethod::Perturbative: return "perturbative";
    case TkMethod::TbgPower: return "tbg_power";
  }
  return "?";
}

inline TkMethod tk_method_from_string(const std::string& s) {
  if (s == "entropy" || s == "EntropyHalfLn2") return TkMethod::EntropyHalfLn2;
  if (s == "magnetization" || s == "MagnetizationQuarter") return TkMethod::MagnetizationQuarter;
  if (s == "perturbative" || s == "Perturbative") return TkMethod::Perturbative;
  if (s == "tbg_power" || s == "TbgPower") return TkMethod::TbgPower;
  throw ValidationError("unknown T_K method '" + s + "'");
}

struct TkEstimate {
  double value = 0.0;
  TkMethod method = TkMethod::EntropyHalfLn2;
  std::string inputs;              // canonical description of the inputs
  bool no_kondo = false;           // graphene: no Kondo effect
  bool order_of_magnitude = false; // prefactor fixed to 1 by convention
};

// D exp(-1/(rho0 J)) for metals, D (rho0 J)^4 for the diverging TBG density,
// none for graphene.
inline TkEstimate tk_perturbative(double rho0, double J, double D, DosFamily family) {
  if (!(rho0 > 0.0) || !(J > 0.0) || !(D > 0.0)) throw ValidationError("rho0, J and D must be positive");
  TkEstimate t;
  std::ostringstream in;
  in << "rho0=" << rho0 << " J=" << J << " D=" << D << " family=" << to_string(family);
  t.inputs = in.str();
  t.order_of_magnitude = true;
  const double g = rho0 * J;
  switch (family) {
    case DosFamily::Graphene:
      t.method = TkMethod::Perturbative;
      t.no_kondo = true;
      t.value = 0.0;
      return t;
    case DosFamily::TbgDiverging:
      t.method = TkMethod::TbgPower;
      t.value = D * std::pow(g, 4);
      return t;
    default:
      if (!(g < 1.0)) throw ValidationError("perturbative T_K requires rho0 J < 1");
      t.method = TkMethod::Perturbative;
      t.value = D * std::exp(-1.0 / g);
      return t;
  }
}

// Temperature at which S_imp falls through ln2 / 2, interpolated linearly in
// ln T between the bracketing shell points.
inline TkEstimate tk_entropy(const ThermoCurve& c) {
  const double target = 0.5 * std::log(2.0);
  std::vector<ThermoRecord> r = c.rows;
  std::sort(r.begin(), r.end(), [](auto& a, auto& b) { return a.T > b.T; });
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double a = r[i].s_imp, b = r[i + 1].s_imp;
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    if (a > target && b <= target) {
      const double w = (a - target) / (a - b);
      TkEstimate t;
      t.method = TkMethod::EntropyHalfLn2;
      t.value = std::exp(std::log(r[i].T) + w * (std::log(r[i + 1].T) - std::log(r[i].T)));
      t.inputs = c.provenance;
      return t;
    }
  }
  throw RangeError("impurity entropy does not cross ln2/2 within the curve");
}

// B_{1/4}/T_K for the entropy criterion, fixed once from flat-band runs at
// J = 0.3 D (Lambda = 2.5, N_s = 600).
inline constexpr double kMagnetizationQuarterCalibration = 3.99;

// Field where the T -> 0 magnetization reaches -1/4, from (B, m_lowT)
// samples, interpolated in ln B and divided by the calibration constant.
inline TkEstimate tk_magnetization(std::vector<std::pair<double, double>> B_m,
                                   double calibration = kMagnetizationQuarterCalibration) {
  std::sort(B_m.begin(), B_m.end());
  for (std::size_t i = 0; i + 1 < B_m.size(); ++i) {
    const auto [B0, m0] = B_m[i];
    const auto [B1, m1] = B_m[i + 1];
    if (!(B0 > 0.0)) continue;
    if (m0 > -0.25 && m1 <= -0.25) {
      const double w = (m0 + 0.25) / (m0 - m1);
      TkEstimate t;
      t.method = TkMethod::MagnetizationQuarter;
      t.value = std::exp(std::log(B0) + w * (std::log(B1) - std::log(B0))) / calibration;
      t.inputs = "field scan";
      return t;
    }
  }
  throw RangeError("low-temperature magnetization does not cross -1/4 within the field scan");
}

inline TkEstimate tk_operational(const ThermoCurve& zero_field, TkMethod method = TkMethod::EntropyHalfLn2) {
  if (method != TkMethod::EntropyHalfLn2)
    throw ValidationError("a single zero-field curve supports only the entropy criterion; use tk_magnetization");
  return tk_entropy(zero_field);
}

struct CollapseInput {
  ThermoCurve curve;
  TkEstimate tk;
  double B = 0.0;
  std::string id;
};

struct CollapseRow {
  double t_over_tk;
  double q_rescaled;
  std::string curve_id;
};

struct CollapseTable {
  std::vector<CollapseRow> rows;
  double overlap_lo = 0.0, overlap_hi = 0.0;
  double deviation = 0.0;  // max over pairs of max|dy| / max|y| on the overlap
  std::vector<std::string> warnings;
};

// Rescaled (T/T_K, Q T_K/B) curves and their pairwise deviation on the
// overlapping T/T_K window, optionally clipped to [lo, hi].
inline CollapseTable collapse_dataset(const std::vector<CollapseInput>& in, double lo = 0.0,
                                      double hi = INFINITY, int samples = 400) {
  if (in.empty()) throw ValidationError("no curves to collapse");
  CollapseTable out;
  out.overlap_lo = lo;
  out.overlap_hi = hi;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> xy;
  for (const auto& c : in) {
    if (!(c.tk.value > 0.0)) throw ValidationError("collapse needs positive T_K for curve '" + c.id + "'");
    if (!(c.B > 0.0)) throw ValidationError("collapse needs positive B for curve '" + c.id + "'");
    if (c.B / c.tk.value >= 0.1) out.warnings.push_back("curve '" + c.id + "' has B/T_K >= 0.1 (outside the Kondo regime)");
    std::vector<double> x, y;
    for (const auto& r : c.curve.rows) {
      if (!std::isfinite(r.qsnr)) continue;
      x.push_back(r.T / c.tk.value);
      y.push_back(r.qsnr * c.tk.value / c.B);
      out.rows.push_back({x.back(), y.back(), c.id});
    }
    if (x.size() < 4) throw ValidationError("curve '" + c.id + "' has too few points");
    out.overlap_lo = std::max(out.overlap_lo, *std::min_element(x.begin(), x.end()));
    out.overlap_hi = std::min(out.overlap_hi, *std::max_element(x.begin(), x.end()));
    xy.push_back({std::move(x), std::move(y)});
  }
  if (!(out.overlap_hi > out.overlap_lo)) throw RangeError("rescaled temperature ranges do not overlap");
  std::vector<LogInterp> f;
  for (auto& [x, y] : xy) f.emplace_back(x, y);
  const double a = std::log(out.overlap_lo), b = std::log(out.overlap_hi);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = i + 1; j < f.size(); ++j) {
      double dmax = 0.0, ymax = 0.0;
      for (int k = 0; k < samples; ++k) {
        const double t = std::exp(a + (b - a) * k / (samples - 1));
        const double yi = f[i](t), yj = f[j](t);
        dmax = std::max(dmax, std::abs(yi - yj));
        ymax = std::max({ymax, std::abs(yi), std::abs(yj)});
      }
      if (ymax > 0.0) out.deviation = std::max(out.deviation, dmax / ymax);
    }
  return out;
}

} // namespace thermo
