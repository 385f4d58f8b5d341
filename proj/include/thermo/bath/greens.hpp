#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "thermo/bath/dos.hpp"
#include "thermo/core/errors.hpp"
#include "thermo/core/numeric.hpp"
#include "thermo/core/quadrature.hpp"

namespace thermo {

using cplx = std::complex<double>;

// Pointwise retarded local Green's function G(w + i0) of a DoS. Closed forms
// for the flat band and the nanowire; a subtracted principal-value integral
// otherwise (piecewise-linear tables are transformed exactly).
class BathGreens {
public:
  explicit BathGreens(DosSpec spec, double eta = 1e-6) : spec_(std::move(spec)), eta_(eta * spec_.D()) {}

  const DosSpec& dos() const { return spec_; }
  double eta() const { return eta_; }

  cplx operator()(double w) const { return {re(w), -num::pi * spec_.rho(w)}; }

  double im(double w) const { return -num::pi * spec_.rho(w); }

  double re(double w) const {
    const double D = spec_.D();
    switch (spec_.family()) {
      case DosFamily::Flat: {
        const double rho0 = spec_.rho0();
        const double p = w + D, m = w - D;
        if (eta_ > 0 && (std::abs(p) < 1e3 * eta_ || std::abs(m) < 1e3 * eta_))
          return 0.5 * rho0 * std::log((p * p + eta_ * eta_) / (m * m + eta_ * eta_));
        return rho0 * std::log(std::abs(p / m));
      }
      case DosFamily::Nanowire: {
        const double x = w / D;
        if (std::abs(x) <= 1.0) return 2.0 * x / D;
        return 2.0 / D * (x - num::sign(x) * std::sqrt((x - 1.0) * (x + 1.0)));
      }
      case DosFamily::Gaussian: return 2.0 / D * num::dawson(w / D);
      case DosFamily::Graphene:
        if (spec_.r() == 1.0) {
          if (w == 0.0) return 0.0;
          const double x = w / D;
          return x / D * std::log(x * x / std::abs((1.0 - x) * (1.0 + x)));
        }
        return pv_re(w);
      case DosFamily::Tabulated: return table_re(w);
      default: return pv_re(w);
    }
  }

  // dG/dw where a closed form exists.
  std::optional<cplx> derivative(double w) const {
    const double D = spec_.D();
    if (spec_.family() == DosFamily::Flat) {
      const double rho0 = spec_.rho0();
      const double den = (D - w) * (D + w);
      // Broadened inside the band only; outside G is real and exact.
      if (std::abs(w) > D) return cplx(2.0 * D * rho0 / den, 0.0);
      return cplx(2.0 * D * rho0 * den / (den * den + eta_ * eta_ * D * D), 0.0);
    }
    if (spec_.family() == DosFamily::Nanowire) {
      const double x = w / D;
      if (std::abs(x) < 1.0) {
        const double s = std::sqrt((1 - x) * (1 + x));
        return cplx(2.0 / (D * D), 2.0 / (D * D) * x / s);
      }
      if (std::abs(x) == 1.0) return std::nullopt;
      const double s = std::sqrt((x - 1) * (x + 1));
      return cplx(2.0 / (D * D) * (1.0 - std::abs(x) / s), 0.0);
    }
    if (spec_.family() == DosFamily::Graphene && spec_.r() == 1.0) {
      const double x = w / D;
      if (x == 0.0 || std::abs(x) == 1.0) return std::nullopt;
      const double u = (1.0 - x) * (1.0 + x);
      const double re = (std::log(x * x / std::abs(u)) + 2.0 + 2.0 * x * x / u) / (D * D);
      return cplx(re, std::abs(x) < 1.0 ? -num::pi * num::sign(x) / (D * D) : 0.0);
    }
    if (spec_.family() == DosFamily::Gaussian) {
      const double x = w / D;
      return cplx(2.0 / (D * D) * (1.0 - 2.0 * x * num::dawson(x)), 2.0 * num::pi / D * x * spec_.rho(w));
    }
    return std::nullopt;
  }

  // Upper and lower edges of the continuum as seen by G (spectral support).
  double band_lo() const { return spec_.lo(); }
  double band_hi() const { return spec_.hi(); }

private:
  double pv_re(double w) const {
    if (spec_.symmetric()) {
      if (w == 0.0) return 0.0;
      if (w < 0.0) return -pv_re_pos(-w);
    }
    return pv_re_pos(w);
  }

  double pv_re_pos(double w) const {
    const double a = spec_.lo(), b = spec_.hi();
    const double scale = std::max(spec_.D(), std::abs(w));
    auto cuts = spec_.kinks();
    if (w <= a || w >= b) {
      return quad::integrate_singular([&](double e) { return spec_.rho(e) / (w - e); }, a, b, cuts);
    }
    const double rw = spec_.rho(w);
    cuts.push_back(w);
    const double body = quad::integrate_singular(
        [&](double e) {
          const double d = w - e;
          if (std::abs(d) < 1e-14 * scale) return 0.0;
          return (spec_.rho(e) - rw) / d;
        },
        a, b, cuts);
    return body + rw * std::log((w - a) / (b - w));
  }

  // Exact Hilbert transform of a piecewise-linear density: each segment
  // rho = c0 + c1 e on [l, h] contributes rho_seg(w) ln|(w-l)/(w-h)| - c1 (h-l).
  double table_re(double w) const {
    const auto& t = spec_.table();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const auto [l, rl] = t[i];
      const auto [h, rh] = t[i + 1];
      const double c1 = (rh - rl) / (h - l);
      const double seg_at_w = rl + c1 * (w - l);
      const double dl = std::abs(w - l), dh = std::abs(w - h);
      // The log terms from neighbouring segments cancel at shared nodes;
      // dropping the singular piece there is exact in the limit.
      double lg = 0.0;
      if (dl > 0) lg += std::log(dl);
      if (dh > 0) lg -= std::log(dh);
      if ((dl == 0 && rl != 0) || (dh == 0 && rh != 0)) {
        // Endpoint of the table with a finite jump: logarithmic divergence.
        if ((dl == 0 && i == 0) || (dh == 0 && i + 2 == t.size()))
          return dl == 0 ? -INFINITY : INFINITY;
      }
      acc += seg_at_w * lg - c1 * (h - l);
    }
    return acc;
  }

  DosSpec spec_;
  double eta_;
};

struct LocalGreensFunction {
  std::vector<double> grid;
  std::vector<cplx> values;
  std::vector<cplx> derivative;  // empty unless closed form
  double eta = 1e-6;
  bool coarse_warning = false;
  std::string source;
};

// Log-linear frequency grid on [-wmax, wmax], dense near w = 0, containing
// the band edges +-D. No point sits at w = 0.
inline std::vector<double> default_grid(double D = 1.0, std::size_t n = 4000, double wmax_over_D = 5.0,
                                        double wmin_over_D = 1e-6) {
  const std::size_t half = n / 2;
  const std::size_t nlog = half * 3 / 5;
  const std::size_t nlin = half - nlog;
  std::vector<double> pos;
  pos.reserve(half);
  const double l0 = std::log(wmin_over_D), l1 = 0.0;
  for (std::size_t i = 0; i < nlog; ++i)
    pos.push_back(D * std::exp(l0 + (l1 - l0) * double(i) / double(nlog - 1)));
  for (std::size_t i = 1; i <= nlin; ++i)
    pos.push_back(D * (1.0 + (wmax_over_D - 1.0) * double(i) / double(nlin)));
  std::vector<double> g;
  g.reserve(2 * pos.size());
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) g.push_back(-*it);
  g.insert(g.end(), pos.begin(), pos.end());
  return g;
}

inline LocalGreensFunction greens_from_dos(const DosSpec& spec, const std::vector<double>& grid,
                                           double eta = 1e-6) {
  if (!(eta > 0.0)) throw ValidationError("broadening eta must be positive");
  if (grid.size() < 3) throw ValidationError("frequency grid too short");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ValidationError("frequency grid must be strictly increasing");
  const double D = spec.D();
  if (grid.front() > -5.0 * D * (1 - 1e-12) || grid.back() < 5.0 * D * (1 - 1e-12))
    throw ValidationError("frequency grid must span [-5D, 5D]");

  BathGreens g(spec, eta);
  LocalGreensFunction out;
  out.grid = grid;
  out.eta = eta;
  out.source = spec.id();
  out.values.reserve(grid.size());
  for (double w : grid) out.values.push_back(g(w));
  if (spec.family() == DosFamily::Flat || spec.family() == DosFamily::Nanowire) {
    out.derivative.reserve(grid.size());
    for (double w : grid) {
      auto d = g.derivative(w);
      out.derivative.push_back(d ? *d : cplx(NAN, NAN));
    }
  }

  // Unresolved features: a jump of rho between neighbours that is not one of
  // the declared kinks.
  double rmax = 0.0;
  for (double w : grid)
    if (spec.family() != DosFamily::TbgDiverging) rmax = std::max(rmax, spec.rho(w));
  if (spec.family() == DosFamily::TbgDiverging) rmax = spec.rho0() * std::pow(1e-3, spec.r());
  const auto kinks = spec.kinks();
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    bool has_kink = false;
    for (double k : kinks)
      if (k >= grid[i] && k <= grid[i + 1]) has_kink = true;
    if (has_kink) continue;
    if (std::abs(spec.rho(grid[i + 1]) - spec.rho(grid[i])) > 0.05 * rmax) {
      out.coarse_warning = true;
      break;
    }
  }
  return out;
}

// Wide flat band: G = -i pi rho0 at every frequency.
inline LocalGreensFunction wide_flat(double rho0, const std::vector<double>& grid, double eta = 1e-6) {
  LocalGreensFunction out;
  out.grid = grid;
  out.eta = eta;
  out.values.assign(grid.size(), cplx(0.0, -num::pi * rho0));
  out.derivative.assign(grid.size(), cplx(0.0, 0.0));
  out.source = "wide-flat";
  return out;
}

struct Hybridization {
  std::vector<cplx> delta;   // w - 1/G
  std::vector<cplx> ddelta;  // d delta / dw
};

inline Hybridization hybridization(const LocalGreensFunction& G) {
  const auto n = G.grid.size();
  Hybridization h;
  h.delta.resize(n);
  h.ddelta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(G.values[i]) < 1e-12)
      throw SingularInversion("|G| below 1e-12 at w = " + std::to_string(G.grid[i]));
    h.delta[i] = G.grid[i] - 1.0 / G.values[i];
  }
  if (!G.derivative.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      h.ddelta[i] = 1.0 + G.derivative[i] / (G.values[i] * G.values[i]);
    return h;
  }
  // Three-point derivative on the non-uniform grid.
  const auto& x = G.grid;
  const auto& d = h.delta;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      h.ddelta[i] = (d[1] - d[0]) / (x[1] - x[0]);
    } else if (i + 1 == n) {
      h.ddelta[i] = (d[n - 1] - d[n - 2]) / (x[n - 1] - x[n - 2]);
    } else {
      const double hm = x[i] - x[i - 1], hp = x[i + 1] - x[i];
      h.ddelta[i] = (d[i + 1] * hm * hm - d[i - 1] * hp * hp + d[i] * (hp * hp - hm * hm)) /
                    (hm * hp * (hm + hp));
    }
  }
  return h;
}

} // namespace thermo
