#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "thermo/bath/discretize.hpp"
#include "thermo/bath/dos.hpp"
#include "thermo/bath/greens.hpp"
#include "thermo/core/errors.hpp"
#include "thermo/core/free_spin.hpp"
#include "thermo/core/numeric.hpp"
#include "thermo/core/quadrature.hpp"

namespace thermo {

struct IsingParams {
  double Jz = 0.0;
  double B_I = 0.0;
  double B_0 = 0.0;
  double T = 1.0;
  DosSpec dos;

  static IsingParams common_field(double Jz, double B, double T, DosSpec dos = DosSpec::flat()) {
    return {Jz, B, B, T, std::move(dos)};
  }

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("temperature must be positive");
    if (!std::isfinite(Jz) || !std::isfinite(B_I) || !std::isfinite(B_0))
      throw ValidationError("couplings and fields must be finite");
  }
};

struct SectorLabel {
  double Sz;     // impurity projection, +-1/2
  double sigma;  // electron spin, +-1/2
};

inline constexpr std::array<SectorLabel, 4> ising_sectors{
    {{0.5, 0.5}, {0.5, -0.5}, {-0.5, 0.5}, {-0.5, -0.5}}};

// Potential felt by spin-sigma electrons on the bath site at the impurity.
inline double boundary_potential(const IsingParams& p, SectorLabel s) { return s.sigma * (p.B_0 + p.Jz * s.Sz); }
inline double boundary_potential(double Jz, double B_0, SectorLabel s) { return s.sigma * (B_0 + Jz * s.Sz); }

// G^eps - G^0 on the grid, with 1/G^eps = 1/G^0 - eps.
inline std::vector<cplx> delta_g_local(const LocalGreensFunction& G, double eps) {
  std::vector<cplx> out(G.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const cplx g = G.values[i];
    cplx den = 1.0 - eps * g;
    if (std::abs(den) < G.eta) den -= cplx(0.0, G.eta);
    out[i] = eps * g * g / den;
  }
  return out;
}

struct BoundState {
  double position;
  double weight;
};

// Change of the total (orbital-summed) bath DoS caused by a potential eps on
// the site at the impurity: Delta rho_tot = d xi / dw with the spectral shift
// xi(w) = -arg(1 - eps G(w + i0)) / pi. Outside the continuum xi is a
// plateau of -+1 between the band edge and a bound state, zero beyond.
class SpectralShift {
public:
  SpectralShift(std::shared_ptr<const BathGreens> g, double eps) : g_(std::move(g)), eps_(eps) {
    lo_ = g_->band_lo();
    hi_ = g_->band_hi();
    if (eps_ != 0.0) {
      find_bound_state();
      scan_band();
    }
    // T-independent occupied part.
    occupied_ = eps_ == 0.0 ? 0.0 : integrate_xi(support_lo(), std::min(0.0, support_hi()), [](double) { return 1.0; });
  }

  double eps() const { return eps_; }
  const std::vector<BoundState>& bound_states() const { return bound_; }
  // Zeros of 1 - eps Re G inside the continuum (resonances where rho is small).
  const std::vector<double>& in_band_zeros() const { return zeros_; }
  double support_lo() const { return bs_lo_ ? *bs_lo_ : lo_; }
  double support_hi() const { return bs_hi_ ? *bs_hi_ : hi_; }

  double xi(double w) const {
    if (eps_ == 0.0) return 0.0;
    if (w <= lo_) return (bs_lo_ && w > *bs_lo_) ? 1.0 : 0.0;
    if (w >= hi_) return (bs_hi_ && w < *bs_hi_) ? -1.0 : 0.0;
    const auto& spec = g_->dos();
    double rho;
    if (w == 0.0 && spec.family() == DosFamily::TbgDiverging) return -0.5 * num::sign(eps_);
    rho = spec.rho(w);
    const double F = 1.0 - eps_ * g_->re(w);
    double theta;
    if (rho == 0.0)
      theta = F < 0.0 ? num::pi : 0.0;
    else
      theta = std::atan2(std::abs(eps_) * num::pi * rho, F);
    return -num::sign(eps_) * theta / num::pi;
  }

  // d/dw ln(1 - eps G), the retarded Delta G_tot (continuum part).
  cplx delta_g_tot(double w) const {
    const cplx G = (*g_)(w);
    cplx dG;
    if (auto d = g_->derivative(w)) {
      dG = *d;
    } else {
      const double h = 1e-6 * std::max(g_->dos().D(), std::abs(w));
      dG = ((*g_)(w + h) - (*g_)(w - h)) / (2.0 * h);
    }
    return -eps_ * dG / (1.0 - eps_ * G);
  }

  // Integral of Delta rho_tot over the continuum, from the edge limits of xi.
  double continuum_weight() const { return edge_xi(hi_, +1) - edge_xi(lo_, -1); }

  // ln Z^eps - ln Z^0 = (1/T) int xi f dw, split into the ground-state part
  // and a thermal part localized within ~40T of the Fermi level.
  double ln_z_shift(double T) const {
    if (eps_ == 0.0) return 0.0;
    const double I = integrate_xi(-40.0 * T, 40.0 * T, [T](double w) { return num::fermi_excess(w, T); });
    return (occupied_ + I) / T;
  }

  double ln_z_shift_dT(double T) const {
    if (eps_ == 0.0) return 0.0;
    const double I = integrate_xi(-40.0 * T, 40.0 * T, [T](double w) { return num::fermi_excess(w, T); });
    const double dI = integrate_xi(-40.0 * T, 40.0 * T, [T](double w) {
      const double c = std::cosh(0.5 * w / T);
      return w / (T * T) / (4.0 * c * c);
    });
    return -(occupied_ + I) / (T * T) + dI / T;
  }

  template <class Fn>
  double integrate_xi(double a, double b, Fn&& g) const {
    double total = 0.0;
    if (bs_lo_) {
      const double l = std::max(a, *bs_lo_), h = std::min(b, lo_);
      if (h > l) total += quad::integrate([&](double w) { return g(w); }, l, h, {0.0});
    }
    {
      const double l = std::max(a, lo_), h = std::min(b, hi_);
      if (h > l) {
        auto cuts = breaks_;
        cuts.push_back(0.0);
        total += quad::integrate_singular([&](double w) { return xi(w) * g(w); }, l, h, cuts, 1e-13);
      }
    }
    if (bs_hi_) {
      const double l = std::max(a, hi_), h = std::min(b, *bs_hi_);
      if (h > l) total -= quad::integrate([&](double w) { return g(w); }, l, h, {0.0});
    }
    return total;
  }

private:
  double F(double w) const { return 1.0 - eps_ * g_->re(w); }

  // Limit of xi approaching the band edge from inside (side = +1 upper).
  double edge_xi(double edge, int side) const {
    if (eps_ == 0.0) return 0.0;
    const double rho_edge = g_->dos().rho(edge);
    double Fe;
    if (rho_edge > 0.0 && g_->dos().hard_band())
      Fe = side > 0 ? -eps_ : eps_;  // Re G diverges logarithmically with sign = side
    else
      Fe = F(edge);
    return Fe < 0.0 ? -num::sign(eps_) : 0.0;
  }

  void find_bound_state() {
    const auto& spec = g_->dos();
    const double D = spec.D();
    const int side = eps_ > 0 ? +1 : -1;
    const double edge = side > 0 ? hi_ : lo_;
    const double ex = edge_xi(edge, side);
    if (ex == 0.0) return;  // no sign change of 1 - eps Re G outside the band

    double pos;
    if (spec.family() == DosFamily::Flat) {
      const double y = 1.0 / (spec.rho0() * std::abs(eps_));
      pos = side * D / std::tanh(0.5 * y);
    } else if (spec.family() == DosFamily::Nanowire) {
      const double a = D / (2.0 * std::abs(eps_));
      pos = side * D * 0.5 * (a + 1.0 / a);
    } else {
      const double delta = 1e-14 * std::max(D, std::abs(edge));
      const double near = edge + side * delta;
      if (F(near) >= 0.0) {
        pos = near;  // closer to the edge than resolvable
      } else {
        double far = edge + side * (2.0 * std::abs(eps_) + D);
        for (int k = 0; k < 60 && F(far) < 0.0; ++k) far = edge + 2.0 * (far - edge);
        std::uintmax_t it = 200;
        auto r = boost::math::tools::toms748_solve([&](double w) { return F(w); }, std::min(near, far),
                                                   std::max(near, far), boost::math::tools::eps_tolerance<double>(52), it);
        pos = 0.5 * (r.first + r.second);
      }
    }
    // Residue of d/dw ln(1 - eps G) at a simple zero: (-eps G') / F'.
    const double h = 1e-7 * std::max(D, std::abs(pos - edge));
    // A simple zero has unit residue; it is checked numerically only outside
    // the broadened region next to the edge, where G is exact.
    double w = 1.0;
    if (std::abs(pos - edge) > std::max(10 * h, 1e4 * g_->eta())) {
      const double Fp = (F(pos + h) - F(pos - h)) / (2 * h);
      double dG;
      if (auto d = g_->derivative(pos))
        dG = d->real();
      else
        dG = (g_->re(pos + h) - g_->re(pos - h)) / (2 * h);
      w = -eps_ * dG / Fp;
      if (std::abs(w - 1.0) > 1e-4)
        throw IntegrityError("bound state weight " + std::to_string(w) + " deviates from one");
    }
    bound_.push_back({pos, w});
    if (side > 0)
      bs_hi_ = pos;
    else
      bs_lo_ = pos;
  }

  // Sign changes of 1 - eps Re G inside the band become quadrature breakpoints:
  // where rho is small the phase jumps there.
  void scan_band() {
    const auto& spec = g_->dos();
    std::vector<double> pts;
    const int n = 256;
    for (int i = 1; i < n; ++i) pts.push_back(lo_ + (hi_ - lo_) * i / n);
    // Log-clustered points near the Fermi level and both band edges, where
    // logarithmic singularities of Re G put the sign changes.
    for (int k = 1; k <= 14; ++k) {
      const double x = spec.D() * std::pow(10.0, -k);
      for (double y : {x, -x, lo_ + x * (hi_ - lo_), hi_ - x * (hi_ - lo_)})
        if (y > lo_ && y < hi_) pts.push_back(y);
    }
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double fa = F(pts[i]), fb = F(pts[i + 1]);
      if (std::isfinite(fa) && std::isfinite(fb) && ((fa < 0) != (fb < 0))) {
        std::uintmax_t it = 60;
        auto r = boost::math::tools::toms748_solve([&](double w) { return F(w); }, pts[i], pts[i + 1], fa, fb,
                                                   boost::math::tools::eps_tolerance<double>(40), it);
        breaks_.push_back(0.5 * (r.first + r.second));
        zeros_.push_back(breaks_.back());
      }
    }
    for (double k : spec.kinks()) breaks_.push_back(k);
  }

  std::shared_ptr<const BathGreens> g_;
  double eps_;
  double lo_, hi_;
  std::optional<double> bs_lo_, bs_hi_;
  std::vector<BoundState> bound_;
  std::vector<double> breaks_;
  std::vector<double> zeros_;
  double occupied_ = 0.0;
};

// Same quantity for a discrete bath sum_i w_i delta(w - e_i): the perturbed
// levels are the roots of 1 = eps sum_i w_i / (w - e_i).
class DiscreteSpectralShift {
public:
  DiscreteSpectralShift(const DiscreteBath& bath, double eps)
      : poles_(bath.energies), weights_(bath.weights), eps_(eps) {
    if (eps == 0.0) {
      roots_ = poles_;
      return;
    }
    const auto& e = bath.energies;
    const auto& wt = bath.weights;
    const std::size_t P = e.size();
    auto F = [&](double w) {
      double s = 0.0;
      for (std::size_t i = 0; i < P; ++i) s += wt[i] / (w - e[i]);
      return 1.0 - eps * s;
    };
    double W = 0.0;
    for (double x : wt) W += x;
    auto solve = [&](double a, double b) {
      const double fa = F(a), fb = F(b);
      if ((fa < 0) == (fb < 0)) return (std::abs(fa) < std::abs(fb)) ? a : b;
      std::uintmax_t it = 200;
      auto r = boost::math::tools::toms748_solve(F, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(53), it);
      return 0.5 * (r.first + r.second);
    };
    for (std::size_t i = 0; i + 1 < P; ++i)
      roots_.push_back(solve(std::nextafter(e[i], INFINITY), std::nextafter(e[i + 1], -INFINITY)));
    if (eps > 0)
      roots_.push_back(solve(std::nextafter(e[P - 1], INFINITY), e[P - 1] + eps * W + std::abs(eps)));
    else
      roots_.insert(roots_.begin(), solve(e[0] + eps * W - std::abs(eps), std::nextafter(e[0], -INFINITY)));
  }

  const std::vector<double>& roots() const { return roots_; }

  // Spectral weight of the impurity-site orbital on each perturbed level:
  // the residue 1 / (eps^2 sum_i w_i / (r - e_i)^2).
  std::vector<double> residues() const {
    if (eps_ == 0.0) return weights_;
    std::vector<double> out;
    out.reserve(roots_.size());
    for (double r : roots_) {
      double s = 0.0;
      for (std::size_t i = 0; i < poles_.size(); ++i) s += weights_[i] / ((r - poles_[i]) * (r - poles_[i]));
      out.push_back(1.0 / (eps_ * eps_ * s));
    }
    return out;
  }

  // <n> of the impurity-site orbital at temperature T.
  double occupation(double T) const {
    const auto res = residues();
    double n = 0.0;
    for (std::size_t i = 0; i < roots_.size(); ++i) n += res[i] * num::fermi(roots_[i], T);
    return n;
  }

  double ln_z_shift(double T) const {
    double s = 0.0;
    for (std::size_t i = 0; i < roots_.size(); ++i) s += num::softplus(-roots_[i] / T) - num::softplus(-poles_[i] / T);
    return s;
  }

  double ln_z_shift_dT(double T) const {
    double s = 0.0;
    for (std::size_t i = 0; i < roots_.size(); ++i)
      s += roots_[i] / (T * T) * num::fermi(roots_[i], T) - poles_[i] / (T * T) * num::fermi(poles_[i], T);
    return s;
  }

private:
  std::vector<double> poles_, weights_, roots_;
  double eps_;
};

struct DeltaGTotal {
  std::vector<double> grid;
  std::vector<cplx> values;
  std::vector<BoundState> poles;
  double continuum_weight = 0.0;
  double imbalance = 0.0;
};

// Delta G_tot = Delta G_00 (1 - d Delta/dw) on the grid of G, plus the bound
// states of the continuum bath `g` (when given) and the state-counting check.
inline DeltaGTotal delta_g_total(const LocalGreensFunction& G, const std::vector<cplx>& dG00, double eps,
                                 std::shared_ptr<const BathGreens> g = nullptr) {
  if (dG00.size() != G.grid.size()) throw ValidationError("Delta G_00 does not match the grid");
  DeltaGTotal out;
  out.grid = G.grid;
  out.values.resize(G.grid.size());
  const auto hyb = hybridization(G);
  for (std::size_t i = 0; i < G.grid.size(); ++i) out.values[i] = dG00[i] * (1.0 - hyb.ddelta[i]);
  if (g && eps != 0.0) {
    SpectralShift s(g, eps);
    out.poles = s.bound_states();
    out.continuum_weight = s.continuum_weight();
    double pw = 0.0;
    for (auto& b : out.poles) pw += b.weight;
    out.imbalance = out.continuum_weight + pw;
    if (std::abs(out.imbalance) > 1e-4)
      throw IntegrityError("spectral weight change does not vanish: " + std::to_string(out.imbalance));
  }
  return out;
}

inline double ln_z_shift(const SpectralShift& s, double T) {
  if (!(T > 0.0)) throw ValidationError("temperature must be positive");
  return s.ln_z_shift(T);
}
inline double ln_z_shift(const DiscreteSpectralShift& s, double T) {
  if (!(T > 0.0)) throw ValidationError("temperature must be positive");
  return s.ln_z_shift(T);
}

// Exact impurity magnetization of the Ising-coupled probe for a continuum or
// discrete bath. Spectral shifts are cached per boundary potential.
class IsingSolver {
public:
  explicit IsingSolver(const DosSpec& dos, double eta = 1e-6)
      : g_(std::make_shared<BathGreens>(dos, eta)), cache_(std::make_shared<Cache>()) {}
  explicit IsingSolver(DiscreteBath bath)
      : disc_(std::make_shared<DiscreteBath>(std::move(bath))), cache_(std::make_shared<Cache>()) {}

  bool discrete() const { return static_cast<bool>(disc_); }

  double ln_z_shift(double eps, double T) const {
    if (eps == 0.0) return 0.0;
    return disc_ ? discrete_shift(eps)->ln_z_shift(T) : shift(eps)->ln_z_shift(T);
  }
  double ln_z_shift_dT(double eps, double T) const {
    if (eps == 0.0) return 0.0;
    return disc_ ? discrete_shift(eps)->ln_z_shift_dT(T) : shift(eps)->ln_z_shift_dT(T);
  }

  // True when the result is exactly the free-spin law: B_0 = 0, Jz = 0, or the
  // wide flat band (D / B >= wide_band_ratio, with T and Jz also well inside
  // the band), where Delta(w) = w - i / (pi rho0) and the bath shifts cancel.
  bool free_spin_limit(const IsingParams& p) const {
    if (p.B_0 == 0.0 || p.Jz == 0.0) return true;
    if (disc_) return false;
    const auto& d = g_->dos();
    if (d.family() != DosFamily::Flat) return false;
    const double field = std::max(std::abs(p.B_I), std::abs(p.B_0));
    return d.D() >= wide_band_ratio * field && d.D() >= wide_band_inner * std::max(std::abs(p.Jz), p.T);
  }

  // Phi = ln Z(up) - ln Z(down); <S_I^z> = tanh(Phi/2)/2.
  double phi(const IsingParams& p) const {
    p.validate();
    double v = -p.B_I / p.T;
    if (free_spin_limit(p)) return v;
    for (double sg : {0.5, -0.5})
      v += ln_z_shift(boundary_potential(p, {0.5, sg}), p.T) - ln_z_shift(boundary_potential(p, {-0.5, sg}), p.T);
    return v;
  }

  double dphi_dT(const IsingParams& p) const {
    p.validate();
    double v = p.B_I / (p.T * p.T);
    if (free_spin_limit(p)) return v;
    for (double sg : {0.5, -0.5})
      v += ln_z_shift_dT(boundary_potential(p, {0.5, sg}), p.T) -
           ln_z_shift_dT(boundary_potential(p, {-0.5, sg}), p.T);
    return v;
  }

  double magnetization(const IsingParams& p) const {
    if (free_spin_limit(p)) {
      p.validate();
      return free_spin_magnetization(p.B_I, p.T);
    }
    return 0.5 * std::tanh(0.5 * phi(p));
  }

  double dm_dT(const IsingParams& p) const {
    const double s = num::sech(0.5 * phi(p));
    return 0.25 * s * s * dphi_dT(p);
  }

  // dm_dT^2 / (1/4 - m^2) written without the cancellation near saturation.
  double qfi(const IsingParams& p) const {
    const double s = num::sech(0.5 * phi(p));
    const double d = dphi_dT(p);
    return 0.25 * s * s * d * d;
  }

  std::shared_ptr<const SpectralShift> shift(double eps) const {
    std::lock_guard lk(cache_->mu);
    auto it = cache_->cont.find(eps);
    if (it != cache_->cont.end()) return it->second;
    auto s = std::make_shared<const SpectralShift>(g_, eps);
    cache_->cont.emplace(eps, s);
    return s;
  }

  std::shared_ptr<const DiscreteSpectralShift> discrete_shift(double eps) const {
    std::lock_guard lk(cache_->mu);
    auto it = cache_->disc.find(eps);
    if (it != cache_->disc.end()) return it->second;
    auto s = std::make_shared<const DiscreteSpectralShift>(*disc_, eps);
    cache_->disc.emplace(eps, s);
    return s;
  }

  static constexpr double wide_band_ratio = 1e6;
  static constexpr double wide_band_inner = 1e3;

private:
  struct Cache {
    std::mutex mu;
    std::map<double, std::shared_ptr<const SpectralShift>> cont;
    std::map<double, std::shared_ptr<const DiscreteSpectralShift>> disc;
  };
  std::shared_ptr<const BathGreens> g_;
  std::shared_ptr<const DiscreteBath> disc_;
  std::shared_ptr<Cache> cache_;
};

inline double magnetization(const IsingParams& p) { return IsingSolver(p.dos).magnetization(p); }

} // namespace thermo
