#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "thermo/bath/discretize.hpp"
#include "thermo/bath/greens.hpp"
#include "thermo/core/errors.hpp"
#include "thermo/core/free_spin.hpp"
#include "thermo/core/numeric.hpp"
#include "thermo/core/quadrature.hpp"
#include "thermo/ising/ising_exact.hpp"

namespace thermo {

// <n_0sigma> with potential sigma*B_0_eff on the impurity site:
// int f(w) rho(w) / |1 - eps G(w)|^2 dw plus bound-state and unresolvable
// resonance residues.
inline double bath_occupancy(const BathGreens& g, double B0_eff, double T, double sigma) {
  if (!(T > 0.0)) throw ValidationError("temperature must be positive");
  const double eps = sigma * B0_eff;
  const auto& spec = g.dos();
  const double lo = g.band_lo(), hi = g.band_hi();
  auto cuts = spec.kinks();
  cuts.push_back(0.0);
  std::optional<SpectralShift> shift;
  if (eps != 0.0) shift.emplace(std::make_shared<BathGreens>(g), eps);
  auto slope = [&](double w) {
    if (auto d = g.derivative(w)) return d->real();
    const double h = 1e-7 * std::max(spec.D(), std::abs(w));
    return (g.re(w + h) - g.re(w - h)) / (2 * h);
  };
  // In-band zeros of 1 - eps Re G give Lorentzians of half-width
  // pi rho / |Re G'| and weight 1 / (eps^2 |Re G'|). Resolvable ones become
  // quadrature breakpoints; narrower ones are added as poles.
  double n = 0.0;
  std::vector<double> poles;
  if (shift)
    for (double z : shift->in_band_zeros()) {
      const double gp = std::abs(slope(z));
      if (!(gp > 0.0) || !std::isfinite(gp)) continue;
      const double width = num::pi * spec.rho(z) / gp;
      if (width > 1e-13 * std::max(spec.D(), std::abs(z))) {
        cuts.push_back(z);
      } else {
        poles.push_back(z);
        n += num::fermi(z, T) / (eps * eps * gp);
      }
    }
  auto rho_eps = [&](double w) {
    if (w == 0.0 && spec.family() == DosFamily::TbgDiverging) return 0.0;
    const double r = spec.rho(w);
    if (r == 0.0) return 0.0;
    for (double z : poles)
      if (std::abs(w - z) < 1e-9 * std::max(spec.D(), std::abs(z))) return 0.0;
    if (eps == 0.0) return r;
    return r / std::norm(1.0 - eps * g(w));
  };
  // Ground-state part plus a thermal correction localized near w = 0.
  n += quad::integrate_singular(rho_eps, lo, std::min(0.0, hi), cuts, 1e-13);
  const double a = std::max(lo, -40.0 * T), b = std::min(hi, 40.0 * T);
  if (b > a)
    n += quad::integrate_singular([&](double w) { return num::fermi_excess(w, T) * rho_eps(w); }, a, b, cuts,
                                  1e-13);
  if (shift) {
    for (const auto& bs : shift->bound_states()) {
      const double dG = slope(bs.position);
      if (dG == 0.0 || !std::isfinite(dG)) continue;  // bound state pinned to a log edge: no weight
      n += num::fermi(bs.position, T) / (eps * eps * std::abs(dG));
    }
  }
  return n;
}

inline double bath_occupancy(const DiscreteBath& bath, double B0_eff, double T, double sigma) {
  if (!(T > 0.0)) throw ValidationError("temperature must be positive");
  return DiscreteSpectralShift(bath, sigma * B0_eff).occupation(T);
}

struct MfState {
  double m_imp = 0.0;
  double m_bath = 0.0;
  double B_I_eff = 0.0;
  double B_0_eff = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double free_energy = 0.0;
  bool multiple_fixed_points = false;
  std::vector<double> trajectory;  // residual per iteration
};

// Self-consistent mean-field decoupling of the Ising coupling:
//   m_imp = -tanh((B_I + Jz m_bath) / 2T) / 2,
//   m_bath = (n_up - n_down)/2 at B_0_eff = B_0 + Jz m_imp.
class MeanFieldSolver {
public:
  explicit MeanFieldSolver(const DosSpec& dos, double eta = 1e-6)
      : g_(std::make_shared<BathGreens>(dos, eta)), ising_(dos, eta) {}
  explicit MeanFieldSolver(DiscreteBath bath)
      : disc_(std::make_shared<DiscreteBath>(bath)), ising_(std::move(bath)) {}

  double occupancy(double B0_eff, double T, double sigma) const {
    return disc_ ? bath_occupancy(*disc_, B0_eff, T, sigma) : bath_occupancy(*g_, B0_eff, T, sigma);
  }

  double bath_magnetization(double B0_eff, double T) const {
    if (B0_eff == 0.0 && (disc_ ? disc_->symmetric() : g_->dos().symmetric())) return 0.0;
    return 0.5 * (occupancy(B0_eff, T, 0.5) - occupancy(B0_eff, T, -0.5));
  }

  // One application of the self-consistency map.
  std::array<double, 2> map(const IsingParams& p, double m_imp, double m_bath) const {
    return {free_spin_magnetization(p.B_I + p.Jz * m_bath, p.T), bath_magnetization(p.B_0 + p.Jz * m_imp, p.T)};
  }

  double free_energy(const IsingParams& p, double m_imp, double m_bath) const {
    const double bi = p.B_I + p.Jz * m_bath;
    const double b0 = p.B_0 + p.Jz * m_imp;
    const double x = std::abs(bi) / (2.0 * p.T);
    const double f_imp = -p.T * (x + std::log1p(std::exp(-2.0 * x)));  // -T ln(2 cosh x)
    const double f_bath = -p.T * (ising_.ln_z_shift(0.5 * b0, p.T) + ising_.ln_z_shift(-0.5 * b0, p.T));
    return f_imp + f_bath - p.Jz * m_imp * m_bath;
  }

  MfState iterate(const IsingParams& p, double m_imp, double m_bath, double tol, int max_iter) const {
    MfState st;
    double alpha = 0.5;
    std::array<double, 2> prev_step{0.0, 0.0};
    for (int it = 1; it <= max_iter; ++it) {
      const auto nx = map(p, m_imp, m_bath);
      const std::array<double, 2> step{nx[0] - m_imp, nx[1] - m_bath};
      const double res = std::max(std::abs(step[0]), std::abs(step[1]));
      st.trajectory.push_back(res);
      st.iterations = it;
      if (res <= tol) {
        m_imp = nx[0];
        m_bath = nx[1];
        st.residual = res;
        st.m_imp = m_imp;
        st.m_bath = m_bath;
        st.B_I_eff = p.B_I + p.Jz * m_bath;
        st.B_0_eff = p.B_0 + p.Jz * m_imp;
        return st;
      }
      // Oscillation: the update flips sign in every component that moves.
      if (it > 1 && step[0] * prev_step[0] <= 0 && step[1] * prev_step[1] <= 0 &&
          (step[0] * prev_step[0] < 0 || step[1] * prev_step[1] < 0))
        alpha *= 0.5;
      prev_step = step;
      m_imp += alpha * step[0];
      m_bath += alpha * step[1];
    }
    throw ConvergenceError("mean-field iteration did not converge in " + std::to_string(max_iter) + " steps",
                           st.trajectory);
  }

  MfState solve(const IsingParams& p, double tol = 1e-12, int max_iter = 500, bool probe_seeds = true) const {
    p.validate();
    if (!(tol >= 1e-12)) throw ValidationError("tolerance must be at least 1e-12");
    // Decoupled start: free spin and bare bath.
    const double mi0 = free_spin_magnetization(p.B_I, p.T);
    const double mb0 = bath_magnetization(p.B_0, p.T);
    MfState best = iterate(p, mi0, mb0, tol, max_iter);
    if (p.Jz == 0.0 || !probe_seeds) {
      best.free_energy = free_energy(p, best.m_imp, best.m_bath);
      return best;
    }
    best.free_energy = free_energy(p, best.m_imp, best.m_bath);
    std::vector<MfState> found{best};
    for (double si : {0.45, -0.45})
      for (double sb : {0.45, -0.45}) {
        MfState s;
        try {
          s = iterate(p, si, sb, tol, max_iter);
        } catch (const ConvergenceError&) {
          continue;
        }
        bool dup = false;
        for (auto& f : found)
          if (std::abs(f.m_imp - s.m_imp) < 1e-6 && std::abs(f.m_bath - s.m_bath) < 1e-6) dup = true;
        if (dup) continue;
        s.free_energy = free_energy(p, s.m_imp, s.m_bath);
        found.push_back(s);
      }
    for (auto& f : found)
      if (f.free_energy < best.free_energy) best = f;
    best.multiple_fixed_points = found.size() > 1;
    return best;
  }

private:
  std::shared_ptr<const BathGreens> g_;
  std::shared_ptr<const DiscreteBath> disc_;
  IsingSolver ising_;
};

inline MfState solve_self_consistent(const IsingParams& p, double tol = 1e-12, int max_iter = 500) {
  return MeanFieldSolver(p.dos).solve(p, tol, max_iter);
}

} // namespace thermo
