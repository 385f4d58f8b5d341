#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "thermo/core/errors.hpp"
#include "thermo/core/numeric.hpp"

namespace thermo {

// Two-site narrow-band-limit model: impurity spin coupled by J S_I.S_0 to a
// single bath site, field B on both spins.
struct NblParams {
  double J = 1.0;
  double B = 0.0;
  double T = 1.0;
};

namespace nbl_detail {

struct Level {
  double E;
  double deg;
  double s_imp;  // <S_I^z> in the level (all levels are S_I^z-diagonal on average)
  double M;      // total S^z
};

// Spectrum: site empty or doubly occupied (impurity free, 2x2 states),
// the triplet J/4 + B M and the singlet -3J/4.
inline std::vector<Level> levels(double J, double B) {
  return {
      {0.5 * B, 2.0, 0.5, 0.5},          {-0.5 * B, 2.0, -0.5, -0.5},
      {0.25 * J + B, 1.0, 0.5, 1.0},     {0.25 * J, 1.0, 0.0, 0.0},
      {0.25 * J - B, 1.0, -0.5, -1.0},   {-0.75 * J, 1.0, 0.0, 0.0},
  };
}

struct Thermal {
  double lnZ;
  std::vector<double> p;  // probability per level (degeneracy included)
  std::vector<Level> lv;
};

inline Thermal thermal(const NblParams& q) {
  if (!(q.T > 0.0)) throw ValidationError("temperature must be positive");
  Thermal th;
  th.lv = levels(q.J, q.B);
  double emin = th.lv.front().E;
  for (auto& l : th.lv) emin = std::min(emin, l.E);
  std::vector<double> x;
  for (auto& l : th.lv) x.push_back(std::log(l.deg) - (l.E - emin) / q.T);
  const double lse = num::logsumexp(x);
  th.lnZ = lse - emin / q.T;
  for (double xi : x) th.p.push_back(std::exp(xi - lse));
  return th;
}

} // namespace nbl_detail

inline double nbl_log_partition(const NblParams& p) { return nbl_detail::thermal(p).lnZ; }

// Z = 4 cosh(B/2T) + e^{-J/4T}[1 + 2 cosh(B/T)] + e^{3J/4T}.
inline double nbl_partition(const NblParams& p) { return std::exp(nbl_log_partition(p)); }

// <S_I^z> = -[2 sinh(B/2T) + e^{-J/4T} sinh(B/T)] / Z.
inline double nbl_magnetization(const NblParams& p) {
  const auto th = nbl_detail::thermal(p);
  double m = 0.0;
  for (std::size_t i = 0; i < th.lv.size(); ++i) m += th.p[i] * th.lv[i].s_imp;
  return m;
}

// Impurity / bath-site negativity. Partial transposition on the impurity maps
// the singlet-triplet coherence (p_T0 - p_S)/2 onto the |up,up>,|dn,dn>
// block, whose smaller eigenvalue is the only one that can turn negative.
inline double nbl_negativity(const NblParams& p) {
  const auto th = nbl_detail::thermal(p);
  const double pp = th.p[2], p0 = th.p[3], pm = th.p[4], ps = th.p[5];
  const double c = 0.5 * (p0 - ps);
  const double h = 0.5 * (pp - pm);
  const double n = std::hypot(h, c) - 0.5 * (pp + pm);
  return std::clamp(n, 0.0, 0.5);
}

struct NblEntropy {
  double S;                // ln Z + <E>/T
  double dm_dT;            // analytic d<S_I^z>/dT
  double dS_dB;            // analytic dS/dB at fixed T
  double dS_dB_numeric;    // centered difference with step dB
  double maxwell_residual; // |dm/dT + dS/dB / 2|
};

inline NblEntropy nbl_entropy_and_maxwell(const NblParams& p, double dB) {
  const auto th = nbl_detail::thermal(p);
  double E = 0, M = 0, s = 0, EM = 0, Es = 0;
  for (std::size_t i = 0; i < th.lv.size(); ++i) {
    const auto& l = th.lv[i];
    E += th.p[i] * l.E;
    M += th.p[i] * l.M;
    s += th.p[i] * l.s_imp;
    EM += th.p[i] * l.E * l.M;
    Es += th.p[i] * l.E * l.s_imp;
  }
  const double T2 = p.T * p.T;
  NblEntropy out;
  out.S = th.lnZ + E / p.T;
  out.dm_dT = (Es - E * s) / T2;
  out.dS_dB = -(EM - E * M) / T2;
  auto S_at = [&](double B) {
    const auto t = nbl_detail::thermal({p.J, B, p.T});
    double e = 0;
    for (std::size_t i = 0; i < t.lv.size(); ++i) e += t.p[i] * t.lv[i].E;
    return t.lnZ + e / p.T;
  };
  out.dS_dB_numeric = (S_at(p.B + dB) - S_at(p.B - dB)) / (2.0 * dB);
  out.maxwell_residual = std::abs(out.dm_dT + 0.5 * out.dS_dB);
  return out;
}

} // namespace thermo
