#pragma once

#include <cmath>

#include "thermo/core/numeric.hpp"

namespace thermo {

// <S^z> of an isolated spin-1/2 in field B: -tanh(B/2T)/2.
inline double free_spin_magnetization(double B, double T) { return -0.5 * std::tanh(B / (2.0 * T)); }

// d<S^z>/dT of the isolated spin.
inline double free_spin_dm_dT(double B, double T) {
  const double s = num::sech(B / (2.0 * T));
  return B / (4.0 * T * T) * s * s;
}

} // namespace thermo
