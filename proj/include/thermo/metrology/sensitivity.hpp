#pragma once

#include <cmath>
#include <vector>

#include "thermo/core/errors.hpp"
#include "thermo/core/numeric.hpp"

namespace thermo {

struct SensitivityPoint {
  double T = 0.0;
  double B = 0.0;
  double m = 0.0;
  double dm_dT = 0.0;
  double qfi = 0.0;
  double qsnr = 0.0;
};

// Classical Fisher information sum_k dp_k^2 / p_k.
inline double fisher_information(const std::vector<double>& p, const std::vector<double>& dp) {
  if (p.size() != dp.size() || p.empty()) throw ValidationError("probability and derivative lengths differ");
  double sp = 0.0, sd = 0.0, F = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p[k] >= 0.0)) throw ValidationError("negative probability");
    sp += p[k];
    sd += dp[k];
    if (p[k] == 0.0) {
      if (dp[k] != 0.0) throw ValidationError("divergent Fisher information: zero probability with nonzero derivative");
      continue;
    }
    F += dp[k] * dp[k] / p[k];
  }
  if (std::abs(sp - 1.0) > 1e-8) throw ValidationError("probabilities do not sum to one");
  if (std::abs(sd) > 1e-8) throw ValidationError("probability derivatives do not sum to zero");
  return F;
}

// Temperature QFI of a two-level probe with populations 1/2 +- m.
inline double qfi_two_level(double m, double dm_dT) {
  if (!(std::abs(m) < 0.5 - 1e-12)) throw SaturationError("probe fully polarized: |m| >= 1/2");
  return dm_dT * dm_dT / (0.25 - m * m);
}

inline double qsnr(double T, double qfi) {
  if (!(qfi >= 0.0)) throw ValidationError("QFI must be non-negative");
  return T * std::sqrt(qfi);
}

// x sech x with x = B/2T.
inline double free_spin_qsnr(double B, double T) {
  if (!(T > 0.0)) throw ValidationError("temperature must be positive");
  const double x = std::abs(B) / (2.0 * T);
  return x * num::sech(x);
}

inline double negativity_full_bath(double m) {
  if (!(std::abs(m) <= 0.5 + 1e-12)) throw ValidationError("|m| must not exceed 1/2");
  return 0.5 * std::sqrt(std::max(0.0, 1.0 - 4.0 * m * m));
}

} // namespace thermo
