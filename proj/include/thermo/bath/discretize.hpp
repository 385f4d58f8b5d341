#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "thermo/bath/dos.hpp"
#include "thermo/core/errors.hpp"

namespace thermo {

// Discrete bath: single-particle levels `energies` with hybridization weights
// `weights` (the local DoS is sum_i weights[i] delta(w - energies[i])).
struct DiscreteBath {
  std::vector<double> energies;
  std::vector<double> weights;

  // Metadata from the discretization.
  double lambda = 0.0;
  int n_max = 0;
  double D = 1.0;  // band scale of the source density of states
  double center_weight = 0.0;         // weight of |w| < D Lambda^{-n_max}, folded into the innermost poles
  std::vector<int> dropped_intervals;  // signed interval index (+-(n+1)) of zero-weight intervals
  std::string dos_ref;

  std::size_t size() const { return energies.size(); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  bool symmetric(double tol = 1e-14) const {
    const auto n = energies.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = n - 1 - i;
      if (std::abs(energies[i] + energies[j]) > tol * (std::abs(energies[i]) + 1e-300)) return false;
      if (std::abs(weights[i] - weights[j]) > tol * weights[i]) return false;
    }
    return true;
  }
};

// Logarithmic discretization on +-D Lambda^{-n}, n = 0..n_max. Each interval
// becomes one pole at its rho-weighted mean energy carrying its total weight.
// The residual weight inside |w| < D Lambda^{-n_max} is folded into the
// innermost interval on each side so the weights sum to one. For the Gaussian
// an extra interval collects the tail |w| > D.
inline DiscreteBath discretize_log(const DosSpec& spec, double lambda, int n_max,
                                   double drop_threshold = 1e-40) {
  if (!(lambda > 1.0)) throw ValidationError("Lambda must exceed 1");
  if (n_max < 1) throw ValidationError("n_max must be positive");
  const double D = spec.D();
  DiscreteBath out;
  out.lambda = lambda;
  out.n_max = n_max;
  out.dos_ref = spec.id();
  out.D = D;
  out.center_weight = spec.weight(-D * std::pow(lambda, -n_max), D * std::pow(lambda, -n_max));

  struct Iv {
    double a, b;
    int tag;
  };
  std::vector<Iv> ivs;
  for (int n = 0; n < n_max; ++n) {
    const double hi = D * std::pow(lambda, -n);
    const double lo = n + 1 == n_max ? 0.0 : D * std::pow(lambda, -n - 1);
    ivs.push_back({lo, hi, n + 1});
    ivs.push_back({-hi, -lo, -(n + 1)});
  }
  if (!spec.hard_band()) {
    ivs.push_back({D, spec.hi(), 0});
    ivs.push_back({spec.lo(), -D, 0});
  } else if (spec.family() == DosFamily::Tabulated) {
    // Asymmetric tables: D = max|w| so one side may be shorter; nothing beyond D.
  }

  for (const auto& iv : ivs) {
    const auto [w0, w1] = spec.moments(iv.a, iv.b);
    if (!(w0 > drop_threshold)) {
      out.dropped_intervals.push_back(iv.tag);
      continue;
    }
    out.energies.push_back(w1 / w0);
    out.weights.push_back(w0);
  }
  std::vector<std::size_t> idx(out.energies.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return out.energies[a] < out.energies[b]; });
  DiscreteBath sorted = out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    sorted.energies[i] = out.energies[idx[i]];
    sorted.weights[i] = out.weights[idx[i]];
  }
  return sorted;
}

} // namespace thermo
