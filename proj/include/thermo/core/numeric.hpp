#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace thermo::num {

inline constexpr double pi = std::numbers::pi;

// ln(1 + e^x) without overflow.
inline double softplus(double x) {
  if (x > 35.0) return x + std::exp(-x);
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// Fermi function 1/(e^{w/T}+1).
inline double fermi(double w, double T) {
  const double x = w / T;
  if (x > 0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

// f(w) - theta(-w): the thermal part of the Fermi function, localized near w = 0.
inline double fermi_excess(double w, double T) {
  const double x = w / T;
  if (x > 0) return fermi(w, T);
  if (x < 0) return -fermi(-w, T);
  return 0.5;
}

inline double logsumexp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double sech(double x) {
  const double ax = std::abs(x);
  if (ax > 700.0) return 0.0;
  return 1.0 / std::cosh(ax);
}

inline double sign(double x) { return (x > 0) - (x < 0); }

// Dawson function F(x) = exp(-x^2) int_0^x exp(t^2) dt by Rybicki's sampling
// sum over odd multiples of h; the error is of order exp(-(pi / 2h)^2).
inline double dawson(double x) {
  constexpr double h = 0.2;
  const long n0 = 2 * std::lround(0.5 * x / h);  // even: the sum runs over odd n
  double s = 0.0;
  for (long k = -41; k <= 41; k += 2) {
    const double d = x - (n0 + k) * h;
    s += std::exp(-d * d) / static_cast<double>(n0 + k);
  }
  return s / std::sqrt(pi);
}

} // namespace thermo::num
