#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace thermo::quad {

// Sorts and deduplicates breakpoints, keeping only those inside [a, b].
inline std::vector<double> partition(double a, double b, std::vector<double> cuts) {
  std::vector<double> pts{a};
  std::sort(cuts.begin(), cuts.end());
  for (double c : cuts)
    if (c > a && c < b) pts.push_back(c);
  pts.push_back(b);
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double x, double y) { return std::abs(x - y) <= 1e-15 * (1 + std::abs(x)); }),
            pts.end());
  return pts;
}

// Adaptive Gauss-Kronrod (61 point) over [a, b] split at `cuts`. Suited to
// smooth integrands with known kinks.
template <class F>
double integrate(F&& f, double a, double b, const std::vector<double>& cuts = {},
                 double tol = 1e-13, unsigned max_depth = 30) {
  if (!(b > a)) return 0.0;
  const auto pts = partition(a, b, cuts);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    // Integrate over the unit interval: on a narrow segment far from the
    // origin, rounding of the abscissae would otherwise swamp the error
    // estimate and force bisection to max_depth.
    const double lo = pts[i], w = pts[i + 1] - pts[i];
    total += w * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                     [&](double u) { return f(lo + w * u); }, 0.0, 1.0, max_depth, tol);
  }
  return total;
}

// Tanh-sinh over [a, b] split at `cuts`; tolerates integrable endpoint
// singularities (sqrt edges, |x|^r with r > -1, logarithms).
template <class F>
double integrate_singular(F&& f, double a, double b, const std::vector<double>& cuts = {},
                          double tol = 1e-12) {
  if (!(b > a)) return 0.0;
  const auto pts = partition(a, b, cuts);
  boost::math::quadrature::tanh_sinh<double> ts(15);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    // boost passes (x, distance-to-nearest-endpoint); we only need x.
    total += ts.integrate([&](double x) { return f(x); }, pts[i], pts[i + 1], tol);
  }
  return total;
}

} // namespace thermo::quad
