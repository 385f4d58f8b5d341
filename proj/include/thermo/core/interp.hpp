#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include <boost/math/interpolators/cubic_hermite.hpp>

#include "thermo/core/errors.hpp"

namespace thermo {

// Cubic Hermite interpolation in x = ln T. Node slopes come from 5-point
// Lagrange stencils, limited so that monotone stretches of data stay
// monotone. Input may be ordered either way; it is sorted ascending internally.
class LogInterp {
public:
  LogInterp(const std::vector<double>& T, const std::vector<double>& y) {
    if (T.size() != y.size() || T.size() < 4) throw ValidationError("log interpolation needs >= 4 matching points");
    std::vector<std::size_t> idx(T.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return T[a] < T[b]; });
    std::vector<double> x, v;
    for (auto i : idx) {
      if (!(T[i] > 0.0)) throw ValidationError("log interpolation needs positive abscissae");
      const double lx = std::log(T[i]);
      if (!x.empty() && !(lx > x.back())) throw ValidationError("log interpolation needs distinct abscissae");
      x.push_back(lx);
      v.push_back(y[i]);
    }
    lo_ = x.front();
    hi_ = x.back();
    xs_ = x;
    ys_ = v;
    auto d = slopes(x, v);
    spline_ = std::make_unique<Spline>(std::move(x), std::move(v), std::move(d));
  }

  double lo() const { return std::exp(lo_); }
  double hi() const { return std::exp(hi_); }

  double operator()(double T) const {
    const double x = std::log(T);
    if (x < lo_ - 1e-12 || x > hi_ + 1e-12) throw RangeError("temperature outside interpolation range");
    return (*spline_)(std::clamp(x, lo_, hi_));
  }

  // |cubic - linear| at T: a crude local interpolation error bound.
  double error_estimate(double T) const {
    const double x = std::clamp(std::log(T), lo_, hi_);
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t j = std::clamp<std::size_t>(it - xs_.begin(), 1, xs_.size() - 1);
    const double w = (x - xs_[j - 1]) / (xs_[j] - xs_[j - 1]);
    const double lin = ys_[j - 1] + w * (ys_[j] - ys_[j - 1]);
    return std::abs((*spline_)(x) - lin);
  }

private:
  using Spline = boost::math::interpolators::cubic_hermite<std::vector<double>>;

  static std::vector<double> slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    const int w = std::min(n, 5);
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
      const int a = std::clamp(i - w / 2, 0, n - w);
      double s = 0.0;
      for (int j = a; j < a + w; ++j) {
        double l = 0.0;
        for (int k = a; k < a + w; ++k) {
          if (k == j) continue;
          double term = 1.0 / (x[j] - x[k]);
          for (int m = a; m < a + w; ++m)
            if (m != j && m != k) term *= (x[i] - x[m]) / (x[j] - x[m]);
          l += term;
        }
        s += l * y[j];
      }
      d[i] = s;
    }
    // Fritsch-Carlson limiter on monotone stretches; extrema keep their slope.
    auto secant = [&](int k) { return (y[k + 1] - y[k]) / (x[k + 1] - x[k]); };
    for (int i = 0; i < n; ++i) {
      const double l = i > 0 ? secant(i - 1) : secant(i);
      const double r = i + 1 < n ? secant(i) : secant(i - 1);
      if (l == 0.0 || r == 0.0) {
        if (l == 0.0 && r == 0.0) d[i] = 0.0;
        continue;
      }
      if ((l > 0) != (r > 0)) continue;
      if ((d[i] > 0) != (l > 0)) d[i] = 0.0;
      const double cap = 3.0 * std::min(std::abs(l), std::abs(r));
      if (std::abs(d[i]) > cap) d[i] = std::copysign(cap, l);
    }
    return d;
  }

  double lo_ = 0, hi_ = 0;
  std::vector<double> xs_, ys_;
  std::unique_ptr<Spline> spline_;
};

} // namespace thermo
