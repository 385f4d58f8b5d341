#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "thermo/bath/discretize.hpp"
#include "thermo/core/errors.hpp"

namespace thermo {

using wide_float = boost::multiprecision::cpp_bin_float_50;

struct WilsonChain {
  double lambda = 2.0;
  double D = 1.0;
  std::vector<double> t;    // hoppings t_0 .. t_{n_sites-2}
  std::vector<double> eps;  // on-site energies eps_0 .. eps_{n_sites-1}
  std::string dos_ref;
  double center_weight = 0.0;
  std::vector<int> dropped_intervals;

  std::size_t sites() const { return eps.size(); }
};

// Closed-form hopping of the logarithmically discretized flat band.
inline double flat_band_wilson_t(int n, double lambda, double D = 1.0) {
  const double li = 1.0 / lambda;
  return D * 0.5 * (1.0 + li) * (1.0 - std::pow(li, n + 1)) * std::pow(li, 0.5 * n) /
         std::sqrt((1.0 - std::pow(li, 2 * n + 1)) * (1.0 - std::pow(li, 2 * n + 3)));
}

// Lanczos tridiagonalization of diag(energies) from the seed sqrt(weights),
// carried out in `Real`. With exponentially spaced levels the plain
// three-term recursion loses orthogonality after a few tens of sites, so
// every new vector is reorthogonalized against all previous ones (twice).
// Orthogonality is measured after each step; when it exceeds `orth_tol` the
// recursion stops with PrecisionError.
template <class Real = wide_float>
WilsonChain wilson_chain(const DiscreteBath& bath, std::size_t n_sites, bool full_reorth = true,
                         double orth_tol = 1e-8) {
  const std::size_t P = bath.size();
  if (n_sites < 1) throw ValidationError("chain needs at least one site");
  if (n_sites > P)
    throw ValidationError("chain length " + std::to_string(n_sites) + " exceeds the " + std::to_string(P) +
                          " discrete levels");
  using std::sqrt;
  using std::abs;
  using boost::multiprecision::sqrt;
  using boost::multiprecision::abs;

  std::vector<Real> e(P);
  for (std::size_t i = 0; i < P; ++i) e[i] = Real(bath.energies[i]);
  std::vector<std::vector<Real>> Q;
  Q.reserve(n_sites);
  {
    std::vector<Real> q(P);
    Real norm = 0;
    for (std::size_t i = 0; i < P; ++i) {
      q[i] = sqrt(Real(bath.weights[i]));
      norm += q[i] * q[i];
    }
    norm = sqrt(norm);
    for (auto& x : q) x /= norm;
    Q.push_back(std::move(q));
  }
  auto dot = [P](const std::vector<Real>& a, const std::vector<Real>& b) {
    Real c = 0;
    for (std::size_t i = 0; i < P; ++i) c += a[i] * b[i];
    return c;
  };

  const bool sym = bath.symmetric();
  WilsonChain out;
  out.lambda = bath.lambda;
  out.dos_ref = bath.dos_ref;
  out.D = bath.D;
  out.center_weight = bath.center_weight;
  out.dropped_intervals = bath.dropped_intervals;

  Real beta_prev = 0;
  for (std::size_t n = 0; n < n_sites; ++n) {
    const auto& q = Q[n];
    Real alpha = 0;
    for (std::size_t i = 0; i < P; ++i) alpha += e[i] * q[i] * q[i];
    out.eps.push_back(sym ? 0.0 : static_cast<double>(alpha));
    if (n + 1 == n_sites) break;

    std::vector<Real> v(P);
    for (std::size_t i = 0; i < P; ++i) {
      v[i] = (e[i] - alpha) * q[i];
      if (n > 0) v[i] -= beta_prev * Q[n - 1][i];
    }
    if (full_reorth) {
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& qj : Q) {
          const Real c = dot(qj, v);
          for (std::size_t i = 0; i < P; ++i) v[i] -= c * qj[i];
        }
      }
    }
    Real beta = sqrt(dot(v, v));
    if (beta == 0) throw ValidationError("Krylov space exhausted at site " + std::to_string(n + 1));
    for (auto& x : v) x /= beta;
    Real worst = 0;
    for (const auto& qj : Q) worst = std::max<Real>(worst, abs(dot(qj, v)));
    if (worst > Real(orth_tol)) {
      std::ostringstream msg;
      msg << "Lanczos lost orthogonality at site " << n + 1 << " (overlap " << static_cast<double>(worst)
          << "); enable reorthogonalization or use wider floating point";
      throw PrecisionError(msg.str());
    }
    out.t.push_back(static_cast<double>(beta));
    beta_prev = beta;
    Q.push_back(std::move(v));
  }
  return out;
}

} // namespace thermo
