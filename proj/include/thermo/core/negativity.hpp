#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "thermo/core/errors.hpp"

namespace thermo {

// rho^{T_A} for a bipartite density matrix on dA x dB, index a*dB + b,
// transposing the first factor.
inline Eigen::MatrixXd partial_transpose_first(const Eigen::MatrixXd& rho, int dA, int dB) {
  if (rho.rows() != dA * dB || rho.cols() != dA * dB) throw ValidationError("density matrix dimension mismatch");
  Eigen::MatrixXd out(dA * dB, dA * dB);
  for (int a = 0; a < dA; ++a)
    for (int b = 0; b < dB; ++b)
      for (int a2 = 0; a2 < dA; ++a2)
        for (int b2 = 0; b2 < dB; ++b2) out(a * dB + b, a2 * dB + b2) = rho(a2 * dB + b, a * dB + b2);
  return out;
}

// (||rho^{T_A}||_1 - 1)/2, i.e. the summed magnitude of negative eigenvalues.
inline double negativity(const Eigen::MatrixXd& rho, int dA, int dB, double trace_tol = 1e-6) {
  const double tr = rho.trace();
  if (std::abs(tr - 1.0) > trace_tol) throw IntegrityError("density matrix trace deviates from 1");
  const Eigen::MatrixXd pt = partial_transpose_first(0.5 * (rho + rho.transpose()), dA, dB);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pt, Eigen::EigenvaluesOnly);
  double n = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) n += std::max(0.0, -es.eigenvalues()[i]);
  return n;
}

} // namespace thermo
