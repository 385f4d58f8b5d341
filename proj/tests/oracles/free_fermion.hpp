#pragma once

// Sector-decoupled free-fermion traces for the Ising impurity: for fixed
// S_I^z the bath is quadratic, so ln Z is a sum over single-particle levels of
// a dense one-body Hamiltonian.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double ln_one_plus_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// One-body bath Hamiltonian with a designated local orbital: the local
// potential V acts on |local><local|.
struct OneBody {
  Eigen::MatrixXd h;
  Eigen::VectorXd local;

  // Star geometry: levels e_i, local orbital sum_i sqrt(w_i) |i>.
  static OneBody star(const std::vector<double>& e, const std::vector<double>& w) {
    OneBody o;
    const int n = static_cast<int>(e.size());
    o.h = Eigen::MatrixXd::Zero(n, n);
    o.local.resize(n);
    for (int i = 0; i < n; ++i) {
      o.h(i, i) = e[i];
      o.local[i] = std::sqrt(w[i]);
    }
    return o;
  }

  // Open tight-binding chain of n sites with hopping t; the local orbital is
  // the end site.
  static OneBody chain(int n, double t) {
    OneBody o;
    o.h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) o.h(i, i + 1) = o.h(i + 1, i) = t;
    o.local = Eigen::VectorXd::Unit(n, 0);
    return o;
  }

  double ln_z(double V, double T) const {
    const Eigen::MatrixXd hv = h + V * local * local.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hv, Eigen::EigenvaluesOnly);
    double s = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) s += ln_one_plus_exp(-es.eigenvalues()[i] / T);
    return s;
  }
};

// <S_I^z> for B_I S_I^z + (B_0 + Jz S_I^z) s_0^z + H_bath.
inline double ising_magnetization(const OneBody& bath, double Jz, double B_I, double B_0, double T) {
  double lw[2];
  const double Sz[2] = {0.5, -0.5};
  for (int k = 0; k < 2; ++k) {
    const double v = B_0 + Jz * Sz[k];
    lw[k] = -B_I * Sz[k] / T + bath.ln_z(0.5 * v, T) + bath.ln_z(-0.5 * v, T);
  }
  return 0.5 * std::tanh(0.5 * (lw[0] - lw[1]));
}

} // namespace oracle
