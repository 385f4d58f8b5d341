#pragma once

// Brute-force oracles built from explicit Jordan-Wigner matrices. Nothing here
// shares code with the library solvers.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat kron(const Mat& a, const Mat& b) {
  Mat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

// Annihilators of `modes` fermionic modes; mode 0 is the most significant bit.
struct Fock {
  int modes;
  std::vector<Mat> c;

  explicit Fock(int m) : modes(m), c(m) {
    Mat a(2, 2), z(2, 2), id = Mat::Identity(2, 2);
    a << 0, 1, 0, 0;
    z << 1, 0, 0, -1;
    for (int k = 0; k < m; ++k) {
      Mat op = Mat::Identity(1, 1);
      for (int j = 0; j < m; ++j) op = kron(op, j < k ? z : (j == k ? a : id));
      c[k] = op;
    }
  }
  int dim() const { return 1 << modes; }
  Mat cd(int k) const { return c[k].transpose(); }
  Mat n(int k) const { return cd(k) * c[k]; }
};

// Spin-1/2 impurity coupled to site 0 of an open chain of L sites with modes
// 2i (up) and 2i+1 (down):
//   J S_I.s_0 + B (S_I^z + s_0^z) + sum_i eps_i n_i + sum_i t_i (c+_i c_{i+1} + h.c.)
// Full space: impurity (up, down) x Fock.
struct ImpurityChain {
  int L;
  Fock f;
  Mat H;

  ImpurityChain(double J, double B, const std::vector<double>& t, const std::vector<double>& eps, int L_)
      : L(L_), f(2 * L_) {
    Mat Sz(2, 2), Sp(2, 2), I2 = Mat::Identity(2, 2), IF = Mat::Identity(f.dim(), f.dim());
    Sz << 0.5, 0, 0, -0.5;
    Sp << 0, 1, 0, 0;
    const Mat Sm = Sp.transpose();
    const Mat sz = 0.5 * (f.n(0) - f.n(1)), sp = f.cd(0) * f.c[1], sm = f.cd(1) * f.c[0];
    H = J * (kron(Sz, sz) + 0.5 * (kron(Sp, sm) + kron(Sm, sp))) + B * (kron(Sz, IF) + kron(I2, sz));
    for (int i = 0; i < L; ++i) {
      H += eps[i] * kron(I2, f.n(2 * i) + f.n(2 * i + 1));
      if (i + 1 < L)
        for (int s = 0; s < 2; ++s) {
          const Mat h = f.cd(2 * i + s) * f.c[2 * i + 2 + s];
          H += t[i] * kron(I2, h + Mat(h.transpose()));
        }
    }
  }

  int dim() const { return static_cast<int>(H.rows()); }
  Mat impurity_sz() const {
    Mat Sz(2, 2);
    Sz << 0.5, 0, 0, -0.5;
    return kron(Sz, Mat::Identity(f.dim(), f.dim()));
  }
  // Operator acting on the fermions only.
  Mat lift(const Mat& op) const { return kron(Mat::Identity(2, 2), op); }
};

struct Thermal {
  Vec E;
  Mat V;
  explicit Thermal(const Mat& H) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    E = es.eigenvalues();
    V = es.eigenvectors();
  }
  Mat rho(double T) const {
    const Vec w = (-(E.array() - E[0]) / T).exp();
    return V * w.asDiagonal() * V.transpose() / w.sum();
  }
  double lnZ(double T) const { return std::log((-(E.array() - E[0]) / T).exp().sum()) - E[0] / T; }
  double expect(const Mat& op, double T) const { return (rho(T) * op).trace(); }
};

// Reduced density matrix of impurity x site 0 in the basis 4 i + s, with the
// site states 0 empty, 1 up, 2 down, 3 up-down (= c+_up c+_down |0>).
inline Mat impurity_site0_rdm(const ImpurityChain& sys, const Mat& rho) {
  const int M = sys.f.modes, dF = sys.f.dim(), rest = 1 << (M - 2);
  auto sidx = [](int up, int dn) { return up && dn ? 3 : (up ? 1 : (dn ? 2 : 0)); };
  Mat r = Mat::Zero(8, 8);
  for (int i = 0; i < 2; ++i)
    for (int b = 0; b < 4; ++b)
      for (int i2 = 0; i2 < 2; ++i2)
        for (int b2 = 0; b2 < 4; ++b2)
          for (int k = 0; k < rest; ++k) {
            const int u = b >> 1 & 1, d = b & 1, u2 = b2 >> 1 & 1, d2 = b2 & 1;
            const int f1 = (u << (M - 1)) | (d << (M - 2)) | k;
            const int f2 = (u2 << (M - 1)) | (d2 << (M - 2)) | k;
            r(4 * i + sidx(u, d), 4 * i2 + sidx(u2, d2)) += rho(i * dF + f1, i2 * dF + f2);
          }
  return r;
}

// Negativity from the partial transpose on the first factor, computed
// independently of the library helper.
inline double negativity(const Mat& rho, int dA, int dB) {
  Mat pt(dA * dB, dA * dB);
  for (int a = 0; a < dA; ++a)
    for (int a2 = 0; a2 < dA; ++a2)
      for (int b = 0; b < dB; ++b)
        for (int b2 = 0; b2 < dB; ++b2) pt(a2 * dB + b, a * dB + b2) = rho(a * dB + b, a2 * dB + b2);
  Eigen::SelfAdjointEigenSolver<Mat> es(pt);
  return 0.5 * (es.eigenvalues().cwiseAbs().sum() - 1.0);
}

} // namespace oracle
