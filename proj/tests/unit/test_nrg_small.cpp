#include <cmath>

#include <gtest/gtest.h>

#include "../oracles/fermion_ed.hpp"
#include "thermo/nrg/nrg.hpp"

using namespace thermo;
using oracle::Mat;

namespace {

nrg::NrgParams small_params(int L, double J, double B, std::vector<double> eps) {
  nrg::NrgParams p;
  p.J = J;
  p.B = B;
  p.chain = nrg::chain_for<double>(DosSpec::flat(), 2.5, L + 2);
  for (int i = 0; i < L; ++i) p.chain.eps[i] = eps[i];
  p.N_s = 0;
  p.N_max = L;
  p.reference = false;
  return p;
}

oracle::ImpurityChain brute(const nrg::NrgParams& p) {
  const int L = p.sites();
  return oracle::ImpurityChain(p.J, p.B, std::vector<double>(p.chain.t.begin(), p.chain.t.begin() + L - 1),
                               std::vector<double>(p.chain.eps.begin(), p.chain.eps.begin() + L), L);
}

// Dense operators of an untruncated shell in its own eigenbasis.
struct Dense {
  Mat H, Sz;
  Mat F[2];
  explicit Dense(const nrg::ShellSpectrum& sh) {
    std::map<nrg::Sector, int> off;
    int n = 0;
    for (auto& [k, b] : sh.sectors) {
      off[k] = n;
      n += b.kept;
    }
    H = Mat::Zero(n, n);
    Sz = Mat::Zero(n, n);
    for (auto& [k, b] : sh.sectors) {
      for (int i = 0; i < b.kept; ++i) H(off[k] + i, off[k] + i) = sh.scale * b.E[i] + sh.offset;
      Sz.block(off[k], off[k], b.kept, b.kept) = sh.ops[nrg::kSz].at(k);
    }
    for (int s = 0; s < 2; ++s) {
      F[s] = Mat::Zero(n, n);
      for (auto& [src, A] : sh.fdag[s]) {
        const nrg::Sector dst{src.Q + 1, src.Sz2 + nrg::site::spin_sz2[s]};
        F[s].block(off[dst], off[src], A.rows(), A.cols()) = A;
      }
    }
  }
};

Eigen::VectorXd spectrum(const Mat& A) { return Eigen::SelfAdjointEigenSolver<Mat>(A, Eigen::EigenvaluesOnly).eigenvalues(); }

} // namespace

TEST(NrgSmall, ThreeShellSpectrumAndMagnetizationMatchBruteForce) {
  const auto p = small_params(3, 0.7, 0.13, {0.05, -0.1, 0.07});
  const auto run = nrg::run_nrg(p);
  const auto sys = brute(p);
  const oracle::Thermal th(sys.H);
  const auto e = run.shells.back().physical_energies();
  ASSERT_EQ(static_cast<int>(e.size()), 2 * 64);
  for (int i = 0; i < th.E.size(); ++i) EXPECT_NEAR(e[i], th.E[i], 1e-9);
  for (double T : {1e-3, 1e-2, 0.1, 1.0, 10.0})
    EXPECT_NEAR(nrg::shell_thermo(run.shells.back(), T).m, th.expect(sys.impurity_sz(), T), 1e-9) << T;
}

TEST(NrgSmall, FourSiteMagnetizationMatchesThermalTrace) {
  for (auto [J, B] : {std::pair{0.3, 0.0}, std::pair{0.45, 0.02}, std::pair{1.2, -0.3}}) {
    const auto p = small_params(4, J, B, {0.0, 0.02, -0.03, 0.01});
    const auto run = nrg::run_nrg(p);
    const auto sys = brute(p);
    const oracle::Thermal th(sys.H);
    const Mat sz = sys.impurity_sz();
    for (int k = 0; k < 13; ++k) {
      const double T = std::pow(10.0, -3.0 + 4.0 * k / 12.0);
      EXPECT_NEAR(nrg::shell_thermo(run.shells.back(), T).m, th.expect(sz, T), 1e-9) << "J=" << J << " T=" << T;
    }
  }
}

TEST(NrgSmall, LocalDensityMatrixForwardAndBackward) {
  auto p = small_params(3, 0.9, 0.2, {0.03, -0.05, 0.02});
  p.track_rdm = true;
  p.store_bases = true;
  const auto run = nrg::run_nrg(p);
  const auto sys = brute(p);
  const oracle::Thermal th(sys.H);
  for (double T : {1e-3, 0.05, 1.0}) {
    const Mat r8 = oracle::impurity_site0_rdm(sys, th.rho(T));
    const Mat fwd = nrg::local_rdm_from_ops(nrg::shell_thermo(run.shells.back(), T).ops);
    const Mat bwd = nrg::local_rdm_backward(run, 2, T);
    EXPECT_LT((fwd - r8).cwiseAbs().maxCoeff(), 1e-10) << T;
    EXPECT_LT((bwd - r8).cwiseAbs().maxCoeff(), 1e-10) << T;
    EXPECT_NEAR(negativity(fwd, 2, 4), oracle::negativity(r8, 2, 4), 1e-10);
  }
}

TEST(NrgSmall, NewSiteOperatorsAreCanonicalFermions) {
  const auto p = small_params(3, 0.7, 0.13, {0.05, -0.1, 0.07});
  const auto run = nrg::run_nrg(p);
  const Dense d(run.shells.back());
  const int n = static_cast<int>(d.H.rows());
  const Mat I = Mat::Identity(n, n);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const Mat fa = d.F[a].transpose(), fbd = d.F[b];
      const Mat acomm = fa * fbd + fbd * fa;
      EXPECT_LT((acomm - (a == b ? I : Mat::Zero(n, n))).cwiseAbs().maxCoeff(), 1e-12);
      const Mat cc = d.F[a] * d.F[b] + d.F[b] * d.F[a];
      EXPECT_LT(cc.cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(NrgSmall, NewSiteOperatorsAreUnitarilyEquivalentToJordanWigner) {
  const auto p = small_params(3, 0.7, 0.13, {0.05, -0.1, 0.07});
  const auto run = nrg::run_nrg(p);
  const Dense d(run.shells.back());
  const auto sys = brute(p);
  const Mat cu = sys.lift(sys.f.cd(4)), cdn = sys.lift(sys.f.cd(5));
  // Spectra of Hermitian combinations are basis independent; a wrong
  // fermionic sign or spin assignment changes them.
  for (auto [g1, g2, h] : {std::tuple{0.31, 0.0, 0.0}, std::tuple{0.0, 0.27, 0.0}, std::tuple{0.19, 0.23, 0.4},
                           std::tuple{0.4, -0.17, -0.2}}) {
    const Mat A = d.H + g1 * (d.F[0] + Mat(d.F[0].transpose())) + g2 * (d.F[1] + Mat(d.F[1].transpose())) +
                  h * d.Sz + 0.37 * (d.F[0] * d.F[1] + Mat((d.F[0] * d.F[1]).transpose()));
    const Mat B = sys.H + g1 * (cu + Mat(cu.transpose())) + g2 * (cdn + Mat(cdn.transpose())) +
                  h * sys.impurity_sz() + 0.37 * (cu * cdn + Mat((cu * cdn).transpose()));
    EXPECT_LT((spectrum(A) - spectrum(B)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(NrgShell, InvariantsOnTruncatedRun) {
  nrg::NrgParams p;
  p.J = 0.3;
  p.B = 1e-4;
  p.chain = nrg::chain_for<double>(DosSpec::flat(), 2.5, 24);
  p.N_s = 200;
  p.interleave = true;
  p.store_bases = true;
  const auto run = nrg::run_nrg(p);
  for (const auto& sh : run.shells) {
    double emin = INFINITY;
    for (const auto& [k, b] : sh.sectors) {
      for (int i = 1; i < b.E.size(); ++i) EXPECT_LE(b.E[i - 1], b.E[i]);
      if (b.E.size()) emin = std::min(emin, b.E[0]);
      if (b.kept == 0) continue;
      const Mat& s = sh.ops[nrg::kSz].at(k);
      EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      const auto ev = spectrum(s);
      EXPECT_GE(ev.minCoeff(), -0.5 - 1e-10);
      EXPECT_LE(ev.maxCoeff(), 0.5 + 1e-10);
    }
    EXPECT_EQ(emin, 0.0);
  }
  const auto c = nrg::thermodynamics(run);
  for (std::size_t i = 1; i < c.rows.size(); ++i) EXPECT_LT(c.rows[i].T, c.rows[i - 1].T);
  for (const auto& r : c.rows) {
    EXPECT_LE(std::abs(r.m_imp), 0.5);
    EXPECT_GE(r.qfi, 0.0);
  }
}

TEST(NrgShell, ScaleAndSiteCount) {
  EXPECT_DOUBLE_EQ(nrg::shell_scale(1, 2.0), 0.75);
  EXPECT_NEAR(nrg::shell_scale(3, 4.0), 0.5 * 1.25 / 4.0, 1e-15);
  const int N = nrg::sites_for_temperature(1e-6, 2.5);
  EXPECT_LT(nrg::shell_scale(N - 1, 2.5) / 0.7, 1e-6);
  EXPECT_GE(nrg::shell_scale(N - 2, 2.5) / 0.7, 1e-6);
}

TEST(NrgShell, ParameterValidation) {
  nrg::NrgParams p;
  p.chain = nrg::chain_for<double>(DosSpec::flat(), 2.5, 6);
  p.N_s = 50;
  EXPECT_THROW(nrg::run_nrg(p), ValidationError);
  p.N_s = 200;
  p.beta_bar = 2.0;
  EXPECT_THROW(nrg::run_nrg(p), ValidationError);
  p.beta_bar = 0.7;
  p.N_max = 10;
  EXPECT_THROW(nrg::run_nrg(p), ValidationError);
}

TEST(NrgShell, RdmQueriesNeedTracking) {
  auto p = small_params(2, 0.5, 0.1, {0.0, 0.0});
  const auto run = nrg::run_nrg(p);
  EXPECT_THROW(nrg::local_rdm(run, 0.1), ValidationError);
  EXPECT_THROW(nrg::local_rdm_backward(run, 1, 0.1), ValidationError);
}
