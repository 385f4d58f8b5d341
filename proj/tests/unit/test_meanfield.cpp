#include <cmath>

#include <gtest/gtest.h>

#include "../oracles/free_fermion.hpp"
#include "thermo/bath/discretize.hpp"
#include "thermo/ising/ising_exact.hpp"
#include "thermo/meanfield/meanfield.hpp"

using namespace thermo;

TEST(MeanField, FixedPointReproducesItself) {
  for (const auto& d : {DosSpec::flat(), DosSpec::nanowire(), DosSpec::gaussian()}) {
    const MeanFieldSolver mf(d);
    for (double Jz : {0.05, 0.5, 2.0})
      for (double T : {0.01, 0.2, 2.0}) {
        const auto p = IsingParams::common_field(Jz, 0.1, T, d);
        const auto st = mf.solve(p, 1e-12);
        const auto again = mf.map(p, st.m_imp, st.m_bath);
        EXPECT_NEAR(again[0], st.m_imp, 1e-10) << d.id();
        EXPECT_NEAR(again[1], st.m_bath, 1e-10) << d.id();
        EXPECT_LE(std::abs(st.m_imp), 0.5);
        EXPECT_LE(std::abs(st.m_bath), 0.5);
        EXPECT_LE(st.residual, 1e-12);
      }
  }
}

TEST(MeanField, ImpurityFollowsFreeSpinLawInEffectiveField) {
  const MeanFieldSolver mf(DosSpec::flat());
  for (double T : {0.03, 0.3}) {
    const auto p = IsingParams::common_field(0.4, 0.2, T);
    const auto st = mf.solve(p);
    EXPECT_DOUBLE_EQ(st.B_I_eff, p.B_I + p.Jz * st.m_bath);
    EXPECT_NEAR(st.m_imp, free_spin_magnetization(st.B_I_eff, T), 1e-12);
  }
}

TEST(MeanField, DeviationFromExactIsSecondOrderInCoupling) {
  const auto d = DosSpec::flat();
  const MeanFieldSolver mf(d);
  const IsingSolver ex(d);
  const double B = 0.05, T = 0.05;
  std::vector<double> lx, ly;
  for (double Jz : {0.0125, 0.025, 0.05, 0.1}) {
    const auto p = IsingParams::common_field(Jz, B, T, d);
    lx.push_back(std::log(Jz));
    ly.push_back(std::log(std::abs(mf.solve(p).m_imp - ex.magnetization(p))));
  }
  const int n = static_cast<int>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, 2.0, 0.15);
}

TEST(MeanField, DiscreteBathOccupationMatchesOneBodyTrace) {
  const auto bath = discretize_log(DosSpec::nanowire(), 2.0, 6);
  const MeanFieldSolver mf(bath);
  const auto ob = oracle::OneBody::star(bath.energies, bath.weights);
  for (double V : {-0.3, 0.0, 0.2})
    for (double T : {0.01, 0.1, 1.0}) {
      const Eigen::MatrixXd hv = ob.h + V * ob.local * ob.local.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hv);
      double n = 0;
      for (int k = 0; k < es.eigenvalues().size(); ++k) {
        const double a = es.eigenvectors().col(k).dot(ob.local);
        n += a * a / (1.0 + std::exp(es.eigenvalues()[k] / T));
      }
      EXPECT_NEAR(mf.occupancy(V, T, 1.0), n, 1e-10) << "V=" << V << " T=" << T;
    }
}

TEST(MeanField, ZeroCouplingIsFreeSpin) {
  const MeanFieldSolver mf(DosSpec::flat());
  const auto st = mf.solve(IsingParams::common_field(0.0, 0.2, 0.1));
  EXPECT_DOUBLE_EQ(st.m_imp, free_spin_magnetization(0.2, 0.1));
}

TEST(MeanField, ContinuumOccupancyIsBoundedAndDecreasingInPotential) {
  for (const auto& d : {DosSpec::flat(), DosSpec::nanowire(), DosSpec::gaussian(), DosSpec::graphene()}) {
    const BathGreens g(d);
    for (double T : {0.01, 0.3, 3.0}) {
      double prev = 1.0 + 1e-9;
      for (double V = -2.0; V <= 2.0; V += 0.25) {
        const double n = bath_occupancy(g, V, T, 1.0);
        EXPECT_GE(n, -1e-9) << d.id() << " V=" << V << " T=" << T;
        EXPECT_LE(n, prev + 1e-9) << d.id() << " V=" << V << " T=" << T;
        prev = n;
      }
    }
    EXPECT_NEAR(bath_occupancy(g, 0.0, 0.2, 1.0), 0.5, 1e-9) << d.id();
  }
}
