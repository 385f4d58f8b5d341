#include <cmath>

#include <gtest/gtest.h>

#include "../oracles/free_fermion.hpp"
#include "thermo/bath/discretize.hpp"
#include "thermo/ising/ising_exact.hpp"
#include "thermo/meanfield/meanfield.hpp"

using namespace thermo;

namespace {

std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(std::pow(10.0, a + (b - a) * i / (n - 1)));
  return v;
}

// Discrete bath seen from the end site of an open chain of n sites.
DiscreteBath chain_bath(int n, double t) {
  const auto ob = oracle::OneBody::chain(n, t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ob.h);
  DiscreteBath b;
  for (int i = 0; i < n; ++i) {
    b.energies.push_back(es.eigenvalues()[i]);
    b.weights.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return b;
}

} // namespace

TEST(IsingExact, ZeroBathFieldIsFreeSpinForEveryDos) {
  for (const auto& d : {DosSpec::flat(), DosSpec::nanowire(), DosSpec::gaussian(), DosSpec::graphene(), DosSpec::tbg()}) {
    const IsingSolver s(d);
    for (double Jz : {0.1, 1.0, 3.0})
      for (double B : {1e-3, 0.1, 2.0})
        for (double T : {1e-3, 0.05, 1.0, 20.0})
          EXPECT_NEAR(s.magnetization({Jz, B, 0.0, T, d}), free_spin_magnetization(B, T), 1e-10) << d.id();
  }
}

TEST(IsingExact, WideFlatBandApproachesFreeSpinWithoutShortcut) {
  // Through the bath shifts the residual is the O(Jz B / D) bath
  // polarization; the solver returns the free-spin law once D exceeds every
  // other scale by the wide-band ratio.
  auto dev = [](double D, double B, double T) {
    const IsingSolver s(DosSpec::flat(D));
    const IsingParams p{0.1, B, B, T, DosSpec::flat(D)};
    double phi = -B / T;
    for (double sg : {0.5, -0.5})
      phi += s.ln_z_shift(boundary_potential(p, {0.5, sg}), T) - s.ln_z_shift(boundary_potential(p, {-0.5, sg}), T);
    EXPECT_TRUE(s.free_spin_limit(p));
    EXPECT_EQ(s.magnetization(p), free_spin_magnetization(B, T));
    return 0.5 * std::tanh(0.5 * phi) - free_spin_magnetization(B, T);
  };
  for (double B : {0.3, 1.0})
    for (double T : {0.1, 0.4, 1.0}) {
      const double d6 = dev(1e6, B, T), d7 = dev(1e7, B, T);
      EXPECT_LT(std::abs(d6), 0.1 * B / 1e6);
      EXPECT_NEAR(d6 / d7, 10.0, 0.1) << "B=" << B << " T=" << T;
    }
  const IsingSolver narrow(DosSpec::flat(1e5));
  EXPECT_FALSE(narrow.free_spin_limit({0.1, 1.0, 1.0, 0.5, DosSpec::flat(1e5)}));
  const IsingSolver hot(DosSpec::flat(1e6));
  EXPECT_FALSE(hot.free_spin_limit({0.1, 1.0, 1.0, 1e4, DosSpec::flat(1e6)}));
}

TEST(IsingExact, DiscreteBathMatchesFreeFermionTrace) {
  const auto B = logspace(-2, 0.5, 10), T = logspace(-2, 0.5, 10);
  for (const auto& d : {DosSpec::flat(), DosSpec::nanowire()}) {
    const auto bath = discretize_log(d, 2.0, 8);
    ASSERT_LE(bath.size(), 16u);
    const IsingSolver s(bath);
    const auto ob = oracle::OneBody::star(bath.energies, bath.weights);
    for (double Jz : {0.1, 0.7})
      for (double b : B)
        for (double t : T)
          EXPECT_NEAR(s.magnetization({Jz, b, b, t, d}), oracle::ising_magnetization(ob, Jz, b, b, t), 1e-8)
              << d.id() << " Jz=" << Jz << " B=" << b << " T=" << t;
  }
}

TEST(IsingExact, TightBindingChainMatchesFreeFermionTrace) {
  const int n = 16;
  const double t = 0.5;
  const IsingSolver s(chain_bath(n, t));
  const auto ob = oracle::OneBody::chain(n, t);
  for (double Jz : {0.2, 1.5})
    for (double b : logspace(-2, 0.5, 10))
      for (double T : logspace(-2, 0.5, 10))
        EXPECT_NEAR(s.magnetization({Jz, 0.7 * b, b, T, DosSpec::nanowire()}),
                    oracle::ising_magnetization(ob, Jz, 0.7 * b, b, T), 1e-8)
            << "Jz=" << Jz << " B=" << b << " T=" << T;
}

TEST(IsingExact, TemperatureDerivativeMatchesFiniteDifference) {
  const IsingSolver s(DosSpec::nanowire());
  for (double T : {0.02, 0.1, 0.5}) {
    const IsingParams p{0.3, 0.05, 0.05, T, DosSpec::nanowire()};
    auto at = [&](double t) { auto q = p; q.T = t; return s.magnetization(q); };
    const double h = 1e-4 * T;
    EXPECT_NEAR(s.dm_dT(p), (at(T + h) - at(T - h)) / (2 * h), 1e-6 * std::abs(s.dm_dT(p)) + 1e-9);
    const double m = s.magnetization(p);
    EXPECT_NEAR(s.qfi(p), s.dm_dT(p) * s.dm_dT(p) / (0.25 - m * m), 1e-10 * s.qfi(p));
  }
}

TEST(IsingExact, AntisymmetricInField) {
  for (const auto& d : {DosSpec::flat(), DosSpec::nanowire(), DosSpec::gaussian(), DosSpec::graphene()}) {
    const IsingSolver s(d);
    for (double B : {0.01, 0.3, 2.0})
      for (double T : {0.01, 0.2, 3.0}) {
        const double mp = s.magnetization(IsingParams::common_field(0.4, B, T, d));
        const double mm = s.magnetization(IsingParams::common_field(0.4, -B, T, d));
        EXPECT_NEAR(mp, -mm, 1e-10) << d.id();
      }
  }
}

TEST(IsingExact, NonIncreasingInImpurityField) {
  const IsingSolver s(DosSpec::flat());
  for (double T : {0.01, 0.1, 1.0}) {
    double prev = 1.0;
    for (double BI = -1.0; BI <= 1.0; BI += 0.05) {
      const double m = s.magnetization({0.5, BI, 0.2, T, DosSpec::flat()});
      EXPECT_LE(m, prev + 1e-13);
      prev = m;
    }
  }
}

TEST(IsingExact, HighTemperatureLimitAgreesWithMeanField) {
  const auto d = DosSpec::flat();
  const IsingSolver s(d);
  const MeanFieldSolver mf(d);
  const double B = 0.2;
  double prev_dev = INFINITY;
  for (double T : {10.0, 100.0, 1000.0}) {
    const auto p = IsingParams::common_field(0.5, B, T, d);
    const double m = s.magnetization(p);
    const double lead = std::abs(4 * T * m / B + 1.0);
    EXPECT_LT(lead, 1.0 / T);
    const double dev = std::abs(m - mf.solve(p).m_imp) * T * T;
    EXPECT_LT(dev, prev_dev * 1.5);
    EXPECT_LT(std::abs(m - mf.solve(p).m_imp), 1e-2 * std::abs(m) / T);
    prev_dev = dev;
  }
}

TEST(IsingExact, PeakSensitivityNeverExceedsBound) {
  for (const auto& d : {DosSpec::flat(), DosSpec::nanowire()}) {
    const IsingSolver s(d);
    double qmax = 0;
    for (double Jz : {0.05, 0.3, 1.0})
      for (double B : {0.01, 0.3, 3.0})
        for (double T : logspace(-3, 1, 60)) {
          const double q = T * std::sqrt(s.qfi(IsingParams::common_field(Jz, B, T, d)));
          qmax = std::max(qmax, q);
        }
    EXPECT_LT(qmax, 0.665) << d.id();
    EXPECT_GT(qmax, 0.6) << d.id();
  }
}

TEST(IsingExact, RejectsNonPositiveTemperature) {
  const IsingSolver s(DosSpec::flat());
  EXPECT_THROW(s.magnetization({0.1, 0.1, 0.1, 0.0, DosSpec::flat()}), ValidationError);
  EXPECT_THROW(s.magnetization({0.1, 0.1, 0.1, -1.0, DosSpec::flat()}), ValidationError);
}
