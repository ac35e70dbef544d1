#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "gpmpc/chiller/ridge.hpp"

using namespace gpmpc::chiller;

namespace {

// Written out term by term with std::pow, independent of the Horner/monomial code.
double surface_oracle(double T, double Th) {
  return -3.15 * T - 3.03e-2 * Th + 1.73e-1 * std::pow(T, 2) - 1.56e-3 * T * Th + 3.09e-4 * std::pow(Th, 2) -
         2.75e-3 * std::pow(T, 3) + 4.90e-4 * std::pow(T, 2) * Th - 6.86e-5 * T * std::pow(Th, 2) +
         2.56e-6 * std::pow(Th, 3) + 20.22;
}

double cop_oracle(double Q) {
  return 3.30e-7 * std::pow(Q, 4) - 2.69e-5 * std::pow(Q, 3) - 2.67e-3 * std::pow(Q, 2) + 2.34e-1 * Q - 4.45e-4;
}

std::vector<ChillerSample> cubic_samples(const PolySurface2& truth, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uT(15.0, 40.0), uTh(0.0, 270.0);
  std::vector<ChillerSample> s;
  for (int i = 0; i < n; ++i) {
    const double T = uT(rng), Th = uTh(rng);
    s.push_back({T, Th, truth(T, Th)});
  }
  return s;
}

}  // namespace

TEST(Chiller, ReferenceConstantsAreExact) {
  EXPECT_EQ(thermal_power(PolySurface2::reference(), 0.0, 0.0), 20.22);
  const auto c = cop(PolyCurve1::reference(), 0.0);
  EXPECT_EQ(c.raw, -4.45e-4);
  EXPECT_TRUE(c.clamped);
  EXPECT_EQ(c.value, 0.1);
}

TEST(Chiller, SurfaceMatchesTermwiseOracle) {
  const auto p = PolySurface2::reference();
  EXPECT_NEAR(thermal_power(p, 30.0, 270.0), surface_oracle(30.0, 270.0), 1e-10);
  for (double T = 10.0; T <= 40.0; T += 2.5)
    for (double Th = 0.0; Th <= 540.0; Th += 30.0) EXPECT_NEAR(p(T, Th), surface_oracle(T, Th), 1e-9);
}

TEST(Chiller, ZeroCoefficientsGiveZero) {
  PolySurface2 z;
  EXPECT_EQ(thermal_power(z, 31.0, 123.0), 0.0);
  PolyCurve1 c{{0, 0, 0, 0, 1.0}};
  EXPECT_EQ(electrical_power(z, c, 25.0, 90.0).electrical, 0.0);
}

TEST(Chiller, CopMatchesOracleAndIsConcaveOnOperatingRange) {
  const auto c = PolyCurve1::reference();
  EXPECT_NEAR(cop(c, 40.0).value, cop_oracle(40.0), 1e-12);
  for (double q = 10.0; q <= 60.0; q += 1.0)
    EXPECT_LE(cop_oracle(q + 1.0) - 2.0 * cop_oracle(q) + cop_oracle(q - 1.0), 0.0) << "Q=" << q;
  EXPECT_TRUE(c.concave_on(10.0, 60.0));
  for (double q = 10.0; q <= 40.0; q += 1.0) {
    EXPECT_GT(cop(c, q).value, 1.4);
    EXPECT_LT(cop(c, q).value, 4.6);
  }
}

TEST(Chiller, ElectricalPowerIsCompositionOnGrid) {
  const auto p = PolySurface2::reference();
  const auto c = PolyCurve1::reference();
  for (double T = 15.0; T <= 40.0; T += 5.0)
    for (double Th = 0.0; Th <= 270.0; Th += 15.0) {
      const auto e = electrical_power(p, c, T, Th);
      const double q = surface_oracle(T, Th);
      const double k = std::max(cop_oracle(q), 0.1);
      EXPECT_NEAR(e.electrical, q / k, 1e-9 * std::max(1.0, std::abs(q / k)));
    }
  const double q = surface_oracle(30.0, 270.0);
  EXPECT_NEAR(electrical_power(p, c, 30.0, 270.0).electrical, q / cop_oracle(q), 1e-9);
}

TEST(Chiller, PowerDerivativeMatchesFiniteDifference) {
  const ChillerModel m;
  for (double T : {15.0, 25.0, 35.0})
    for (double Th = 5.0; Th <= 265.0; Th += 20.0) {
      const double h = 1e-5;
      const double fd = (m.power(T, Th + h).electrical - m.power(T, Th - h).electrical) / (2 * h);
      EXPECT_NEAR(m.power(T, Th).d_theta, fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Chiller, HotDayShapeIsRecorded) {
  // Ordering at T_out = 35 is recorded, not asserted against a figure.
  const ChillerModel m;
  const double e300 = m.power(35.0, 300.0).electrical, e540 = m.power(35.0, 540.0).electrical;
  RecordProperty("E_35_300", std::to_string(e300));
  RecordProperty("E_35_540", std::to_string(e540));
  EXPECT_TRUE(std::isfinite(e300) && std::isfinite(e540));
}

TEST(Ridge, RecoversExactCubic) {
  std::mt19937_64 rng(7);
  PolySurface2 truth{{-1.0, 0.05, 0.02, -3e-4, 2e-4, -1e-4, 3e-6, -2e-7, 1e-7, 4.0}};
  const auto s = cubic_samples(truth, 200, rng);
  const auto fit = fit_ridge(s, 3, 0.0);
  for (int j = 0; j < 10; ++j) EXPECT_NEAR(fit.surface.coeffs[j], truth.coeffs[j], 1e-6) << j;
  EXPECT_LT(fit.residual_norm, 1e-8);
}

TEST(Ridge, LargePenaltyLeavesOnlyTheMean) {
  std::mt19937_64 rng(8);
  const auto s = cubic_samples(PolySurface2::reference(), 50, rng);
  const auto fit = fit_ridge(s, 3, 1e14);
  double mean = 0.0;
  for (const auto& x : s) mean += x.Q;
  mean /= static_cast<double>(s.size());
  for (int j = 0; j < 9; ++j) EXPECT_NEAR(fit.surface.coeffs[j], 0.0, 1e-8);
  EXPECT_NEAR(fit.surface.coeffs[9], mean, 1e-6);
}

TEST(Ridge, DuplicatesEqualWeights) {
  std::mt19937_64 rng(9);
  auto s = cubic_samples(PolySurface2::reference(), 30, rng);
  std::normal_distribution<double> g(0.0, 0.5);
  for (auto& x : s) x.Q += g(rng);
  auto dup = s;
  std::vector<double> w(s.size(), 1.0);
  for (std::size_t i = 0; i < s.size(); i += 3) {
    dup.push_back(s[i]);
    w[i] = 2.0;
  }
  const auto a = fit_ridge(dup, 3, 1e-2);
  const auto b = fit_ridge(s, 3, 1e-2, w);
  for (int j = 0; j < 10; ++j) EXPECT_NEAR(a.surface.coeffs[j], b.surface.coeffs[j], 1e-8 * (1 + std::abs(a.surface.coeffs[j])));
}

TEST(Ridge, RankDeficientWithoutPenaltyIsNumericalError) {
  std::vector<ChillerSample> s;
  for (int i = 0; i < 20; ++i) s.push_back({25.0, 10.0 * i, 1.0 * i});  // T_out constant
  EXPECT_THROW(fit_ridge(s, 3, 0.0), gpmpc::NumericalError);
  EXPECT_NO_THROW(fit_ridge(s, 3, 1e-3));
}

TEST(Ridge, ZeroFlowAugmentation) {
  const auto a = augment_zero_flow({}, {15, 20, 25, 30, 35});
  ASSERT_EQ(a.size(), 5u);
  for (const auto& x : a) {
    EXPECT_EQ(x.Theta, 0.0);
    EXPECT_EQ(x.Q, 0.0);
  }
  std::vector<double> grid;
  for (double T = 15; T <= 40; T += 5) grid.push_back(T);
  EXPECT_EQ(augment_zero_flow(a, grid).size(), 11u);

  // Logged data only at substantial flow: the plain fit extrapolates a
  // positive output at zero flow; augmentation pulls it down.
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> uT(15.0, 40.0), uTh(120.0, 270.0);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<ChillerSample> s;
  for (int i = 0; i < 200; ++i) {
    const double T = uT(rng), Th = uTh(rng);
    s.push_back({T, Th, 8.0 + 0.08 * Th + 0.2 * (T - 25.0) + g(rng)});
  }
  const auto plain = fit_ridge(s);
  const auto aug = fit_ridge(augment_zero_flow(s, grid));
  EXPECT_LT(aug.surface(25.0, 0.0), plain.surface(25.0, 0.0));
}

TEST(ChillerFiles, RoundTripAndErrors) {
  const auto p = PolySurface2::reference();
  EXPECT_EQ(parse_coefficients<10>(format_coefficients(p.coeffs)), p.coeffs);
  EXPECT_THROW(parse_coefficients<10>("1\n2\n"), gpmpc::ParseError);
  EXPECT_THROW(parse_coefficients<5>("1\n2\nx\n4\n5\n"), gpmpc::ParseError);
  const auto dir = std::filesystem::path(GPMPC_DATA_DIR);
  EXPECT_EQ(load_surface((dir / "chiller_thermal.txt").string()).coeffs, p.coeffs);
  EXPECT_EQ(load_cop_curve((dir / "chiller_cop.txt").string()).coeffs, PolyCurve1::reference().coeffs);
}
