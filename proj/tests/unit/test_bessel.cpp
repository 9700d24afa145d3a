#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bessel_oracle.hpp"
#include "ibf/bessel.hpp"

using namespace ibf;
using ibf::testing::bessel_j_oracle;

namespace {

/// Scale for comparing J values: the value itself, or in the oscillatory
/// region the amplitude envelope sqrt(2/(pi x)) so zeros are not penalized.
double scale(double nu, double x, double ref) {
  const double env = x > nu ? std::sqrt(2.0 / (std::numbers::pi * x)) : 0.0;
  return std::max(std::abs(ref), env);
}

}  // namespace

TEST(Bessel, FrozenReferenceValues) {
  // 18-digit references (mpmath)
  struct Case { double nu, x, j; };
  const Case cases[] = {
      {0, 1, 0.765197686557966551},   {1, 1, 0.440050585744933516},
      {0, 30, -0.0863679835810402113}, {1, 30, -0.118751062616622937},
      {2, 15, 0.0415716779752504747},  {5, 12.5, 0.0347376997622397277},
      {10, 40, 0.119383362782260952},  {0.5, 3, 0.0650081828773757781},
      {1.5, 0.2, 0.0236933040951292415}, {3.5, 7, -0.00340303756586302133},
      {9.5, 40, 0.122675649527131234}, {9.5, 0.1, 3.85278726391628909e-19},
      {4, 0.5, 0.000160736476364287597},
  };
  for (const auto& c : cases) {
    EXPECT_NEAR(bessel_j(c.nu, c.x), c.j, 1e-11 * scale(c.nu, c.x, c.j)) << "nu=" << c.nu << " x=" << c.x;
  }
}

TEST(Bessel, HalfOrderClosedFormIsElementary) {
  for (double x : {0.1, 1.0, 3.7, 25.0}) {
    EXPECT_NEAR(bessel_j(0.5, x), std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x), 1e-15);
  }
}

TEST(Bessel, AgreesWithHighPrecisionSeriesOverAllOrders) {
  for (int twice = 0; twice <= 20; ++twice) {
    const double nu = 0.5 * twice;
    for (double x = 0.1; x <= 40.0; x += 0.37) {
      const double ref = bessel_j_oracle(nu, x);
      EXPECT_NEAR(bessel_j(nu, x), ref, 1e-10 * scale(nu, x, ref)) << "nu=" << nu << " x=" << x;
    }
  }
}

TEST(Bessel, SeriesIsAccurateBelowSplit) {
  for (double nu : {0.0, 1.0, 1.5, 4.0, 9.5}) {
    for (double x = 0.05; x <= kSeriesSplit; x += 0.29) {
      const double ref = bessel_j_oracle(nu, x);
      EXPECT_NEAR(bessel_j_series(nu, x), ref, 1e-10 * scale(nu, x, ref)) << nu << " " << x;
    }
  }
}

TEST(Bessel, ClosedFormAccurateWhereItIsUsed) {
  for (int twice = 1; twice <= 19; twice += 2) {
    const double nu = 0.5 * twice;
    for (double x = std::max(0.1, nu); x <= 40.0; x += 0.41) {
      const double ref = bessel_j_oracle(nu, x);
      EXPECT_NEAR(bessel_j_half_closed_form(nu, x), ref, 1e-10 * scale(nu, x, ref)) << nu << " " << x;
    }
  }
}

TEST(Bessel, ThreeTermRecurrenceResidual) {
  for (int twice = 2; twice <= 18; ++twice) {
    const double nu = 0.5 * twice;
    for (double x = 0.1; x <= 40.0; x += 0.53) {
      const double a = bessel_j(nu - 1.0, x), b = bessel_j(nu, x), c = bessel_j(nu + 1.0, x);
      const double mag = std::max({std::abs(a), std::abs(c), std::abs(2.0 * nu / x * b)});
      EXPECT_LE(std::abs(a + c - 2.0 * nu / x * b), 1e-9 * mag) << nu << " " << x;
    }
  }
}

TEST(Bessel, ValueAtZero) {
  EXPECT_EQ(bessel_j(0.0, 0.0), 1.0);
  EXPECT_EQ(bessel_j(1.0, 0.0), 0.0);
  EXPECT_EQ(bessel_j(1.5, 0.0), 0.0);
}

TEST(Bessel, RejectsInvalidOrderAndArgument) {
  EXPECT_THROW(bessel_j(0.3, 1.0), ParameterError);
  EXPECT_THROW(bessel_j(10.5, 1.0), ParameterError);
  EXPECT_THROW(bessel_j(-0.5, 1.0), ParameterError);
  EXPECT_THROW(bessel_j(1.0, -1.0), ParameterError);
  EXPECT_THROW(bessel_j(1.0, NAN), ParameterError);
}

TEST(Bessel, NormalizedFunctionAndDeviation) {
  for (double nu : {1.0, 1.5, 2.0, 5.0}) {
    EXPECT_EQ(normalized_bessel(nu, 0.0), 1.0);
    EXPECT_EQ(normalized_bessel_m1(nu, 0.0), 0.0);
    // Lambda_nu(z) - 1 = -z^2 / (4 (nu + 1)) + O(z^4), kept to full relative precision
    const double z = 1e-7;
    EXPECT_NEAR(normalized_bessel_m1(nu, z), -z * z / (4.0 * (nu + 1.0)), 1e-12 * z * z);
    for (double zz : {0.5, 3.0, 11.0, 13.0, 30.0}) {
      const double expect = std::tgamma(nu + 1.0) * std::pow(2.0 / zz, nu) * bessel_j_oracle(nu, zz);
      EXPECT_NEAR(normalized_bessel(nu, zz), expect, 1e-10 * std::max(1e-3, std::abs(expect)));
      EXPECT_NEAR(normalized_bessel_m1(nu, zz), expect - 1.0, 1e-10);
    }
  }
}

TEST(BesselZeros, FirstZeros) {
  const auto z1 = bessel_zeros_in(1.0, 0.0, 8.0);
  ASSERT_EQ(z1.size(), 2u);
  EXPECT_NEAR(z1[0], 3.83170597020751232, 1e-11);
  EXPECT_NEAR(z1[1], 7.01558666981561875, 1e-11);
  const auto z32 = bessel_zeros_in(1.5, 0.0, 5.0);
  ASSERT_EQ(z32.size(), 1u);
  EXPECT_NEAR(z32[0], 4.49340945790906418, 1e-11);
}
