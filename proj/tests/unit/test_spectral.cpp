#include <cmath>

#include <gtest/gtest.h>

#include "ibf/spectral.hpp"

using namespace ibf;

TEST(GaussLegendre, IntegratesPolynomialsOfDegree2nMinus1Exactly) {
  for (int n : {1, 2, 5, 16, 32}) {
    const auto& gl = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += gl.weights[i] * std::pow(gl.nodes[i], k);
      const double exact = k % 2 == 1 ? 0.0 : 2.0 / (k + 1);
      EXPECT_NEAR(acc, exact, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(GaussLegendre, RejectsNonPositiveCount) { EXPECT_THROW(gauss_legendre(0), ParameterError); }

TEST(SpectralMeasure, ValidatesInput) {
  EXPECT_THROW(SpectralMeasure({{-1.0, 1.0}}, {}), ParameterError);
  EXPECT_THROW(SpectralMeasure({{0.0, 1.0}}, {}), ParameterError);
  EXPECT_THROW(SpectralMeasure({{1.0, -1.0}}, {}), ParameterError);
  EXPECT_THROW(SpectralMeasure({}, {{2.0, 1.0, 1.0}}), ParameterError);
  EXPECT_THROW(SpectralMeasure({}, {{1.0, 2.0, -1.0}}), ParameterError);
  EXPECT_THROW(SpectralMeasure({}, {}), ParameterError);
  EXPECT_THROW(SpectralMeasure({{1.0, 0.0}}, {}), ParameterError);
  EXPECT_THROW(SpectralMeasure({{NAN, 1.0}}, {}), ParameterError);
}

TEST(SpectralMeasure, MassAndMomentsAreExact) {
  const SpectralMeasure m({{1.0, 2.0}, {3.0, 0.5}}, {{0.5, 1.5, 2.0}});
  EXPECT_DOUBLE_EQ(total_mass(m), 2.0 + 0.5 + 2.0);
  EXPECT_DOUBLE_EQ(moment(m, 0), total_mass(m));
  // \int_{0.5}^{1.5} 2 s^2 ds = 2 (1.5^3 - 0.5^3) / 3
  EXPECT_NEAR(moment(m, 2), 2.0 + 0.5 * 9.0 + 2.0 * (3.375 - 0.125) / 3.0, 1e-14);
  EXPECT_NEAR(moment(m, 4), 2.0 + 0.5 * 81.0 + 2.0 * (std::pow(1.5, 5) - std::pow(0.5, 5)) / 5.0, 1e-12);
  EXPECT_THROW(moment(m, 9), ParameterError);
  EXPECT_THROW(moment(m, -1), ParameterError);
  EXPECT_DOUBLE_EQ(m.support_max(), 3.0);
}

TEST(SpectralMeasure, QuadratureReproducesMoments) {
  const SpectralMeasure m({{0.7, 1.0}}, {{0.2, 1.0, 0.5}, {1.0, 4.0, 0.25}});
  for (int k = 0; k <= 8; ++k) {
    const double q = integrate(m, [k](double s) { return std::pow(s, k); });
    EXPECT_NEAR(q, moment(m, k), 1e-12 * std::max(1.0, moment(m, k))) << "k=" << k;
  }
}

TEST(SpectralMeasure, IntegrateReportsNonFiniteIntegrand) {
  const auto m = SpectralMeasure::atom(2.0, 1.0);
  try {
    integrate(m, [](double) { return NAN; });
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_DOUBLE_EQ(e.abscissa(), 2.0);
  }
}

TEST(Normalize, PotentialAndSolenoidalMasses) {
  const SpectralMeasure m({{1.0, 0.3}}, {{0.5, 2.0, 0.7}});
  for (int d : {2, 3, 5, 16}) {
    EXPECT_NEAR(total_mass(normalize_potential(m, d)), d, 1e-12 * d);
    EXPECT_NEAR(total_mass(normalize_solenoidal(m, d)), static_cast<double>(d) / (d - 1), 1e-12);
  }
  // normalization only rescales: shape (normalized moments) is unchanged
  const auto n = normalize_potential(m, 3);
  EXPECT_NEAR(moment(n, 2) / moment(n, 0), moment(m, 2) / moment(m, 0), 1e-14);
}

TEST(Normalize, RejectsDimensionBelowTwoAndZeroMass) {
  const auto m = SpectralMeasure::atom(1.0, 1.0);
  EXPECT_THROW(normalize_potential(m, 1), ParameterError);
  EXPECT_THROW(normalize_solenoidal(m, 1), ParameterError);
  EXPECT_THROW(normalize_potential(m.scaled(0.0), 2), NormalizationError);
}
