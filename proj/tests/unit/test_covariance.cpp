#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bessel_oracle.hpp"
#include "fixtures.hpp"
#include "ibf/covariance.hpp"

using namespace ibf;
using namespace ibf::testing;

TEST(Model, ValidatesParameters) {
  const auto mp = SpectralMeasure::atom(1.0, 2.0);
  const auto ms = SpectralMeasure::atom(1.0, 2.0);
  EXPECT_THROW(IbfModel::create(1, 0, 1, 0, mp, std::nullopt), ModelError);
  EXPECT_THROW(IbfModel::create(17, 0, 1, 0, mp, std::nullopt), ModelError);
  EXPECT_THROW(IbfModel::create(2, 0, 0.5, 0.6, mp, ms), ModelError);
  EXPECT_THROW(IbfModel::create(2, -0.1, 1.1, 0, mp, std::nullopt), ModelError);
  EXPECT_THROW(IbfModel::create(2, 0, 1, 0, std::nullopt, std::nullopt), ModelError);
  EXPECT_THROW(IbfModel::create(2, 0, 0, 1, std::nullopt, std::nullopt), ModelError);
  EXPECT_THROW(IbfModel::create(2, 0, 1, 0, SpectralMeasure::atom(1.0, 1.0), std::nullopt), ModelError);
  EXPECT_THROW(IbfModel::create(3, 0, 0, 1, std::nullopt, SpectralMeasure::atom(1.0, 1.0)), ModelError);
  EXPECT_THROW(IbfModel::create(2, 1, 0, 0, std::nullopt, std::nullopt), ModelError);
  EXPECT_NO_THROW(trivial_model(3));
  EXPECT_NO_THROW(IbfModel::from_raw(3, 0, 0.5, 0.5, SpectralMeasure::atom(1.0, 1.0),
                                     SpectralMeasure::atom(2.0, 7.0)));
}

TEST(Covariance, NormalizationAtOrigin) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + trial % 3;
    const auto m = random_model(d, rng);
    for (auto k : {ScalarKind::PL, ScalarKind::PN, ScalarKind::SL, ScalarKind::SN}) {
      const bool has = (k == ScalarKind::PL || k == ScalarKind::PN) ? m.potential().has_value()
                                                                      : m.solenoidal().has_value();
      if (!has) {
        EXPECT_THROW(b_scalar(m, k, 0.0), ModelError);
        continue;
      }
      EXPECT_EQ(b_scalar(m, k, 0.0), 1.0);
      EXPECT_NEAR(b_scalar(m, k, 1e-9), 1.0, 1e-12);
    }
    EXPECT_TRUE(covariance_tensor(m, Vec::Zero(d)).isApprox(Mat::Identity(d, d), 0.0));
  }
}

TEST(Covariance, AtomClosedForms) {
  // d = 2, M_P = 2 delta_1: B_PN(s) = Lambda_1(s) = 2 J_1(s)/s and
  // B_PL(s) = Lambda_1(s) - s^2 Lambda_2(s)/4 = 2 J_0(s) - 2 J_1(s)/s
  const auto m = potential_atom_d2();
  for (double s : {0.3, 1.0, 2.5, 7.0, 20.0}) {
    const double j0 = bessel_j_oracle(0, s), j1 = bessel_j_oracle(1, s);
    EXPECT_NEAR(b_scalar(m, ScalarKind::PN, s), 2.0 * j1 / s, 1e-12) << s;
    EXPECT_NEAR(b_scalar(m, ScalarKind::PL, s), 2.0 * j0 - 2.0 * j1 / s, 1e-12) << s;
  }
  // d = 3, M_S = (3/2) delta_1: B_SL = (2/3)(3/2) Lambda_{3/2}(s) = 3 (sin s - s cos s)/s^3
  const auto m3 = IbfModel::create(3, 0, 0, 1, std::nullopt, SpectralMeasure::atom(1.0, 1.5));
  for (double s : {0.3, 1.0, 4.0}) {
    const double expect = 3.0 * (std::sin(s) - s * std::cos(s)) / (s * s * s);
    EXPECT_NEAR(b_scalar(m3, ScalarKind::SL, s), expect, 1e-12) << s;
  }
}

TEST(Covariance, LongitudinalTransverseMatchScalars) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = random_model(3, rng);
    for (double s : {0.1, 1.3, 6.0}) {
      const auto lt = longitudinal_transverse_m1(m, s);
      double bl = 1.0, bn = 1.0;
      if (m.potential()) {
        bl += m.mu1() * (b_scalar(m, ScalarKind::PL, s) - 1.0);
        bn += m.mu1() * (b_scalar(m, ScalarKind::PN, s) - 1.0);
      }
      if (m.solenoidal()) {
        bl += m.mu2() * (b_scalar(m, ScalarKind::SL, s) - 1.0);
        bn += m.mu2() * (b_scalar(m, ScalarKind::SN, s) - 1.0);
      }
      EXPECT_NEAR(1.0 + lt.l_m1, bl, 1e-13);
      EXPECT_NEAR(1.0 + lt.n_m1, bn, 1e-13);
      Vec x = Vec::Zero(3);
      x(0) = s;
      const Mat b = covariance_tensor(m, x);
      EXPECT_NEAR(b(0, 0), bl, 1e-13);
      EXPECT_NEAR(b(1, 1), bn, 1e-13);
      EXPECT_NEAR(b(2, 2), bn, 1e-13);
      EXPECT_NEAR(b(0, 1), 0.0, 1e-15);
    }
  }
}

TEST(Covariance, TensorIsSymmetricEvenAndRotationCovariant) {
  std::mt19937_64 rng(9);
  const auto m = random_model(3, rng);
  Vec x(3);
  x << 0.3, -1.2, 0.7;
  const Mat b = covariance_tensor(m, x);
  EXPECT_TRUE(b.isApprox(b.transpose(), 1e-15));
  EXPECT_TRUE(b.isApprox(covariance_tensor(m, -x), 1e-15));
  const Mat q = Eigen::HouseholderQR<Mat>(Mat::Random(3, 3)).householderQ();
  EXPECT_TRUE((q * b * q.transpose()).isApprox(covariance_tensor(m, q * x), 1e-12));
}

TEST(FlowConstants, AtomModels) {
  const auto p = flow_constants(potential_atom_d2());
  EXPECT_NEAR(p.beta_l, 0.75, 1e-15);
  EXPECT_NEAR(p.beta_n, 0.25, 1e-15);
  EXPECT_NEAR(p.lambda, -0.25, 1e-15);
  const auto s = flow_constants(solenoidal_atom_d2());
  EXPECT_NEAR(s.beta_l, 0.25, 1e-15);
  EXPECT_NEAR(s.beta_n, 0.75, 1e-15);
  EXPECT_NEAR(s.lambda, 0.25, 1e-15);
  const auto q = flow_constants(IbfModel::create(4, 0, 1, 0, SpectralMeasure::atom(1.0, 4.0), std::nullopt));
  EXPECT_NEAR(q.beta_l, 0.5, 1e-15);
  EXPECT_NEAR(q.beta_n, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(q.lambda, 0.0, 1e-15);
  EXPECT_THROW(flow_constants(trivial_model(2)), ModelError);
}

TEST(FlowConstants, MatchCurvatureOfCovariance) {
  // beta = -B''(0): compare with a central second difference of B - 1
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = random_model(2 + trial % 2, rng);
    const auto c = flow_constants(m);
    const double h = 1e-3;
    const auto lt = longitudinal_transverse_m1(m, h);
    EXPECT_NEAR(-2.0 * lt.l_m1 / (h * h), c.beta_l, 1e-5 * c.beta_l + 1e-9);
    EXPECT_NEAR(-2.0 * lt.n_m1 / (h * h), c.beta_n, 1e-5 * c.beta_n + 1e-9);
  }
}

TEST(FlowConstants, IncompressibilityIffNoPotentialPart) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + trial % 3;
    const bool pot = trial % 2 == 0;
    const auto m = random_model(d, rng, pot, true);
    const auto c = flow_constants(m);
    const double r = (d + 1) * c.beta_l - (d - 1) * c.beta_n;
    if (pot) {
      EXPECT_GT(std::abs(r), 1e-6);
    } else {
      EXPECT_NEAR(r, 0.0, 1e-12);
    }
  }
}

TEST(Covariance, DeviationKeepsRelativePrecisionNearOrigin) {
  const auto m = potential_atom_d2();
  Vec x(2);
  x << 1e-7, 0.0;
  const Mat g = deviation_tensor(m, x);
  // L - 1 ~ -beta_L r^2 / 2, N - 1 ~ -beta_N r^2 / 2
  EXPECT_NEAR(g(0, 0) / (-0.375e-14), 1.0, 1e-6);
  EXPECT_NEAR(g(1, 1) / (-0.125e-14), 1.0, 1e-6);
  EXPECT_EQ(deviation_tensor(m, Vec::Zero(2)).norm(), 0.0);
}

TEST(Covariance, PsdProbeIsNonNegative) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 3;
    const auto m = random_model(d, rng);
    Mat pts(d, 12), dirs(d, 12);
    for (Eigen::Index i = 0; i < pts.size(); ++i) {
      pts(i) = 2.0 * n(rng);
      dirs(i) = n(rng);
    }
    EXPECT_GE(psd_probe(m, pts, dirs), -1e-9);
  }
  EXPECT_THROW(psd_probe(potential_atom_d2(), Mat::Zero(2, 2), Mat::Zero(2, 3)), ParameterError);
}
