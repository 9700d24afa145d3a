#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ibf/field_sampler.hpp"

using namespace ibf;
using namespace ibf::testing;

namespace {

PointCloud cloud(std::initializer_list<std::initializer_list<double>> pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  const auto d = static_cast<Eigen::Index>(pts.begin()->size());
  Mat x(d, n);
  Eigen::Index j = 0;
  for (const auto& p : pts) {
    Eigen::Index i = 0;
    for (double v : p) x(i++, j) = v;
    ++j;
  }
  return {x, 0.0};
}

/// Empirical covariance of increments (flattened tracer-major) over n draws.
Mat empirical_covariance(const IncrementSampler& s, double dt, int n, Rng& rng) {
  const Eigen::Index dim = s.points() * s.dim();
  Mat acc = Mat::Zero(dim, dim);
  for (int k = 0; k < n; ++k) {
    const Mat inc = sample_increment(s, dt, rng);
    const Vec v = Eigen::Map<const Vec>(inc.data(), dim);
    acc += v * v.transpose();
  }
  return acc / n;
}

}  // namespace

TEST(Sampler, SinglePointIsIdentity) {
  for (auto basis : {SamplerBasis::absolute, SamplerBasis::anchored}) {
    const auto s = build_sampler(potential_atom_d2(), cloud({{0.3, -0.2}}), basis);
    EXPECT_TRUE(s.covariance().isApprox(Mat::Identity(2, 2), 0.0));
    EXPECT_TRUE(s.factor().isApprox(Mat::Identity(2, 2), 0.0));
    EXPECT_EQ(s.jitter_used(), 0.0);
  }
}

TEST(Sampler, OffDiagonalBlockIsCovarianceTensor) {
  const auto m = potential_atom_d2();
  const auto c = cloud({{0.0, 0.0}, {0.7, 0.4}});
  const auto s = build_sampler(m, c, SamplerBasis::absolute);
  Vec sep(2);
  sep << 0.7, 0.4;
  EXPECT_EQ(s.covariance().block(0, 2, 2, 2), covariance_tensor(m, -sep));
  EXPECT_EQ(s.covariance().block(2, 0, 2, 2), covariance_tensor(m, sep));
  EXPECT_TRUE(s.covariance().block(0, 0, 2, 2).isIdentity(0.0));
  EXPECT_TRUE(s.covariance().block(2, 2, 2, 2).isIdentity(0.0));
}

TEST(Sampler, FactorReproducesCovariancePlusJitter) {
  std::mt19937_64 g(7);
  std::normal_distribution<double> n;
  for (auto basis : {SamplerBasis::absolute, SamplerBasis::anchored}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto m = random_model(2 + trial % 2, g);
      Mat x(m.dim(), 9);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n(g);
      const auto s = build_sampler(m, PointCloud{x, 0.0}, basis);
      const Mat& c = s.covariance();
      EXPECT_EQ((c - Mat(c.transpose())).cwiseAbs().maxCoeff(), 0.0);
      Mat target = c;
      target.diagonal() += s.jitter_used() * c.diagonal();
      const Mat llt = s.factor() * s.factor().transpose();
      EXPECT_LT((llt - target).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_EQ(Mat(s.factor().triangularView<Eigen::StrictlyUpper>()).cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(Sampler, DuplicatePointsNeedJitterInAbsoluteBasis) {
  const auto m = potential_atom_d2();
  const auto c = cloud({{0.5, 0.5}, {0.5, 0.5}});
  const auto s = build_sampler(m, c, SamplerBasis::absolute);
  EXPECT_GT(s.jitter_used(), 0.0);
  EXPECT_LE(s.jitter_used(), kJitterMax);
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const Mat inc = sample_increment(s, 1.0, rng);
    EXPECT_LT((inc.col(0) - inc.col(1)).norm(), 5.0 * std::sqrt(s.jitter_used()));
  }
}

TEST(Sampler, DuplicatePointsAreExactCopiesInAnchoredBasis) {
  const auto s = build_sampler(potential_atom_d2(), cloud({{0.5, 0.5}, {0.5, 0.5}}), SamplerBasis::anchored);
  EXPECT_EQ(s.jitter_used(), 0.0);
  Rng rng(1);
  const Mat inc = sample_increment(s, 1.0, rng);
  EXPECT_EQ(inc.col(0), inc.col(1));
}

TEST(Sampler, TrivialModelGivesCommonTranslation) {
  const auto m = trivial_model(3);
  const Mat x = Mat::Random(3, 7);
  // anchored basis: the relative variables have zero variance, so the copies
  // are identical
  {
    const auto s = build_sampler(m, PointCloud{x, 0.0}, SamplerBasis::anchored);
    EXPECT_EQ(s.jitter_used(), 0.0);
    Rng rng(5);
    const Mat inc = sample_increment(s, 0.3, rng);
    for (Eigen::Index i = 1; i < inc.cols(); ++i) {
      EXPECT_LT((inc.col(i) - inc.col(0)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
  // absolute basis: C has rank d and only factors with jitter; copies agree to
  // the jitter scale
  {
    const auto s = build_sampler(m, PointCloud{x, 0.0}, SamplerBasis::absolute);
    EXPECT_GT(s.jitter_used(), 0.0);
    Rng rng(5);
    const Mat inc = sample_increment(s, 0.3, rng);
    for (Eigen::Index i = 1; i < inc.cols(); ++i) {
      EXPECT_LT((inc.col(i) - inc.col(0)).norm(), 5.0 * std::sqrt(s.jitter_used() * 0.3 * 2.0));
    }
  }
}

TEST(Sampler, EmpiricalCovarianceMatchesWithinFiveSE) {
  const auto m = potential_atom_d2();
  const auto c = cloud({{0.0, 0.0}, {0.6, -0.3}});
  const double dt = 0.01;
  const int n = 200000;
  for (auto basis : {SamplerBasis::absolute, SamplerBasis::anchored}) {
    const auto s = build_sampler(m, c, basis);
    const auto abs = build_sampler(m, c, SamplerBasis::absolute);
    Rng rng(11);
    const Mat emp = empirical_covariance(s, dt, n, rng);
    const Mat& cov = abs.covariance();
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) {
        // Var of a product of jointly Gaussian entries: C_ii C_jj + C_ij^2
        const double se = dt * std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
        EXPECT_NEAR(emp(i, j), cov(i, j) * dt, 5.0 * se) << i << "," << j;
      }
    }
  }
}

TEST(Sampler, IncrementsScaleWithSqrtDt) {
  const auto s = build_sampler(potential_atom_d2(), cloud({{0.0, 0.0}}), SamplerBasis::absolute);
  const int n = 40000;
  for (double dt : {1e-4, 1.0}) {
    Rng rng(3);
    double ss = 0.0;
    for (int k = 0; k < n; ++k) ss += sample_increment(s, dt, rng).squaredNorm();
    // E|dM|^2 = d dt, Var(|dM|^2) = 2 d dt^2
    EXPECT_NEAR(ss / n, 2.0 * dt, 5.0 * std::sqrt(4.0 / n) * dt);
  }
  Rng rng(0);
  EXPECT_THROW(sample_increment(s, 0.0, rng), ParameterError);
}

TEST(Sampler, PermutationEquivarianceIsBitwise) {
  const auto m = solenoidal_atom_d2();
  Mat x(2, 5);
  x << 0.1, 0.9, -0.4, 0.3, 0.2,  //
      0.5, -0.2, 0.7, 0.0, -0.6;
  const std::vector<Eigen::Index> perm{3, 0, 4, 1, 2};
  Mat y(2, 5);
  for (Eigen::Index i = 0; i < 5; ++i) y.col(i) = x.col(perm[static_cast<std::size_t>(i)]);
  for (auto basis : {SamplerBasis::absolute, SamplerBasis::anchored}) {
    Rng r1(77), r2(77);
    const Mat a = sample_increment(build_sampler(m, PointCloud{x, 0.0}, basis), 0.1, r1);
    const Mat b = sample_increment(build_sampler(m, PointCloud{y, 0.0}, basis), 0.1, r2);
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ(b.col(i), a.col(perm[static_cast<std::size_t>(i)]));
  }
}

TEST(Sampler, IsotropyInLaw) {
  const auto m = potential_atom_d2();
  const auto c = cloud({{0.0, 0.0}, {0.8, 0.1}});
  const double a = 0.9;
  Mat q(2, 2);
  q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  const Mat rotated = q * c.positions;
  const int n = 100000;
  Rng r1(21), r2(22);
  const auto s1 = build_sampler(m, c, SamplerBasis::absolute);
  const auto s2 = build_sampler(m, PointCloud{rotated, 0.0}, SamplerBasis::absolute);
  const Mat e1 = empirical_covariance(s1, 1.0, n, r1);
  const Mat e2 = empirical_covariance(s2, 1.0, n, r2);
  Mat qq = Mat::Zero(4, 4);
  qq.block(0, 0, 2, 2) = q;
  qq.block(2, 2, 2, 2) = q;
  const Mat expect = qq * e1 * qq.transpose();
  const Mat& cov = s2.covariance();
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
      EXPECT_NEAR(e2(i, j), expect(i, j), 5.0 * std::sqrt(2.0) * se);
    }
  }
}

TEST(Sampler, RejectsBadInput) {
  const auto m = potential_atom_d2();
  EXPECT_THROW(build_sampler(m, PointCloud{Mat(2, 0), 0.0}), ParameterError);
  EXPECT_THROW(build_sampler(m, PointCloud{Mat::Zero(3, 2), 0.0}), ParameterError);
  Mat bad = Mat::Zero(2, 2);
  bad(0, 0) = NAN;
  EXPECT_THROW(build_sampler(m, PointCloud{bad, 0.0}), ParameterError);
}

TEST(Drift, BasicKinds) {
  Vec x(2);
  x << 1.0, 0.0;
  EXPECT_EQ(eval_drift(NoDrift{}, x), Vec::Zero(2));
  const Vec lin = eval_drift(LinearDrift{-Mat::Identity(2, 2)}, x);
  EXPECT_EQ(lin(0), -1.0);
  EXPECT_EQ(lin(1), 0.0);
  EXPECT_EQ(lipschitz_constant(NoDrift{}), 0.0);
  Mat a(2, 2);
  a << 0, 3, -1, 0;
  EXPECT_NEAR(lipschitz_constant(LinearDrift{a}), 3.0, 1e-14);
}

TEST(Drift, RadialRkhsMatchesSqueezeValue) {
  const auto m = potential_atom_d2();
  const double c = 64.0;
  const DriftEvaluator v(RadialRkhsDrift{1.0, c, 0}, m);
  for (double ang : {0.0, 1.0, 2.5}) {
    Vec th(2);
    th << std::cos(ang), std::sin(ang);
    EXPECT_NEAR(v(th).dot(th), -0.3873 * c, 1e-4 * c);
    const Vec direct = eval_drift(RadialRkhsDrift{1.0, c, 0}, th, DriftContext{&m, nullptr});
    EXPECT_TRUE(direct.isApprox(v(th), 1e-14));
  }
  EXPECT_THROW(eval_drift(RadialRkhsDrift{}, Vec::Zero(2)), ModelError);
  EXPECT_NEAR(lipschitz_constant(RadialRkhsDrift{1.0, 2.0, 0}, &m), 2.0 * std::sqrt(0.75), 1e-14);
}

TEST(Drift, RadialRkhsLipschitzBoundHolds) {
  const auto m = potential_atom_d2();
  const DriftEvaluator v(RadialRkhsDrift{1.0, 1.0, 0}, m);
  const double lip = lipschitz_constant(RadialRkhsDrift{1.0, 1.0, 0}, &m);
  std::mt19937_64 g(2);
  std::normal_distribution<double> n;
  for (int k = 0; k < 200; ++k) {
    Vec x(2), y(2);
    x << n(g), n(g);
    y << n(g), n(g);
    EXPECT_LE((v(x) - v(y)).norm(), lip * (x - y).norm() * (1.0 + 1e-12));
  }
}

TEST(Drift, CustomTableInterpolatesAndClamps) {
  TableDrift t;
  t.axes = {{0.0, 1.0}, {0.0, 2.0}};
  t.values.resize(2, 4);
  // nodes in order (0,0), (0,2), (1,0), (1,2): v(x) = (x0 + x1, x0 - x1)
  t.values << 0, 2, 1, 3,  //
      0, -2, 1, -1;
  Vec x(2);
  x << 0.25, 0.5;
  const Vec v = eval_drift(t, x);
  EXPECT_NEAR(v(0), 0.75, 1e-15);
  EXPECT_NEAR(v(1), -0.25, 1e-15);
  x << 5.0, -3.0;  // clamped to (1, 0)
  const Vec w = eval_drift(t, x);
  EXPECT_NEAR(w(0), 1.0, 1e-15);
  EXPECT_NEAR(w(1), 1.0, 1e-15);
  x << NAN, 0.0;
  EXPECT_THROW(eval_drift(t, x), EvaluationError);
  EXPECT_NEAR(lipschitz_constant(t), std::sqrt(2.0 + 2.0), 1e-14);
}
