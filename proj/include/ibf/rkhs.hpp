#pragma once

// Condition (C)_rho and the mean inward field.
//
// For the sphere of radius rho the field
//     Vt(x) = \int b(rho phi - x) phi dsigma(phi)
// lies in the reproducing kernel Hilbert space of b, <Vt(rho theta), theta> is
// constant in theta, and its squared RKHS norm equals the double sphere integral
// of <b(rho theta - rho phi) theta, phi>. That integral equals
//     mu1 2^{d-2} Gamma(d/2)^2 \int (J_{d/2}(rho s) / (rho s)^{(d-2)/2})^2 dM_P(s),
// which is positive exactly when M_P charges the complement of the zero set of
// s -> J_{d/2}(rho s).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ibf/bessel.hpp"
#include "ibf/covariance.hpp"
#include "ibf/error.hpp"
#include "ibf/spectral.hpp"

namespace ibf {

struct SphereRule {
  Mat nodes;  // d x n, unit columns
  std::vector<double> weights;

  int dim() const noexcept { return static_cast<int>(nodes.rows()); }
  std::size_t size() const noexcept { return weights.size(); }
};

struct ConditionReport {
  bool satisfied = false;
  double witness_mass = 0.0;
  std::vector<double> zero_locations_checked;
};

struct SqueezeFunctional {
  double lhs;
  double rhs;
};

inline constexpr std::uint64_t kDefaultSphereSeed = 0x5eed5eedULL;

/// Resolution used when a caller passes 0: 64 angles (d=2), 16^2 nodes (d=3),
/// 4096 Monte-Carlo nodes (d>=4).
inline int default_sphere_resolution(int d) {
  if (d == 2) return 64;
  if (d == 3) return 16;
  return 4096;
}

inline SphereRule sphere_rule(int d, int resolution, std::optional<std::uint64_t> mc_seed = {}) {
  if (d < kMinDimension || d > kMaxDimension) {
    throw ParameterError("sphere_rule: dimension must lie in [2, 16]");
  }
  if (resolution < 1) {
    throw ParameterError("sphere_rule: resolution must be positive");
  }
  SphereRule rule;
  if (d == 2) {
    rule.nodes.resize(2, resolution);
    rule.weights.assign(resolution, 1.0 / resolution);
    for (int k = 0; k < resolution; ++k) {
      const double a = 2.0 * std::numbers::pi * k / resolution;
      rule.nodes(0, k) = std::cos(a);
      rule.nodes(1, k) = std::sin(a);
    }
    return rule;
  }
  if (d == 3) {
    const auto& gl = gauss_legendre(resolution);
    const int n = resolution * resolution;
    rule.nodes.resize(3, n);
    rule.weights.resize(n);
    int idx = 0;
    for (int i = 0; i < resolution; ++i) {
      const double c = gl.nodes[i];
      const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (int j = 0; j < resolution; ++j) {
        const double a = 2.0 * std::numbers::pi * j / resolution;
        rule.nodes(0, idx) = sn * std::cos(a);
        rule.nodes(1, idx) = sn * std::sin(a);
        rule.nodes(2, idx) = c;
        rule.weights[idx] = 0.5 * gl.weights[i] / resolution;
        ++idx;
      }
    }
    return rule;
  }
  std::mt19937_64 rng(mc_seed.value_or(kDefaultSphereSeed));
  std::normal_distribution<double> normal;
  rule.nodes.resize(d, resolution);
  rule.weights.assign(resolution, 1.0 / resolution);
  for (int k = 0; k < resolution; ++k) {
    Vec g(d);
    do {
      for (int i = 0; i < d; ++i) g(i) = normal(rng);
    } while (g.norm() == 0.0);
    rule.nodes.col(k) = g / g.norm();
  }
  return rule;
}

/// Positive zeros of J_nu on (0, upper].
inline std::vector<double> bessel_zeros(double nu, double upper) {
  if (!(upper > 0.0) || upper > 200.0) {
    throw ParameterError("bessel_zeros: upper must lie in (0, 200]");
  }
  return bessel_zeros_in(nu, 0.0, upper);
}

inline constexpr double kDefaultConditionTol = 1e-8;

/// Decides condition (C)_rho. A point s of the support counts as "on" the zero
/// set when |s - z/rho| < tol * max(1, z/rho) for a zero z of J_{d/2}.
inline ConditionReport check_condition(const IbfModel& m, double rho,
                                       double tol = kDefaultConditionTol) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ParameterError("check_condition: rho must be finite and > 0");
  }
  if (!(tol > 0.0)) {
    throw ParameterError("check_condition: tol must be > 0");
  }
  ConditionReport report;
  if (!(m.mu1() > 0.0) || !m.potential()) return report;
  const auto& mp = *m.potential();
  const double nu = 0.5 * m.dim();
  auto band = [&](double scaled_zero) { return tol * std::max(1.0, scaled_zero); };

  double witness = 0.0;
  for (const auto& atom : mp.atoms()) {
    if (atom.weight == 0.0) continue;
    const double z = rho * atom.location;
    bool on_zero = false;
    for (double zero : bessel_zeros_in(nu, std::max(0.0, z - 1.0), z + 1.0)) {
      const double scaled = zero / rho;
      report.zero_locations_checked.push_back(scaled);
      if (std::abs(atom.location - scaled) < band(scaled)) on_zero = true;
    }
    if (!on_zero) witness += atom.weight;
  }
  for (const auto& piece : mp.density()) {
    if (piece.height == 0.0) continue;
    double covered = 0.0;
    for (double zero : bessel_zeros_in(nu, std::max(0.0, rho * piece.lo - 1.0), rho * piece.hi + 1.0)) {
      const double scaled = zero / rho;
      const double lo = std::max(piece.lo, scaled - band(scaled));
      const double hi = std::min(piece.hi, scaled + band(scaled));
      if (hi > lo) {
        covered += hi - lo;
        report.zero_locations_checked.push_back(scaled);
      }
    }
    witness += piece.height * std::max(0.0, (piece.hi - piece.lo) - covered);
  }
  report.witness_mass = witness;
  report.satisfied = witness > tol * total_mass(mp);
  return report;
}

/// b(y) v without forming the matrix.
inline Vec apply_covariance(const IbfModel& m, const Eigen::Ref<const Vec>& y,
                            const Eigen::Ref<const Vec>& v) {
  const double r2 = y.squaredNorm();
  if (r2 == 0.0) return v;
  const auto lt = longitudinal_transverse_m1(m, std::sqrt(r2));
  return (1.0 + lt.n_m1) * v + ((lt.l_m1 - lt.n_m1) * y.dot(v) / r2) * y;
}

/// V(x) = -\sum_k w_k b(rho n_k - x) n_k; points inward on the sphere of radius
/// rho whenever condition (C)_rho holds.
inline Vec mean_inward_field(const IbfModel& m, double rho, const SphereRule& rule,
                             const Eigen::Ref<const Vec>& x) {
  if (rule.dim() != m.dim() || x.size() != m.dim()) {
    throw ParameterError("mean_inward_field: dimension mismatch");
  }
  Vec acc = Vec::Zero(m.dim());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto node = rule.nodes.col(static_cast<Eigen::Index>(k));
    acc += rule.weights[k] * apply_covariance(m, rho * node - x, node);
  }
  return -acc;
}

/// Double sphere quadrature (lhs) against the Bessel-integral closed form (rhs).
inline SqueezeFunctional squeeze_functional(const IbfModel& m, double rho, const SphereRule& rule) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ParameterError("squeeze_functional: rho must be finite and > 0");
  }
  if (rule.dim() != m.dim()) {
    throw ParameterError("squeeze_functional: rule dimension mismatch");
  }
  const auto n = static_cast<Eigen::Index>(rule.size());
  double lhs = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ti = rule.nodes.col(i);
    double row = 0.5 * rule.weights[i];  // <b(0) t, t> = 1, halved to undo the doubling below
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto tj = rule.nodes.col(j);
      const Vec y = rho * (ti - tj);
      const double r2 = y.squaredNorm();
      double value = ti.dot(tj);
      if (r2 > 0.0) {
        const auto lt = longitudinal_transverse_m1(m, std::sqrt(r2));
        value += lt.n_m1 * ti.dot(tj) + (lt.l_m1 - lt.n_m1) * y.dot(ti) * y.dot(tj) / r2;
      } else {
        value = 1.0;
      }
      row += rule.weights[j] * value;
    }
    lhs += 2.0 * rule.weights[i] * row;
  }

  double rhs = 0.0;
  if (m.mu1() > 0.0 && m.potential()) {
    const int d = m.dim();
    const double nu = 0.5 * d;
    const double pre = std::pow(2.0, d - 2) * std::pow(std::tgamma(nu), 2);
    rhs = m.mu1() * pre *
          integrate(*m.potential(),
                    [&](double s) {
                      const double z = rho * s;
                      const double v = bessel_j(nu, z) / std::pow(z, nu - 1.0);
                      return v * v;
                    },
                    m.options().quad_nodes_per_piece);
  }
  return {lhs, rhs};
}

}  // namespace ibf
