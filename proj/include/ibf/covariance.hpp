#pragma once

// Isotropic covariance tensors built from potential/solenoidal spectral measures.
//
// With the normalized Bessel function L_nu(z) = Gamma(nu+1) (2/z)^nu J_nu(z),
// nu = d/2 and z = s r, the four scalar covariances are
//
//   B_PN(s) = 1/d     \int L_nu(z)                          dM_P(r)
//   B_PL(s) = 1/d     \int [L_nu(z) - z^2 L_{nu+1}(z)/(d+2)] dM_P(r)
//   B_SL(s) = (d-1)/d \int L_nu(z)                          dM_S(r)
//   B_SN(s) =         \int [L_{nu-1}(z) - L_nu(z)/d]         dM_S(r)
//
// which is the usual 2^{(d-2)/2} Gamma(d/2) J_nu(z)/z^nu form with the
// constants folded in. Masses d and d/(d-1) make every scalar equal 1 at s = 0,
// so each B - 1 is evaluated from L - 1 directly and b(x) - I keeps full
// relative precision for nearly coincident points.

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ibf/bessel.hpp"
#include "ibf/drift_field.hpp"
#include "ibf/error.hpp"
#include "ibf/spectral.hpp"

namespace ibf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr int kMinDimension = 2;
inline constexpr int kMaxDimension = 16;

enum class ScalarKind { PL, PN, SL, SN };

inline const char* to_string(ScalarKind k) {
  switch (k) {
    case ScalarKind::PL: return "PL";
    case ScalarKind::PN: return "PN";
    case ScalarKind::SL: return "SL";
    case ScalarKind::SN: return "SN";
  }
  return "?";
}

struct FlowConstants {
  double beta_l;
  double beta_n;
  double lambda;
};

/// Deviations B - 1 of the longitudinal and transverse covariances at one radius.
struct LongitudinalTransverse {
  double l_m1;
  double n_m1;
};

struct ModelOptions {
  /// Allows mu0 = 1 (pure translation flow); test fixture only.
  bool allow_trivial = false;
  int quad_nodes_per_piece = kDefaultQuadNodes;
};

class IbfModel {
public:
  /// Validates every invariant; measures must already be normalized
  /// (mass d for the potential part, d/(d-1) for the solenoidal part).
  static IbfModel create(int d, double mu0, double mu1, double mu2,
                         std::optional<SpectralMeasure> m_p,
                         std::optional<SpectralMeasure> m_s,
                         std::optional<DriftField> drift = std::nullopt,
                         ModelOptions options = {}) {
    if (d < kMinDimension || d > kMaxDimension) {
      throw ModelError("model: dimension must lie in [2, 16]");
    }
    for (double mu : {mu0, mu1, mu2}) {
      if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw ModelError("model: mu weights must be finite and >= 0");
      }
    }
    if (std::abs(mu0 + mu1 + mu2 - 1.0) > 1e-12) {
      throw ModelError("model: mu0+mu1+mu2 must equal 1");
    }
    if (mu0 == 1.0 && !options.allow_trivial) {
      throw ModelError("model: mu0 = 1 gives the trivial translation flow (b == I)");
    }
    if (mu1 > 0.0 && !m_p) {
      throw ModelError("model: mu1 > 0 requires a potential spectral measure");
    }
    if (mu2 > 0.0 && !m_s) {
      throw ModelError("model: mu2 > 0 requires a solenoidal spectral measure");
    }
    if (mu1 == 0.0) m_p.reset();
    if (mu2 == 0.0) m_s.reset();
    if (m_p && std::abs(total_mass(*m_p) - d) > 1e-10 * d) {
      throw ModelError("model: potential measure must have total mass d");
    }
    const double sol_mass = static_cast<double>(d) / (d - 1);
    if (m_s && std::abs(total_mass(*m_s) - sol_mass) > 1e-10 * sol_mass) {
      throw ModelError("model: solenoidal measure must have total mass d/(d-1)");
    }
    IbfModel m;
    m.d_ = d;
    m.mu0_ = mu0;
    m.mu1_ = mu1;
    m.mu2_ = mu2;
    m.m_p_ = std::move(m_p);
    m.m_s_ = std::move(m_s);
    m.drift_ = std::move(drift);
    m.options_ = options;
    if (m.m_p_) m.p_nodes_ = quadrature_nodes(*m.m_p_, options.quad_nodes_per_piece);
    if (m.m_s_) m.s_nodes_ = quadrature_nodes(*m.m_s_, options.quad_nodes_per_piece);
    return m;
  }

  /// Same as `create` but rescales raw measures to the required masses first.
  static IbfModel from_raw(int d, double mu0, double mu1, double mu2,
                           std::optional<SpectralMeasure> raw_p,
                           std::optional<SpectralMeasure> raw_s,
                           std::optional<DriftField> drift = std::nullopt,
                           ModelOptions options = {}) {
    if (d < kMinDimension || d > kMaxDimension) {
      throw ModelError("model: dimension must lie in [2, 16]");
    }
    if (raw_p) raw_p = normalize_potential(*raw_p, d);
    if (raw_s) raw_s = normalize_solenoidal(*raw_s, d);
    return create(d, mu0, mu1, mu2, std::move(raw_p), std::move(raw_s), std::move(drift),
                  options);
  }

  /// mu0 = 1 fixture: b(x) = I everywhere.
  static IbfModel trivial_translation(int d) {
    return create(d, 1.0, 0.0, 0.0, std::nullopt, std::nullopt, std::nullopt,
                  ModelOptions{.allow_trivial = true});
  }

  int dim() const noexcept { return d_; }
  double mu0() const noexcept { return mu0_; }
  double mu1() const noexcept { return mu1_; }
  double mu2() const noexcept { return mu2_; }
  bool trivial() const noexcept { return mu0_ == 1.0; }
  const std::optional<SpectralMeasure>& potential() const noexcept { return m_p_; }
  const std::optional<SpectralMeasure>& solenoidal() const noexcept { return m_s_; }
  const std::optional<DriftField>& drift() const noexcept { return drift_; }
  const ModelOptions& options() const noexcept { return options_; }
  std::span<const QuadratureNode> potential_nodes() const noexcept { return p_nodes_; }
  std::span<const QuadratureNode> solenoidal_nodes() const noexcept { return s_nodes_; }

  /// Copy with a different drift descriptor.
  IbfModel with_drift(std::optional<DriftField> drift) const {
    IbfModel m = *this;
    m.drift_ = std::move(drift);
    return m;
  }

private:
  IbfModel() = default;

  int d_ = 2;
  double mu0_ = 0.0;
  double mu1_ = 0.0;
  double mu2_ = 0.0;
  std::optional<SpectralMeasure> m_p_;
  std::optional<SpectralMeasure> m_s_;
  std::optional<DriftField> drift_;
  ModelOptions options_;
  std::vector<QuadratureNode> p_nodes_;
  std::vector<QuadratureNode> s_nodes_;
};

namespace detail {

/// Deviations (B_PL - 1, B_PN - 1) from the cached potential nodes.
inline std::pair<double, double> potential_m1(const IbfModel& m, double s) {
  const int d = m.dim();
  const double nu = 0.5 * d;
  double l = 0.0;
  double n = 0.0;
  for (const auto& node : m.potential_nodes()) {
    const double z = s * node.location;
    const double lm1 = normalized_bessel_m1(nu, z);
    const double up = normalized_bessel(nu + 1.0, z);
    n += node.weight * lm1;
    l += node.weight * (lm1 - z * z * up / (d + 2));
  }
  return {l / d, n / d};
}

/// Deviations (B_SL - 1, B_SN - 1) from the cached solenoidal nodes.
inline std::pair<double, double> solenoidal_m1(const IbfModel& m, double s) {
  const int d = m.dim();
  const double nu = 0.5 * d;
  double l = 0.0;
  double n = 0.0;
  for (const auto& node : m.solenoidal_nodes()) {
    const double z = s * node.location;
    const double lm1 = normalized_bessel_m1(nu, z);
    const double down_m1 = normalized_bessel_m1(nu - 1.0, z);
    l += node.weight * lm1;
    n += node.weight * (down_m1 - lm1 / d);
  }
  return {l * (d - 1) / d, n};
}

}  // namespace detail

/// B_L - 1 and B_N - 1 at radius s, including the mu0 I contribution.
inline LongitudinalTransverse longitudinal_transverse_m1(const IbfModel& m, double s) {
  if (s == 0.0) return {0.0, 0.0};
  LongitudinalTransverse out{0.0, 0.0};
  if (m.mu1() > 0.0) {
    const auto [l, n] = detail::potential_m1(m, s);
    out.l_m1 += m.mu1() * l;
    out.n_m1 += m.mu1() * n;
  }
  if (m.mu2() > 0.0) {
    const auto [l, n] = detail::solenoidal_m1(m, s);
    out.l_m1 += m.mu2() * l;
    out.n_m1 += m.mu2() * n;
  }
  return out;
}

/// One of B_PL, B_PN, B_SL, B_SN at radius s >= 0. Uses `integrate` against the
/// raw spectral measure, so the node count can differ from the model cache.
inline double b_scalar(const IbfModel& m, ScalarKind kind, double s,
                       int quad_points_per_piece = kDefaultQuadNodes) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw ParameterError("b_scalar: s must be finite and >= 0");
  }
  const bool potential = kind == ScalarKind::PL || kind == ScalarKind::PN;
  const auto& measure = potential ? m.potential() : m.solenoidal();
  if (!measure) {
    throw ModelError(std::string("b_scalar: kind ") + to_string(kind) +
                     " needs a spectral measure the model does not carry");
  }
  if (s == 0.0) return 1.0;
  const int d = m.dim();
  const double nu = 0.5 * d;
  double dev = 0.0;
  switch (kind) {
    case ScalarKind::PN:
      dev = integrate(*measure, [&](double r) { return normalized_bessel_m1(nu, s * r); },
                      quad_points_per_piece) / d;
      break;
    case ScalarKind::PL:
      dev = integrate(*measure,
                      [&](double r) {
                        const double z = s * r;
                        return normalized_bessel_m1(nu, z) -
                               z * z * normalized_bessel(nu + 1.0, z) / (d + 2);
                      },
                      quad_points_per_piece) / d;
      break;
    case ScalarKind::SL:
      dev = integrate(*measure, [&](double r) { return normalized_bessel_m1(nu, s * r); },
                      quad_points_per_piece) * (d - 1) / d;
      break;
    case ScalarKind::SN:
      dev = integrate(*measure,
                      [&](double r) {
                        const double z = s * r;
                        return normalized_bessel_m1(nu - 1.0, z) - normalized_bessel_m1(nu, z) / d;
                      },
                      quad_points_per_piece);
      break;
  }
  return 1.0 + dev;
}

/// b(x) - I. Exact zero at x = 0.
inline Mat deviation_tensor(const IbfModel& m, const Eigen::Ref<const Vec>& x) {
  const int d = m.dim();
  const double r2 = x.squaredNorm();
  if (r2 == 0.0) return Mat::Zero(d, d);
  const double r = std::sqrt(r2);
  const auto lt = longitudinal_transverse_m1(m, r);
  const double coef = (lt.l_m1 - lt.n_m1) / r2;
  Mat out(d, d);
  // filled from one product per pair so the result is exactly symmetric
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) out(i, j) = out(j, i) = coef * (x(i) * x(j));
    out(i, i) = coef * (x(i) * x(i)) + lt.n_m1;
  }
  return out;
}

inline Mat covariance_tensor(const IbfModel& m, const Eigen::Ref<const Vec>& x) {
  Mat out = deviation_tensor(m, x);
  out.diagonal().array() += 1.0;
  return out;
}

inline FlowConstants flow_constants(const IbfModel& m) {
  if (m.trivial()) {
    throw ModelError("flow_constants: trivial translation model has no strain");
  }
  const double d = m.dim();
  const double denom = d * (d + 2.0);
  const double p2 = m.potential() ? moment(*m.potential(), 2) : 0.0;
  const double s2 = m.solenoidal() ? moment(*m.solenoidal(), 2) : 0.0;
  FlowConstants c{};
  c.beta_l = 3.0 * m.mu1() / denom * p2 + (d - 1.0) * m.mu2() / denom * s2;
  c.beta_n = m.mu1() / denom * p2 + (d + 1.0) * m.mu2() / denom * s2;
  c.lambda = (d - 1.0) * c.beta_n / 2.0 - c.beta_l / 2.0;
  return c;
}

/// Quadratic form sum_{k,l} <b(x_k - x_l) xi_k, xi_l>. Points and directions are
/// the columns of d x n matrices.
inline double psd_probe(const IbfModel& m, const Mat& points, const Mat& directions) {
  if (points.cols() != directions.cols() || points.cols() < 1 || points.rows() != m.dim() ||
      directions.rows() != m.dim()) {
    throw ParameterError("psd_probe: need matching non-empty d x n point/direction sets");
  }
  double acc = 0.0;
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    acc += directions.col(k).squaredNorm();
    for (Eigen::Index l = k + 1; l < points.cols(); ++l) {
      const Vec diff = points.col(k) - points.col(l);
      acc += 2.0 * directions.col(l).dot(covariance_tensor(m, diff) * directions.col(k));
    }
  }
  return acc;
}

}  // namespace ibf
