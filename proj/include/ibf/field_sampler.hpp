#pragma once

// Exact Gaussian increments of the generating field on a finite point set, and
// evaluation of the deterministic drift.
//
// Two coordinate systems are supported for the joint covariance:
//   absolute   variables M(x_i); blocks C[i][j] = b(x_i - x_j)
//   anchored   variables M(x_0) and M(x_i) - M(x_0); blocks are built from
//              b - I so that clouds of nearly coincident tracers (contracting
//              curves, Lyapunov pairs) keep full relative precision.
// In both cases the matrix is scaled to unit diagonal before the Cholesky
// factorization, so jitter is measured in correlation units. Zero-variance
// variables (exact duplicates, rigid translation) are sampled as exact zeros.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "ibf/covariance.hpp"
#include "ibf/drift_field.hpp"
#include "ibf/error.hpp"
#include "ibf/point_cloud.hpp"
#include "ibf/rkhs.hpp"

namespace ibf {

using Rng = std::mt19937_64;

enum class SamplerBasis { absolute, anchored };

inline constexpr double kJitterMax = 1e-6;

class IncrementSampler {
public:
  int dim() const noexcept { return d_; }
  Eigen::Index points() const noexcept { return static_cast<Eigen::Index>(order_.size()); }
  SamplerBasis basis() const noexcept { return basis_; }
  double jitter_used() const noexcept { return jitter_; }

  /// Covariance per unit time in the sampler's coordinates, tracers in canonical
  /// (lexicographic) order.
  const Mat& covariance() const noexcept { return covariance_; }
  /// Lower-triangular factor: factor * factor^T = covariance + jitter * diag(covariance).
  const Mat& factor() const noexcept { return factor_; }
  /// order()[k] is the input index of the k-th canonical tracer.
  const std::vector<Eigen::Index>& order() const noexcept { return order_; }

private:
  friend IncrementSampler build_sampler(const IbfModel&, const PointCloud&, SamplerBasis);

  int d_ = 0;
  SamplerBasis basis_ = SamplerBasis::absolute;
  double jitter_ = 0.0;
  Mat covariance_;
  Mat factor_;
  std::vector<Eigen::Index> order_;
};

namespace detail {

inline std::vector<Eigen::Index> canonical_order(const Mat& x) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.cols()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (x(r, a) != x(r, b)) return x(r, a) < x(r, b);
    }
    return false;
  });
  return idx;
}

inline std::pair<Eigen::Index, Eigen::Index> closest_pair(const Mat& x) {
  std::pair<Eigen::Index, Eigen::Index> best{0, x.cols() > 1 ? 1 : 0};
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < x.cols(); ++j) {
      const double dd = (x.col(i) - x.col(j)).squaredNorm();
      if (dd < best_d) {
        best_d = dd;
        best = {i, j};
      }
    }
  }
  return best;
}

}  // namespace detail

inline IncrementSampler build_sampler(const IbfModel& model, const PointCloud& cloud,
                                      SamplerBasis basis = SamplerBasis::absolute) {
  const int d = model.dim();
  const Eigen::Index n_pts = cloud.size();
  if (n_pts < 1 || cloud.dim() != d) {
    throw ParameterError("build_sampler: need at least one point of the model dimension");
  }
  if (!cloud.positions.allFinite()) {
    throw ParameterError("build_sampler: positions must be finite");
  }
  IncrementSampler s;
  s.d_ = d;
  s.basis_ = basis;
  s.order_ = detail::canonical_order(cloud.positions);
  Mat p(d, n_pts);
  for (Eigen::Index k = 0; k < n_pts; ++k) p.col(k) = cloud.positions.col(s.order_[k]);

  const Eigen::Index n = n_pts * d;
  Mat& k_mat = s.covariance_;
  k_mat.setZero(n, n);
  if (basis == SamplerBasis::absolute) {
    for (Eigen::Index i = 0; i < n_pts; ++i) {
      k_mat.block(i * d, i * d, d, d).setIdentity();
      for (Eigen::Index j = i + 1; j < n_pts; ++j) {
        const Mat b = covariance_tensor(model, p.col(i) - p.col(j));
        k_mat.block(i * d, j * d, d, d) = b;
        k_mat.block(j * d, i * d, d, d) = b;
      }
    }
  } else {
    // g[i][j] = b(p_i - p_j) - I, stored for i < j
    std::vector<Mat> g(static_cast<std::size_t>(n_pts * n_pts));
    auto at = [&](Eigen::Index i, Eigen::Index j) -> Mat& {
      return g[static_cast<std::size_t>(std::min(i, j) * n_pts + std::max(i, j))];
    };
    for (Eigen::Index i = 0; i < n_pts; ++i) {
      for (Eigen::Index j = i + 1; j < n_pts; ++j) {
        at(i, j) = deviation_tensor(model, p.col(i) - p.col(j));
      }
    }
    k_mat.block(0, 0, d, d).setIdentity();
    for (Eigen::Index j = 1; j < n_pts; ++j) {
      k_mat.block(0, j * d, d, d) = at(0, j);
      k_mat.block(j * d, 0, d, d) = at(0, j);
    }
    for (Eigen::Index i = 1; i < n_pts; ++i) {
      k_mat.block(i * d, i * d, d, d) = -2.0 * at(0, i);
      for (Eigen::Index j = i + 1; j < n_pts; ++j) {
        const Mat blk = at(i, j) - at(0, i) - at(0, j);
        k_mat.block(i * d, j * d, d, d) = blk;
        k_mat.block(j * d, i * d, d, d) = blk;
      }
    }
  }

  std::vector<Eigen::Index> active;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (k_mat(r, r) > std::numeric_limits<double>::min()) active.push_back(r);
  }
  const auto n_act = static_cast<Eigen::Index>(active.size());
  Vec scale(n_act);
  for (Eigen::Index a = 0; a < n_act; ++a) scale(a) = std::sqrt(k_mat(active[a], active[a]));
  Mat corr(n_act, n_act);
  for (Eigen::Index a = 0; a < n_act; ++a) {
    for (Eigen::Index b = 0; b < n_act; ++b) {
      corr(a, b) = k_mat(active[a], active[b]) / (scale(a) * scale(b));
    }
    corr(a, a) = 1.0;
  }

  Eigen::LLT<Mat> llt(corr);
  double jitter = 0.0;
  if (llt.info() != Eigen::Success) {
    jitter = 1e-12 * static_cast<double>(n_pts);
    while (true) {
      Mat trial = corr;
      trial.diagonal().array() += jitter;
      llt.compute(trial);
      if (llt.info() == Eigen::Success) break;
      if (jitter >= kJitterMax) {
        const auto [i, j] = detail::closest_pair(cloud.positions);
        std::ostringstream msg;
        msg.precision(17);
        msg << "build_sampler: covariance not factorizable with jitter " << kJitterMax
            << "; closest tracers " << i << " and " << j << " at distance "
            << (cloud.positions.col(i) - cloud.positions.col(j)).norm();
        throw DegenerateConfigurationError(msg.str(), static_cast<std::size_t>(i),
                                           static_cast<std::size_t>(j));
      }
      jitter = std::min(jitter * 10.0, kJitterMax);
    }
  }
  s.jitter_ = jitter;
  const Mat l = llt.matrixL();
  s.factor_.setZero(n, n);
  for (Eigen::Index a = 0; a < n_act; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      s.factor_(active[a], active[b]) = scale(a) * l(a, b);
    }
  }
  return s;
}

/// One increment draw split into the displacement of an anchor tracer and the
/// displacements of every tracer relative to it. In the anchored basis the
/// relative part is sampled directly, so separations of nearby tracers (and the
/// exact zero of a rigid translation) are not polluted by cancellation.
struct SplitIncrement {
  Vec anchor;              // increment of tracer `anchor_index`
  Mat relative;            // d x N, column i = increment_i - increment_anchor
  Eigen::Index anchor_index = 0;

  Mat absolute() const { return relative.colwise() + anchor; }
};

inline SplitIncrement sample_increment_split(const IncrementSampler& s, double dt, Rng& rng) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ParameterError("sample_increment: dt must be finite and > 0");
  }
  const int d = s.dim();
  const Eigen::Index n_pts = s.points();
  const Eigen::Index n = n_pts * d;
  std::normal_distribution<double> normal;
  Vec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  Vec y = s.factor().triangularView<Eigen::Lower>() * z;
  y *= std::sqrt(dt);
  const auto& order = s.order();
  SplitIncrement out;
  out.anchor = y.segment(0, d);
  out.anchor_index = order[0];
  out.relative.resize(d, n_pts);
  out.relative.col(order[0]).setZero();
  for (Eigen::Index k = 1; k < n_pts; ++k) {
    auto col = out.relative.col(order[static_cast<std::size_t>(k)]);
    if (s.basis() == SamplerBasis::anchored) {
      col = y.segment(k * d, d);
    } else {
      col = y.segment(k * d, d) - out.anchor;
    }
  }
  return out;
}

/// One draw of the field increment over a step of length dt; column i is the
/// displacement of input tracer i. Distributed as N(0, C dt).
inline Mat sample_increment(const IncrementSampler& s, double dt, Rng& rng) {
  if (s.basis() == SamplerBasis::anchored) return sample_increment_split(s, dt, rng).absolute();
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ParameterError("sample_increment: dt must be finite and > 0");
  }
  const int d = s.dim();
  const Eigen::Index n_pts = s.points();
  const Eigen::Index n = n_pts * d;
  std::normal_distribution<double> normal;
  Vec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  Vec y = s.factor().triangularView<Eigen::Lower>() * z;
  y *= std::sqrt(dt);
  Mat out(d, n_pts);
  const auto& order = s.order();
  for (Eigen::Index k = 0; k < n_pts; ++k) {
    out.col(order[static_cast<std::size_t>(k)]) = y.segment(k * d, d);
  }
  return out;
}

/// Model and sphere rule needed by the radial_rkhs drift.
struct DriftContext {
  const IbfModel* model = nullptr;
  const SphereRule* rule = nullptr;
};

namespace detail {

inline Vec eval_table(const TableDrift& table, const Eigen::Ref<const Vec>& x) {
  const auto d = static_cast<std::size_t>(x.size());
  if (!x.allFinite()) {
    throw EvaluationError("custom_table drift: query point is not finite",
                          std::numeric_limits<double>::quiet_NaN());
  }
  if (table.axes.size() != d || table.values.rows() != x.size()) {
    throw ParameterError("custom_table drift: table dimension mismatch");
  }
  std::vector<std::size_t> base(d);
  std::vector<double> frac(d);
  std::vector<std::size_t> stride(d);
  std::size_t total = 1;
  for (std::size_t k = d; k-- > 0;) {
    stride[k] = total;
    total *= table.axes[k].size();
  }
  if (static_cast<std::size_t>(table.values.cols()) != total) {
    throw ParameterError("custom_table drift: value count does not match the grid");
  }
  for (std::size_t k = 0; k < d; ++k) {
    const auto& ax = table.axes[k];
    if (ax.size() == 1) {
      base[k] = 0;
      frac[k] = 0.0;
      continue;
    }
    const double xc = std::clamp(x(static_cast<Eigen::Index>(k)), ax.front(), ax.back());
    auto it = std::upper_bound(ax.begin(), ax.end(), xc);
    std::size_t i = static_cast<std::size_t>(std::distance(ax.begin(), it));
    i = std::clamp<std::size_t>(i, 1, ax.size() - 1) - 1;
    base[k] = i;
    frac[k] = (xc - ax[i]) / (ax[i + 1] - ax[i]);
  }
  Vec out = Vec::Zero(x.size());
  const std::size_t corners = std::size_t{1} << d;
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    bool skip = false;
    for (std::size_t k = 0; k < d; ++k) {
      const bool up = (c >> k) & 1U;
      if (up && table.axes[k].size() == 1) {
        skip = true;
        break;
      }
      w *= up ? frac[k] : 1.0 - frac[k];
      flat += (base[k] + (up ? 1 : 0)) * stride[k];
    }
    if (skip || w == 0.0) continue;
    out += w * table.values.col(static_cast<Eigen::Index>(flat));
  }
  return out;
}

inline double table_lipschitz(const TableDrift& table) {
  const std::size_t d = table.axes.size();
  std::vector<std::size_t> stride(d);
  std::size_t total = 1;
  for (std::size_t k = d; k-- > 0;) {
    stride[k] = total;
    total *= table.axes[k].size();
  }
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const auto& ax = table.axes[k];
    double worst = 0.0;
    for (std::size_t flat = 0; flat < total; ++flat) {
      const std::size_t ik = (flat / stride[k]) % ax.size();
      if (ik + 1 >= ax.size()) continue;
      const auto a = static_cast<Eigen::Index>(flat);
      const auto b = static_cast<Eigen::Index>(flat + stride[k]);
      worst = std::max(worst, (table.values.col(b) - table.values.col(a)).norm() /
                                  (ax[ik + 1] - ax[ik]));
    }
    sum_sq += worst * worst;
  }
  return std::sqrt(sum_sq);
}

}  // namespace detail

/// v(x). `t` is reserved for time-dependent drifts and currently unused.
inline Vec eval_drift(const DriftField& v, const Eigen::Ref<const Vec>& x,
                      const DriftContext& ctx = {}, double t = 0.0) {
  (void)t;
  struct Visitor {
    const Eigen::Ref<const Vec>& x;
    const DriftContext& ctx;
    Vec operator()(const NoDrift&) const { return Vec::Zero(x.size()); }
    Vec operator()(const LinearDrift& lin) const {
      if (lin.a.rows() != x.size() || lin.a.cols() != x.size()) {
        throw ParameterError("linear drift: matrix dimension mismatch");
      }
      return lin.a * x;
    }
    Vec operator()(const RadialRkhsDrift& r) const {
      if (ctx.model == nullptr) {
        throw ModelError("radial_rkhs drift needs a model context");
      }
      if (ctx.rule != nullptr) {
        return r.scale * mean_inward_field(*ctx.model, r.rho, *ctx.rule, x);
      }
      const int d = ctx.model->dim();
      const SphereRule rule =
          sphere_rule(d, r.resolution > 0 ? r.resolution : default_sphere_resolution(d));
      return r.scale * mean_inward_field(*ctx.model, r.rho, rule, x);
    }
    Vec operator()(const TableDrift& tab) const { return detail::eval_table(tab, x); }
  };
  return std::visit(Visitor{x, ctx}, v);
}

/// Global Lipschitz constant carried by each drift kind. For radial_rkhs the
/// reproducing property gives |V(x) - V(y)| <= |V|_H sqrt(max(beta_L, beta_N)) |x - y|
/// with |V|_H <= 1.
inline double lipschitz_constant(const DriftField& v, const IbfModel* model = nullptr) {
  struct Visitor {
    const IbfModel* model;
    double operator()(const NoDrift&) const { return 0.0; }
    double operator()(const LinearDrift& lin) const {
      if (lin.a.size() == 0) return 0.0;
      Eigen::JacobiSVD<Mat> svd(lin.a);
      return svd.singularValues()(0);
    }
    double operator()(const RadialRkhsDrift& r) const {
      if (model == nullptr) {
        throw ModelError("radial_rkhs drift needs a model context");
      }
      if (model->trivial()) return 0.0;
      const auto c = flow_constants(*model);
      return std::abs(r.scale) * std::sqrt(std::max(c.beta_l, c.beta_n));
    }
    double operator()(const TableDrift& tab) const { return detail::table_lipschitz(tab); }
  };
  return std::visit(Visitor{model}, v);
}

/// Drift with its sphere rule built once; cheap to call per step.
class DriftEvaluator {
public:
  DriftEvaluator(DriftField field, const IbfModel& model)
      : field_(std::move(field)), model_(&model) {
    if (const auto* r = std::get_if<RadialRkhsDrift>(&field_)) {
      const int d = model.dim();
      rule_ = sphere_rule(d, r->resolution > 0 ? r->resolution : default_sphere_resolution(d));
    }
  }

  Vec operator()(const Eigen::Ref<const Vec>& x, double t = 0.0) const {
    return eval_drift(field_, x, DriftContext{model_, rule_ ? &*rule_ : nullptr}, t);
  }

  bool is_zero() const noexcept { return std::holds_alternative<NoDrift>(field_); }
  const DriftField& field() const noexcept { return field_; }

private:
  DriftField field_;
  const IbfModel* model_;
  std::optional<SphereRule> rule_;
};

}  // namespace ibf
