#pragma once

// Finite spectral measures on (0, inf): weighted atoms plus piecewise-constant
// density pieces. Masses and moments are closed form; general integrals use
// Gauss-Legendre per density piece.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ibf/error.hpp"

namespace ibf {

struct Atom {
  double location;
  double weight;
};

struct DensityPiece {
  double lo;
  double hi;
  double height;
};

/// Node/weight pair of a discretized measure; the weight already includes the
/// density height and quadrature weight.
struct QuadratureNode {
  double location;
  double weight;
};

inline constexpr int kDefaultQuadNodes = 32;

namespace detail {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

inline GaussLegendreRule compute_gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        break;
      }
    }
    // refresh derivative at the converged node
    double p0 = 1.0;
    double p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    rule.nodes[n / 2] = 0.0;
  }
  return rule;
}

}  // namespace detail

/// Gauss-Legendre rule on [-1, 1] with `n` nodes; cached, thread-safe.
inline const detail::GaussLegendreRule& gauss_legendre(int n) {
  if (n < 1) {
    throw ParameterError("gauss_legendre: node count must be positive");
  }
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<detail::GaussLegendreRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<detail::GaussLegendreRule>(detail::compute_gauss_legendre(n));
  }
  return *slot;
}

class SpectralMeasure {
public:
  SpectralMeasure(std::vector<Atom> atoms, std::vector<DensityPiece> density)
      : atoms_(std::move(atoms)), density_(std::move(density)) {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const auto& a = atoms_[i];
      if (!std::isfinite(a.location) || a.location <= 0.0) {
        throw ParameterError("spectral measure: atom " + std::to_string(i) +
                             " location must be finite and > 0");
      }
      if (!std::isfinite(a.weight) || a.weight < 0.0) {
        throw ParameterError("spectral measure: atom " + std::to_string(i) +
                             " weight must be finite and >= 0");
      }
    }
    for (std::size_t i = 0; i < density_.size(); ++i) {
      const auto& p = density_[i];
      if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || p.lo <= 0.0 || p.hi <= p.lo) {
        throw ParameterError("spectral measure: density piece " + std::to_string(i) +
                             " must satisfy 0 < lo < hi");
      }
      if (!std::isfinite(p.height) || p.height < 0.0) {
        throw ParameterError("spectral measure: density piece " + std::to_string(i) +
                             " height must be finite and >= 0");
      }
    }
    const double mass = raw_mass();
    if (!(mass > 0.0) || !std::isfinite(mass)) {
      throw ParameterError("spectral measure: total mass must be finite and > 0");
    }
  }

  static SpectralMeasure atom(double location, double weight) {
    return SpectralMeasure({{location, weight}}, {});
  }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::vector<DensityPiece>& density() const noexcept { return density_; }

  /// Largest point of the support.
  double support_max() const noexcept {
    double m = 0.0;
    for (const auto& a : atoms_) {
      if (a.weight > 0.0) m = std::max(m, a.location);
    }
    for (const auto& p : density_) {
      if (p.height > 0.0) m = std::max(m, p.hi);
    }
    return m;
  }

  /// Copy with every weight and height multiplied by `factor`.
  SpectralMeasure scaled(double factor) const {
    SpectralMeasure out = *this;
    for (auto& a : out.atoms_) a.weight *= factor;
    for (auto& p : out.density_) p.height *= factor;
    return out;
  }

  double raw_mass() const noexcept {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.weight;
    for (const auto& p : density_) m += p.height * (p.hi - p.lo);
    return m;
  }

private:
  std::vector<Atom> atoms_;
  std::vector<DensityPiece> density_;
};

inline double total_mass(const SpectralMeasure& m) { return m.raw_mass(); }

inline constexpr int kMaxMomentOrder = 8;

/// Exact k-th moment.
inline double moment(const SpectralMeasure& m, int k) {
  if (k < 0 || k > kMaxMomentOrder) {
    throw ParameterError("moment: order must lie in [0, 8]");
  }
  double acc = 0.0;
  for (const auto& a : m.atoms()) {
    acc += a.weight * std::pow(a.location, k);
  }
  for (const auto& p : m.density()) {
    acc += p.height * (std::pow(p.hi, k + 1) - std::pow(p.lo, k + 1)) / (k + 1);
  }
  if (!std::isfinite(acc)) {
    throw ParameterError("moment: non-finite value");
  }
  return acc;
}

/// Discretization used by `integrate`: atoms as-is, each density piece mapped
/// onto a Gauss-Legendre rule with `nodes_per_piece` nodes.
inline std::vector<QuadratureNode> quadrature_nodes(const SpectralMeasure& m,
                                                    int nodes_per_piece = kDefaultQuadNodes) {
  std::vector<QuadratureNode> out;
  out.reserve(m.atoms().size() + m.density().size() * static_cast<std::size_t>(nodes_per_piece));
  for (const auto& a : m.atoms()) {
    if (a.weight > 0.0) out.push_back({a.location, a.weight});
  }
  if (!m.density().empty()) {
    const auto& rule = gauss_legendre(nodes_per_piece);
    for (const auto& p : m.density()) {
      if (p.height == 0.0) continue;
      const double mid = 0.5 * (p.hi + p.lo);
      const double half = 0.5 * (p.hi - p.lo);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        out.push_back({mid + half * rule.nodes[i], p.height * half * rule.weights[i]});
      }
    }
  }
  return out;
}

template <class F>
double integrate(const SpectralMeasure& m, F&& f, int quad_points_per_piece = kDefaultQuadNodes) {
  if (quad_points_per_piece < 1) {
    throw ParameterError("integrate: quad_points_per_piece must be positive");
  }
  double acc = 0.0;
  for (const auto& node : quadrature_nodes(m, quad_points_per_piece)) {
    const double v = f(node.location);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "integrate: integrand is non-finite at s = " << node.location;
      throw EvaluationError(msg.str(), node.location);
    }
    acc += node.weight * v;
  }
  return acc;
}

namespace detail {

inline SpectralMeasure normalize_to(const SpectralMeasure& m, double target) {
  const double mass = total_mass(m);
  if (!(mass > 0.0)) {
    throw NormalizationError("normalize: measure has zero mass");
  }
  return m.scaled(target / mass);
}

inline void check_dimension(int d) {
  if (d < 2) {
    throw ParameterError("dimension must be >= 2");
  }
}

}  // namespace detail

/// Potential spectral measure normalized to total mass d.
inline SpectralMeasure normalize_potential(const SpectralMeasure& m, int d) {
  detail::check_dimension(d);
  return detail::normalize_to(m, static_cast<double>(d));
}

/// Solenoidal spectral measure normalized to total mass d/(d-1).
inline SpectralMeasure normalize_solenoidal(const SpectralMeasure& m, int d) {
  detail::check_dimension(d);
  return detail::normalize_to(m, static_cast<double>(d) / (d - 1));
}

}  // namespace ibf
