#pragma once

// Descriptors for the deterministic drift v(x) in F(t, x) = M(t, x) + t v(x).
// Evaluation lives in field_sampler.hpp; this header carries data only so the
// model type can hold one.

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ibf {

struct NoDrift {};

/// v(x) = A x.
struct LinearDrift {
  Eigen::MatrixXd a;
};

/// v(x) = scale * V(x) with V the mean inward field on the sphere of radius rho.
/// resolution 0 selects a per-dimension default sphere rule.
struct RadialRkhsDrift {
  double rho = 1.0;
  double scale = 1.0;
  int resolution = 0;
};

/// Multilinear interpolation on a rectilinear grid, constant outside it.
/// `values` is d x (n_0 * ... * n_{d-1}); the last axis varies fastest.
struct TableDrift {
  std::vector<std::vector<double>> axes;
  Eigen::MatrixXd values;
};

using DriftField = std::variant<NoDrift, LinearDrift, RadialRkhsDrift, TableDrift>;

inline std::string drift_kind(const DriftField& v) {
  struct Visitor {
    std::string operator()(const NoDrift&) const { return "none"; }
    std::string operator()(const LinearDrift&) const { return "linear"; }
    std::string operator()(const RadialRkhsDrift&) const { return "radial_rkhs"; }
    std::string operator()(const TableDrift&) const { return "custom_table"; }
  };
  return std::visit(Visitor{}, v);
}

/// -v, used to turn a squeezing field into an expanding one.
inline DriftField negated(const DriftField& v) {
  struct Visitor {
    DriftField operator()(const NoDrift& x) const { return x; }
    DriftField operator()(const LinearDrift& x) const { return LinearDrift{-x.a}; }
    DriftField operator()(const RadialRkhsDrift& x) const {
      return RadialRkhsDrift{x.rho, -x.scale, x.resolution};
    }
    DriftField operator()(const TableDrift& x) const { return TableDrift{x.axes, -x.values}; }
  };
  return std::visit(Visitor{}, v);
}

}  // namespace ibf
