#pragma once

#include <Eigen/Dense>

namespace ibf {

/// Ordered tracer positions (one column per tracer) at a time stamp. Column
/// order is the tracer identity and never changes during a simulation.
struct PointCloud {
  Eigen::MatrixXd positions;
  double time = 0.0;

  Eigen::Index size() const noexcept { return positions.cols(); }
  int dim() const noexcept { return static_cast<int>(positions.rows()); }
};

}  // namespace ibf
