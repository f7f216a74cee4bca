#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace corrproj {

struct MeanShiftOptions {
  double bandwidth = 1.0;
  std::size_t max_iter = 500;
  /// Convergence threshold on the update step length.
  double tol = 1e-6;
  /// Kernel support in bandwidths; weights beyond it are treated as zero.
  /// Infinity gives the untruncated Gaussian.
  double support = 3.0;
};

struct MeanShiftResult {
  /// One mode per row, in first-discovery order.
  Eigen::MatrixXd modes;
  /// Mode index of every input point.
  std::vector<std::size_t> labels;
  /// Number of input points assigned to each mode.
  std::vector<std::size_t> mode_sizes;
  /// Indices of points that hit max_iter before converging; they are merged
  /// from their last iterate.
  std::vector<std::size_t> non_converged;
};

/// Gaussian-kernel mean shift. Every point is iterated to convergence;
/// converged points within bandwidth / 2 of an existing mode join it,
/// otherwise they found a new mode at their converged location.
MeanShiftResult mean_shift(const Eigen::MatrixXd& points, const MeanShiftOptions& options);

/// Convenience overload returning modes only.
Eigen::MatrixXd mean_shift(const Eigen::MatrixXd& points, double bandwidth, std::size_t max_iter, double tol);

/// A single mean-shift update of `x` against `points` (rows).
Eigen::VectorXd mean_shift_step(const Eigen::MatrixXd& points, const Eigen::Ref<const Eigen::VectorXd>& x,
    double bandwidth, double support = 3.0);

} // namespace corrproj
