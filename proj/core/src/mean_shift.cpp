#include "cproj/mean_shift.hpp"

#include <cmath>

#include "cproj/error.hpp"
#include "cproj/knn.hpp"

namespace corrproj {

namespace {

// Weighted mean of the neighbors of x; returns false when none are in range.
bool shift(const KdTree& tree, const Eigen::Ref<const Eigen::VectorXd>& x, double bandwidth, double support,
    std::vector<Neighbor>& scratch, Eigen::Ref<Eigen::VectorXd> out) {
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  out.setZero();
  double total = 0.0;
  if (std::isfinite(support)) {
    tree.radius_into(x, support * bandwidth, scratch);
    for (const auto& nb : scratch) {
      const double w = std::exp(-nb.distance * nb.distance * inv);
      out += w * tree.point(nb.index);
      total += w;
    }
  } else {
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const auto p = tree.point(i);
      const double w = std::exp(-(p - x).squaredNorm() * inv);
      out += w * p;
      total += w;
    }
  }
  if (total <= 0.0) {
    return false;
  }
  out /= total;
  return true;
}

} // namespace

MeanShiftResult mean_shift(const Eigen::MatrixXd& points, const MeanShiftOptions& options) {
  require(points.rows() >= 1 && points.cols() >= 1, ErrorKind::InvalidArgument, "mean shift needs at least one point");
  require(options.bandwidth > 0.0 && std::isfinite(options.bandwidth), ErrorKind::InvalidArgument,
      "mean shift bandwidth must be positive");
  require(options.support > 0.0, ErrorKind::InvalidArgument, "mean shift support must be positive");
  require(points.allFinite(), ErrorKind::InvalidArgument, "mean shift points contain NaN or Inf");

  const KdTree tree(points);
  const auto d = points.cols();
  const double merge = 0.5 * options.bandwidth;

  MeanShiftResult result;
  result.labels.resize(static_cast<std::size_t>(points.rows()));
  std::vector<Eigen::VectorXd> modes;
  std::vector<Neighbor> scratch;
  Eigen::VectorXd x(d);
  Eigen::VectorXd next(d);

  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    x = points.row(i).transpose();
    bool converged = false;
    for (std::size_t it = 0; it < options.max_iter; ++it) {
      if (!shift(tree, x, options.bandwidth, options.support, scratch, next)) {
        converged = true;
        break;
      }
      const double step = (next - x).norm();
      x.swap(next);
      if (step < options.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      result.non_converged.push_back(static_cast<std::size_t>(i));
    }
    // Join the nearest existing mode within the merge radius.
    std::size_t label = modes.size();
    double best = merge;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const double dist = (modes[m] - x).norm();
      if (dist < best) {
        best = dist;
        label = m;
      }
    }
    if (label == modes.size()) {
      modes.push_back(x);
      result.mode_sizes.push_back(0);
    }
    result.labels[static_cast<std::size_t>(i)] = label;
    ++result.mode_sizes[label];
  }

  result.modes.resize(static_cast<Eigen::Index>(modes.size()), d);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    result.modes.row(static_cast<Eigen::Index>(m)) = modes[m].transpose();
  }
  return result;
}

Eigen::MatrixXd mean_shift(const Eigen::MatrixXd& points, double bandwidth, std::size_t max_iter, double tol) {
  MeanShiftOptions o;
  o.bandwidth = bandwidth;
  o.max_iter = max_iter;
  o.tol = tol;
  return mean_shift(points, o).modes;
}

Eigen::VectorXd mean_shift_step(const Eigen::MatrixXd& points, const Eigen::Ref<const Eigen::VectorXd>& x,
    double bandwidth, double support) {
  require(bandwidth > 0.0, ErrorKind::InvalidArgument, "mean shift bandwidth must be positive");
  const KdTree tree(points);
  std::vector<Neighbor> scratch;
  Eigen::VectorXd out(x.size());
  if (!shift(tree, x, bandwidth, support, scratch, out)) {
    return x;
  }
  return out;
}

} // namespace corrproj
