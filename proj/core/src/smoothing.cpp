#include "cproj/smoothing.hpp"

#include <cmath>

#include "cproj/error.hpp"

namespace corrproj {

Smoother::Smoother(SmootherParams params) : params_(params) {
  require(params_.alpha >= 0.0 && params_.alpha <= 1.0, ErrorKind::InvalidArgument, "alpha must lie in [0, 1]");
  require(params_.gamma >= 0.0 && params_.gamma <= 1.0, ErrorKind::InvalidArgument, "gamma must lie in [0, 1]");
  require(params_.eta >= 0.0, ErrorKind::InvalidArgument, "eta must be >= 0");
}

Eigen::VectorXd Smoother::step(const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(!y.hasNaN(), ErrorKind::NumericFailure, "smoother input contains NaN");
  require(y.allFinite(), ErrorKind::NumericFailure, "smoother input is not finite");
  if (!initialized_) {
    level_ = y;
    trend_ = Eigen::VectorXd::Zero(y.size());
    initialized_ = true;
    frozen_ = false;
    return level_;
  }
  require(y.size() == level_.size(), ErrorKind::InvalidArgument, "smoother input changed dimension");

  const double a = params_.alpha;
  const double g = params_.gamma;
  Eigen::VectorXd level = a * y + (1.0 - a) * (level_ + trend_);
  const bool deadband = std::isfinite(params_.eta) && (level - level_).norm() < params_.eta;
  if (deadband) {
    trend_ *= (1.0 - g);
    frozen_ = true;
    return level_;
  }
  trend_ = g * (level - level_) + (1.0 - g) * trend_;
  level_ = std::move(level);
  frozen_ = false;
  return level_;
}

void Smoother::reset() {
  initialized_ = false;
  frozen_ = false;
  level_.resize(0);
  trend_.resize(0);
}

} // namespace corrproj
