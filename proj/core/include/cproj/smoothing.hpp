#pragma once

#include <Eigen/Core>

#include "cproj/kinematics.hpp"

namespace corrproj {

struct SmootherParams {
  double alpha = 0.75; // level gain, [0, 1]
  double gamma = 0.3; // trend gain, [0, 1]
  double eta = 0.15; // deadband on the level update norm (radians); 0 or +inf disables it
};

/// Double exponential smoothing with a deadband, for one stream of
/// configurations:
///
///   s_t = alpha y_t + (1 - alpha)(s_{t-1} + b_{t-1})
///   b_t = gamma (s_t - s_{t-1}) + (1 - gamma) b_{t-1}
///
/// When ||s_t - s_{t-1}|| < eta the level stays frozen at s_{t-1} (which is
/// also the output) and the trend decays to (1 - gamma) b_{t-1}. The first
/// frame initializes s = y, b = 0 and passes through.
///
/// Not thread-safe; use one smoother per stream.
class Smoother {
 public:
  explicit Smoother(SmootherParams params = {});

  const SmootherParams& params() const noexcept {
    return params_;
  }
  bool initialized() const noexcept {
    return initialized_;
  }
  /// True when the previous step was absorbed by the deadband.
  bool frozen() const noexcept {
    return frozen_;
  }
  const Eigen::VectorXd& level() const noexcept {
    return level_;
  }
  const Eigen::VectorXd& trend() const noexcept {
    return trend_;
  }

  /// Throws numeric-failure on NaN input (state unchanged) and
  /// invalid-argument on a dimension change.
  Eigen::VectorXd step(const Eigen::Ref<const Eigen::VectorXd>& y);
  HumanoidConfig step(const HumanoidConfig& y) {
    return {step(y.angles)};
  }

  void reset();

 private:
  SmootherParams params_;
  bool initialized_ = false;
  bool frozen_ = false;
  Eigen::VectorXd level_;
  Eigen::VectorXd trend_;
};

} // namespace corrproj
