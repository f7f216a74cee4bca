#pragma once

#include <string>

#include <Eigen/Core>

#include "cproj/kinematics.hpp"

namespace corrproj {

/// Joint-space error between a projected and a ground-truth configuration,
/// in degrees.
struct DeviationReport {
  double m_max = 0.0; // (180/pi) ||r* - r_gt||_inf
  double m_avg = 0.0; // (180/pi) ||r* - r_gt||_1 / n
  Eigen::VectorXd per_joint;
};

DeviationReport deviation(const HumanoidConfig& projected, const HumanoidConfig& ground_truth);

/// "frame,t,m_max,m_avg"
std::string metrics_csv_header();
std::string metrics_csv_row(std::size_t frame, double t, const DeviationReport& report);

} // namespace corrproj
