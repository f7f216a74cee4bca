#include "cproj/metrics.hpp"

#include <charconv>
#include <numbers>

#include "cproj/error.hpp"

namespace corrproj {

namespace {

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

} // namespace

DeviationReport deviation(const HumanoidConfig& projected, const HumanoidConfig& ground_truth) {
  require(projected.dim() == ground_truth.dim(), ErrorKind::InvalidArgument,
      "deviation of configs with dimensions " + std::to_string(projected.dim()) + " and " +
          std::to_string(ground_truth.dim()));
  require(projected.dim() > 0, ErrorKind::InvalidArgument, "deviation of empty configs");
  constexpr double kDeg = 180.0 / std::numbers::pi;
  DeviationReport r;
  r.per_joint = (projected.angles - ground_truth.angles).cwiseAbs() * kDeg;
  r.m_max = r.per_joint.maxCoeff();
  r.m_avg = r.per_joint.sum() / static_cast<double>(r.per_joint.size());
  return r;
}

std::string metrics_csv_header() {
  return "frame,t,m_max,m_avg";
}

std::string metrics_csv_row(std::size_t frame, double t, const DeviationReport& report) {
  return std::to_string(frame) + "," + number(t) + "," + number(report.m_max) + "," + number(report.m_avg);
}

} // namespace corrproj
