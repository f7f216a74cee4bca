#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cproj/kinematics.hpp"
#include "cproj/mean_shift.hpp"
#include "cproj/recording.hpp"

namespace corrproj {

struct CorrespondencePair {
  HumanPose human;
  HumanoidConfig humanoid;
};

/// Sparse correspondence set extracted from a recording.
struct LandmarkSet {
  SkeletonSchema schema;
  std::vector<CorrespondencePair> pairs;
  double bandwidth = 0.0;
  std::string recording_digest;
  /// Modes dropped because IK failed or they collapsed onto an earlier
  /// landmark after renormalization.
  std::size_t dropped = 0;

  std::size_t size() const noexcept {
    return pairs.size();
  }
  /// Human side, one landmark per row (N x m).
  Eigen::MatrixXd human_matrix() const;
  /// Humanoid side, one landmark per row (N x n).
  Eigen::MatrixXd humanoid_matrix() const;
};

using CorrespondenceFn = std::function<HumanoidConfig(const HumanPose&)>;

struct LandmarkOptions {
  double bandwidth = 0.0; // <= 0 selects default_bandwidth()
  std::size_t max_iter = 500;
  double tol = 1e-6;
  double support = 3.0;
};

/// 20th percentile of pairwise distances over an evenly strided subsample of
/// at most 1000 rows.
double default_bandwidth(const Eigen::MatrixXd& points);

/// Mean-shift modes of the recording, renormalized to unit bones and paired
/// through `correspondence` (inverse kinematics when empty).
LandmarkSet build_landmarks(const Recording& recording, const SkeletonSchema& schema, const LandmarkOptions& options,
    const CorrespondenceFn& correspondence = {});

/// Landmark set made of the given pairs as-is (no clustering).
LandmarkSet landmarks_from_pairs(const SkeletonSchema& schema, std::vector<CorrespondencePair> pairs);

struct BandwidthSearch {
  double bandwidth = 0.0;
  std::size_t mode_count = 0;
  std::size_t runs = 0;
};

/// Searches the bandwidth (log scale) until mean shift yields within
/// `rel_tol` of `target` modes or `max_runs` is reached; returns the closest
/// run.
BandwidthSearch bandwidth_for_count(const Eigen::MatrixXd& points, std::size_t target, const LandmarkOptions& options,
    double rel_tol = 0.05, std::size_t max_runs = 14);

nlohmann::json to_json(const LandmarkSet& set);
LandmarkSet landmarks_from_json(const nlohmann::json& doc);
void save_landmarks(const std::filesystem::path& path, const LandmarkSet& set);
LandmarkSet load_landmarks(const std::filesystem::path& path);

} // namespace corrproj
