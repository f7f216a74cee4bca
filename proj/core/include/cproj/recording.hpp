#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cproj/kinematics.hpp"

namespace corrproj {

struct Frame {
  double t = 0.0; // seconds, strictly increasing within a recording
  Eigen::VectorXd pose;
};

/// A captured motion: one flattened human pose per frame.
///
/// On disk this is JSON Lines. The first line is a header
/// {"format":"cproj.recording","version":1,"dim":m,"schema":name}; every
/// following line is {"t":seconds,"pose":[m decimals]}.
struct Recording {
  std::string schema;
  std::vector<Frame> frames;

  std::size_t dim() const noexcept {
    return frames.empty() ? 0 : static_cast<std::size_t>(frames.front().pose.size());
  }
  /// One pose per row.
  Eigen::MatrixXd as_matrix() const;
  std::string digest() const;
};

Recording parse_recording(std::istream& in);
void write_recording(std::ostream& out, const Recording& recording);
Recording read_recording(const std::filesystem::path& path);
void save_recording(const std::filesystem::path& path, const Recording& recording);

struct SynthesisOptions {
  double duration_s = 300.0;
  double fps = 10.0;
  std::uint64_t seed = 1;
  /// Probability that the next keyframe is a perturbed benchmark pose.
  double pose_affinity = 0.5;
  /// Probability that the next keyframe is near the rest pose.
  double rest_affinity = 0.2;
  /// Joint-space perturbation (radians, standard deviation) around targets.
  double keyframe_noise = 0.15;
  /// Peak joint speed between keyframes, rad/s.
  double joint_speed = 1.2;
  /// Longest pause at a keyframe, seconds.
  double max_hold_s = 0.5;
  /// Per-component Gaussian noise added to bone vectors before renormalizing.
  double sensor_noise = 0.0;
};

struct SyntheticMotion {
  Recording recording;
  std::vector<HumanoidConfig> configs; // ground-truth config of every frame
};

/// Stand-in for a few minutes of capture: a performer moving between the
/// rest pose, perturbed benchmark poses and free configurations, with
/// minimum-jerk transitions sampled at `fps`.
SyntheticMotion synthesize_recording(const SkeletonSchema& schema, const SynthesisOptions& options);

} // namespace corrproj
