#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

namespace corrproj {

/// A human pose as concatenated unit bone directions (dimension 3 x bones).
struct HumanPose {
  Eigen::VectorXd data;

  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(data.size());
  }
  std::size_t bone_count() const noexcept {
    return dim() / 3;
  }
  Eigen::Vector3d bone(std::size_t i) const {
    return data.segment<3>(static_cast<Eigen::Index>(3 * i));
  }
};

/// A humanoid configuration: joint angles in radians, ordered as in the schema.
struct HumanoidConfig {
  Eigen::VectorXd angles;

  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(angles.size());
  }
};

struct JointSpec {
  std::string name;
  int parent = -1; // index of the parent joint, -1 for the torso frame
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ(); // in the parent frame
  double min = 0.0;
  double max = 0.0;
};

struct BoneSpec {
  std::string name;
  int joint = -1; // joint frame the bone is rigidly attached to, -1 for torso
  Eigen::Vector3d rest = Eigen::Vector3d::UnitZ(); // direction at the all-zero config
};

/// A block of one or two consecutive joints recovered analytically from one
/// observed bone, optionally with a second `twist_bone` that pins the
/// rotation about the first bone's axis.
struct IkGroup {
  std::vector<int> joints;
  int bone = -1;
  int twist_bone = -1;
};

struct NamedPose {
  std::string name;
  Eigen::VectorXd angles;
};

/// Immutable kinematic description shared by the human descriptor and the
/// humanoid: joints in topological order, bones hung off joint frames, the IK
/// decomposition, and either none or exactly eight named benchmark poses.
///
/// Frame convention: x forward, y left, z up. The all-zero configuration is
/// the rest pose and must lie inside every joint's limits.
class SkeletonSchema {
 public:
  static constexpr std::size_t kBenchmarkPoseCount = 8;

  SkeletonSchema(std::string name, std::vector<JointSpec> joints, std::vector<BoneSpec> bones,
      std::vector<IkGroup> ik_groups, std::vector<NamedPose> benchmark_poses);

  const std::string& name() const noexcept {
    return name_;
  }
  const std::vector<JointSpec>& joints() const noexcept {
    return joints_;
  }
  const std::vector<BoneSpec>& bones() const noexcept {
    return bones_;
  }
  const std::vector<IkGroup>& ik_groups() const noexcept {
    return ik_groups_;
  }
  const std::vector<NamedPose>& benchmark_poses() const noexcept {
    return benchmark_poses_;
  }

  /// m: flattened human pose dimension.
  std::size_t human_dim() const noexcept {
    return 3 * bones_.size();
  }
  /// n: number of joints.
  std::size_t config_dim() const noexcept {
    return joints_.size();
  }

  std::optional<std::size_t> joint_index(std::string_view name) const;
  std::optional<std::size_t> bone_index(std::string_view name) const;
  const NamedPose* find_pose(std::string_view name) const;

  HumanoidConfig rest_config() const;
  bool within_limits(const HumanoidConfig& config, double tol = 1e-9) const;
  HumanoidConfig clamp(HumanoidConfig config) const;
  void clamp_in_place(Eigen::Ref<Eigen::VectorXd> angles) const;

  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;

  /// Stable content digest of the JSON form.
  std::string digest() const;

 private:
  void validate() const;

  std::string name_;
  std::vector<JointSpec> joints_;
  std::vector<BoneSpec> bones_;
  std::vector<IkGroup> ik_groups_;
  std::vector<NamedPose> benchmark_poses_;
};

/// 10-DOF upper body with 8 bones (m = 24, n = 10): head yaw/pitch and, per
/// arm, shoulder pitch/roll and elbow yaw/roll. Rest directions: torso up,
/// gaze forward, arms down, thumbs forward.
SkeletonSchema desk_schema();

/// Best-effort 26-DOF NAO-like humanoid with the 19-bone Kinect descriptor.
/// Joints the descriptor cannot observe (wrist yaw, hands, hip yaw-pitch,
/// ankle roll) are recovered as 0.
SkeletonSchema nao_schema();

/// "desk" or "nao".
SkeletonSchema builtin_schema(std::string_view name);

nlohmann::json to_json(const SkeletonSchema& schema);
SkeletonSchema schema_from_json(const nlohmann::json& doc);

/// Loads a builtin schema by name, or a schema file by path.
SkeletonSchema load_schema(const std::string& name_or_path);

/// Bone directions of the humanoid posed at `config`. Throws invalid-argument
/// when a joint is outside its limits.
HumanPose forward_kinematics(const HumanoidConfig& config, const SkeletonSchema& schema);

struct IkOptions {
  /// Angles kept for joints whose axis is undefined (e.g. elbow yaw with a
  /// fully extended elbow). Zero when absent.
  const HumanoidConfig* previous = nullptr;
  /// Projected-vector norm below which an axis counts as undefined.
  double degenerate_tol = 1e-9;
};

/// Analytic inverse kinematics. Bones are renormalized before solving and the
/// result is clamped to joint limits. Joints outside every IK group come back
/// as 0. Throws DegeneratePoseError when a required axis cannot be resolved.
HumanoidConfig inverse_kinematics(const HumanPose& pose, const SkeletonSchema& schema, const IkOptions& options = {});

/// Renormalizes every bone to unit length. Throws invalid-argument on a
/// zero-length or non-finite bone.
HumanPose normalize_bones(const Eigen::Ref<const Eigen::VectorXd>& raw);

/// Checks dimension, finiteness and unit bone norms within `tol`.
bool is_valid_pose(const HumanPose& pose, const SkeletonSchema& schema, double tol = 1e-6);

} // namespace corrproj
