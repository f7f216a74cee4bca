#include "cproj/kinematics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "cproj/error.hpp"
#include "cproj/io.hpp"

namespace corrproj {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) {
    a += 2.0 * kPi;
  }
  return a;
}

Eigen::Matrix3d rotation(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// Angle about unit `axis` that carries p onto q, both projected onto the
// plane normal to the axis. Empty when either projection vanishes.
std::optional<double> angle_about(
    const Eigen::Vector3d& axis, const Eigen::Vector3d& p, const Eigen::Vector3d& q, double tol) {
  const Eigen::Vector3d pp = p - axis.dot(p) * axis;
  const Eigen::Vector3d qq = q - axis.dot(q) * axis;
  if (pp.norm() < tol || qq.norm() < tol) {
    return std::nullopt;
  }
  return std::atan2(axis.dot(pp.cross(qq)), pp.dot(qq));
}

double limit_violation(const JointSpec& j, double a) {
  if (a < j.min) {
    return j.min - a;
  }
  if (a > j.max) {
    return a - j.max;
  }
  return 0.0;
}

// Frame of every joint for the given angles.
std::vector<Eigen::Matrix3d> joint_frames(const SkeletonSchema& schema, const Eigen::VectorXd& angles) {
  const auto& joints = schema.joints();
  std::vector<Eigen::Matrix3d> frames(joints.size());
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const auto& spec = joints[j];
    const Eigen::Matrix3d local = rotation(spec.axis, angles(static_cast<Eigen::Index>(j)));
    frames[j] = spec.parent < 0 ? local : Eigen::Matrix3d(frames[static_cast<std::size_t>(spec.parent)] * local);
  }
  return frames;
}

Eigen::Matrix3d frame_of(int joint, const std::vector<Eigen::Matrix3d>& frames) {
  return joint < 0 ? Eigen::Matrix3d::Identity() : frames[static_cast<std::size_t>(joint)];
}

Eigen::Vector3d orthonormal_to(const Eigen::Vector3d& v, const Eigen::Vector3d& ref) {
  return (v - v.dot(ref) * ref).normalized();
}

Eigen::Matrix3d triad(const Eigen::Vector3d& d, const Eigen::Vector3d& e) {
  Eigen::Matrix3d m;
  const Eigen::Vector3d e2 = orthonormal_to(e, d);
  m.col(0) = d;
  m.col(1) = e2;
  m.col(2) = d.cross(e2);
  return m;
}

std::string joint_label(const SkeletonSchema& schema, int j) {
  return j < 0 ? std::string("<torso>") : schema.joints()[static_cast<std::size_t>(j)].name;
}

} // namespace

SkeletonSchema::SkeletonSchema(std::string name, std::vector<JointSpec> joints, std::vector<BoneSpec> bones,
    std::vector<IkGroup> ik_groups, std::vector<NamedPose> benchmark_poses)
    : name_(std::move(name)),
      joints_(std::move(joints)),
      bones_(std::move(bones)),
      ik_groups_(std::move(ik_groups)),
      benchmark_poses_(std::move(benchmark_poses)) {
  for (auto& j : joints_) {
    require(j.axis.norm() > 1e-12, ErrorKind::InvalidConfiguration, "joint " + j.name + " has a zero axis");
    j.axis.normalize();
  }
  for (auto& b : bones_) {
    require(b.rest.norm() > 1e-12, ErrorKind::InvalidConfiguration, "bone " + b.name + " has a zero rest direction");
    b.rest.normalize();
  }
  validate();
}

void SkeletonSchema::validate() const {
  const auto fail = [this](const std::string& msg) {
    throw_error(ErrorKind::InvalidConfiguration, "schema " + name_ + ": " + msg);
  };
  if (joints_.empty() || bones_.empty()) {
    fail("needs at least one joint and one bone");
  }
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    const auto& spec = joints_[j];
    if (spec.parent >= static_cast<int>(j) || spec.parent < -1) {
      fail("joint " + spec.name + " must come after its parent");
    }
    if (!(spec.min <= 0.0 && 0.0 <= spec.max)) {
      fail("joint " + spec.name + " limits must contain the rest angle 0");
    }
  }
  for (const auto& b : bones_) {
    if (b.joint < -1 || b.joint >= static_cast<int>(joints_.size())) {
      fail("bone " + b.name + " references an unknown joint");
    }
  }

  std::vector<int> group_of(joints_.size(), -1);
  for (std::size_t g = 0; g < ik_groups_.size(); ++g) {
    const auto& group = ik_groups_[g];
    if (group.joints.empty() || group.joints.size() > 2) {
      fail("IK groups hold one or two joints");
    }
    for (int j : group.joints) {
      if (j < 0 || j >= static_cast<int>(joints_.size())) {
        fail("IK group references an unknown joint");
      }
      if (group_of[static_cast<std::size_t>(j)] >= 0) {
        fail("joint " + joints_[static_cast<std::size_t>(j)].name + " appears in two IK groups");
      }
      group_of[static_cast<std::size_t>(j)] = static_cast<int>(g);
    }
    const int last = group.joints.back();
    if (group.joints.size() == 2 && joints_[static_cast<std::size_t>(group.joints[1])].parent != group.joints[0]) {
      fail("second joint of an IK group must be the child of the first");
    }
    if (group.bone < 0 || group.bone >= static_cast<int>(bones_.size()) ||
        bones_[static_cast<std::size_t>(group.bone)].joint != last) {
      fail("IK group bone must hang off the group's last joint");
    }
    if (group.twist_bone >= 0) {
      if (group.joints.size() != 2 || group.twist_bone >= static_cast<int>(bones_.size()) ||
          bones_[static_cast<std::size_t>(group.twist_bone)].joint != last) {
        fail("twist bone must belong to a two-joint group and hang off its last joint");
      }
      const auto& d0 = bones_[static_cast<std::size_t>(group.bone)].rest;
      const auto& e0 = bones_[static_cast<std::size_t>(group.twist_bone)].rest;
      if (d0.cross(e0).norm() < 1e-6) {
        fail("twist bone must not be parallel to the primary bone at rest");
      }
    }
    const auto& a_last = joints_[static_cast<std::size_t>(last)].axis;
    if (group.joints.size() == 2) {
      const auto& a_first = joints_[static_cast<std::size_t>(group.joints[0])].axis;
      if (a_first.cross(a_last).norm() < 0.5) {
        fail("IK group joint axes must be far from parallel");
      }
    }
    if (group.twist_bone < 0 && bones_[static_cast<std::size_t>(group.bone)].rest.cross(a_last).norm() < 1e-6) {
      fail("IK group bone lies on its last joint axis");
    }
    // Every ancestor must be solved by an earlier group (or be unobserved).
    for (int a = joints_[static_cast<std::size_t>(group.joints[0])].parent; a >= 0;
         a = joints_[static_cast<std::size_t>(a)].parent) {
      const int ga = group_of[static_cast<std::size_t>(a)];
      if (ga == static_cast<int>(g)) {
        fail("IK group contains its own ancestor");
      }
    }
  }
  for (std::size_t g = 0; g < ik_groups_.size(); ++g) {
    for (int a = joints_[static_cast<std::size_t>(ik_groups_[g].joints[0])].parent; a >= 0;
         a = joints_[static_cast<std::size_t>(a)].parent) {
      if (group_of[static_cast<std::size_t>(a)] > static_cast<int>(g)) {
        fail("IK groups must be ordered parents first");
      }
    }
  }

  if (!benchmark_poses_.empty() && benchmark_poses_.size() != kBenchmarkPoseCount) {
    fail("expected zero or eight benchmark poses, got " + std::to_string(benchmark_poses_.size()));
  }
  for (const auto& p : benchmark_poses_) {
    if (p.angles.size() != static_cast<Eigen::Index>(joints_.size())) {
      fail("benchmark pose " + p.name + " has the wrong number of angles");
    }
    if (!within_limits(HumanoidConfig{p.angles})) {
      fail("benchmark pose " + p.name + " violates joint limits");
    }
  }
}

std::optional<std::size_t> SkeletonSchema::joint_index(std::string_view name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    if (joints_[i].name == name) {
      return i;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> SkeletonSchema::bone_index(std::string_view name) const {
  for (std::size_t i = 0; i < bones_.size(); ++i) {
    if (bones_[i].name == name) {
      return i;
    }
  }
  return std::nullopt;
}

const NamedPose* SkeletonSchema::find_pose(std::string_view name) const {
  for (const auto& p : benchmark_poses_) {
    if (p.name == name) {
      return &p;
    }
  }
  return nullptr;
}

HumanoidConfig SkeletonSchema::rest_config() const {
  return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(joints_.size()))};
}

bool SkeletonSchema::within_limits(const HumanoidConfig& config, double tol) const {
  if (config.dim() != joints_.size()) {
    return false;
  }
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    const double a = config.angles(static_cast<Eigen::Index>(j));
    if (!(a >= joints_[j].min - tol && a <= joints_[j].max + tol)) {
      return false;
    }
  }
  return true;
}

HumanoidConfig SkeletonSchema::clamp(HumanoidConfig config) const {
  clamp_in_place(config.angles);
  return config;
}

void SkeletonSchema::clamp_in_place(Eigen::Ref<Eigen::VectorXd> angles) const {
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    auto& a = angles(static_cast<Eigen::Index>(j));
    a = std::clamp(a, joints_[j].min, joints_[j].max);
  }
}

Eigen::VectorXd SkeletonSchema::lower_limits() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(joints_.size()));
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    v(static_cast<Eigen::Index>(j)) = joints_[j].min;
  }
  return v;
}

Eigen::VectorXd SkeletonSchema::upper_limits() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(joints_.size()));
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    v(static_cast<Eigen::Index>(j)) = joints_[j].max;
  }
  return v;
}

std::string SkeletonSchema::digest() const {
  return io::digest(to_json(*this).dump());
}

SkeletonSchema builtin_schema(std::string_view name) {
  if (name == "desk") {
    return desk_schema();
  }
  if (name == "nao") {
    return nao_schema();
  }
  throw_error(ErrorKind::InvalidArgument, "unknown builtin schema '" + std::string(name) + "'");
}

SkeletonSchema load_schema(const std::string& name_or_path) {
  if (name_or_path == "desk" || name_or_path == "nao") {
    return builtin_schema(name_or_path);
  }
  require(std::filesystem::exists(name_or_path), ErrorKind::InvalidArgument,
      "schema '" + name_or_path + "' is neither builtin nor an existing file");
  return schema_from_json(io::read_json(name_or_path));
}

nlohmann::json to_json(const SkeletonSchema& schema) {
  using nlohmann::json;
  const auto vec3 = [](const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); };
  const auto name_or_null = [&](int j) -> json {
    return j < 0 ? json(nullptr) : json(schema.joints()[static_cast<std::size_t>(j)].name);
  };
  json joints = json::array();
  for (const auto& j : schema.joints()) {
    joints.push_back({{"name", j.name}, {"parent", name_or_null(j.parent)}, {"axis", vec3(j.axis)},
        {"min", j.min}, {"max", j.max}});
  }
  json bones = json::array();
  for (const auto& b : schema.bones()) {
    bones.push_back({{"name", b.name}, {"joint", name_or_null(b.joint)}, {"rest", vec3(b.rest)}});
  }
  json groups = json::array();
  for (const auto& g : schema.ik_groups()) {
    json names = json::array();
    for (int j : g.joints) {
      names.push_back(schema.joints()[static_cast<std::size_t>(j)].name);
    }
    json entry = {{"joints", names}, {"bone", schema.bones()[static_cast<std::size_t>(g.bone)].name}};
    if (g.twist_bone >= 0) {
      entry["twist_bone"] = schema.bones()[static_cast<std::size_t>(g.twist_bone)].name;
    }
    groups.push_back(std::move(entry));
  }
  json poses = json::array();
  for (const auto& p : schema.benchmark_poses()) {
    poses.push_back({{"name", p.name}, {"angles", std::vector<double>(p.angles.begin(), p.angles.end())}});
  }
  return {{"format", "cproj.schema"}, {"version", 1}, {"name", schema.name()}, {"joints", joints},
      {"bones", bones}, {"ik_groups", groups}, {"benchmark_poses", poses}};
}

SkeletonSchema schema_from_json(const nlohmann::json& doc) {
  io::expect_format(doc, "cproj.schema", 1);
  try {
    const auto vec3 = [](const nlohmann::json& a) {
      require(a.is_array() && a.size() == 3, ErrorKind::Format, "expected a 3-vector");
      return Eigen::Vector3d(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    std::vector<JointSpec> joints;
    const auto find_joint = [&](const nlohmann::json& ref) -> int {
      if (ref.is_null()) {
        return -1;
      }
      const auto n = ref.get<std::string>();
      for (std::size_t i = 0; i < joints.size(); ++i) {
        if (joints[i].name == n) {
          return static_cast<int>(i);
        }
      }
      throw_error(ErrorKind::Format, "unknown joint '" + n + "' (joints must be listed parents first)");
    };
    for (const auto& j : doc.at("joints")) {
      JointSpec spec;
      spec.name = j.at("name").get<std::string>();
      spec.parent = find_joint(j.at("parent"));
      spec.axis = vec3(j.at("axis"));
      spec.min = j.at("min").get<double>();
      spec.max = j.at("max").get<double>();
      joints.push_back(std::move(spec));
    }
    std::vector<BoneSpec> bones;
    for (const auto& b : doc.at("bones")) {
      bones.push_back({b.at("name").get<std::string>(), find_joint(b.at("joint")), vec3(b.at("rest"))});
    }
    const auto find_bone = [&](const std::string& n) {
      for (std::size_t i = 0; i < bones.size(); ++i) {
        if (bones[i].name == n) {
          return static_cast<int>(i);
        }
      }
      throw_error(ErrorKind::Format, "unknown bone '" + n + "'");
    };
    std::vector<IkGroup> groups;
    for (const auto& g : doc.at("ik_groups")) {
      IkGroup group;
      for (const auto& n : g.at("joints")) {
        group.joints.push_back(find_joint(n));
      }
      group.bone = find_bone(g.at("bone").get<std::string>());
      if (g.contains("twist_bone")) {
        group.twist_bone = find_bone(g.at("twist_bone").get<std::string>());
      }
      groups.push_back(std::move(group));
    }
    std::vector<NamedPose> poses;
    for (const auto& p : doc.at("benchmark_poses")) {
      const auto v = p.at("angles").get<std::vector<double>>();
      poses.push_back({p.at("name").get<std::string>(),
          Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))});
    }
    return SkeletonSchema(doc.at("name").get<std::string>(), std::move(joints), std::move(bones), std::move(groups),
        std::move(poses));
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorKind::Format, std::string("malformed schema: ") + e.what());
  }
}

HumanPose forward_kinematics(const HumanoidConfig& config, const SkeletonSchema& schema) {
  require(config.dim() == schema.config_dim(), ErrorKind::InvalidArgument,
      "config has dimension " + std::to_string(config.dim()) + ", schema expects " +
          std::to_string(schema.config_dim()));
  for (std::size_t j = 0; j < schema.config_dim(); ++j) {
    const double a = config.angles(static_cast<Eigen::Index>(j));
    const auto& spec = schema.joints()[j];
    require(std::isfinite(a) && a >= spec.min - 1e-9 && a <= spec.max + 1e-9, ErrorKind::InvalidArgument,
        "joint " + spec.name + " = " + std::to_string(a) + " is outside [" + std::to_string(spec.min) + ", " +
            std::to_string(spec.max) + "]");
  }
  const auto frames = joint_frames(schema, config.angles);
  HumanPose pose{Eigen::VectorXd(static_cast<Eigen::Index>(schema.human_dim()))};
  for (std::size_t b = 0; b < schema.bones().size(); ++b) {
    const auto& bone = schema.bones()[b];
    pose.data.segment<3>(static_cast<Eigen::Index>(3 * b)) = frame_of(bone.joint, frames) * bone.rest;
  }
  return pose;
}

HumanPose normalize_bones(const Eigen::Ref<const Eigen::VectorXd>& raw) {
  require(raw.size() % 3 == 0, ErrorKind::InvalidArgument, "pose dimension must be a multiple of 3");
  HumanPose pose{raw};
  for (Eigen::Index b = 0; b < raw.size() / 3; ++b) {
    auto seg = pose.data.segment<3>(3 * b);
    const double n = seg.norm();
    require(std::isfinite(n) && n > 1e-12, ErrorKind::InvalidArgument,
        "bone " + std::to_string(b) + " is zero-length or non-finite");
    seg /= n;
  }
  return pose;
}

bool is_valid_pose(const HumanPose& pose, const SkeletonSchema& schema, double tol) {
  if (pose.dim() != schema.human_dim() || !pose.data.allFinite()) {
    return false;
  }
  for (std::size_t b = 0; b < pose.bone_count(); ++b) {
    if (std::abs(pose.bone(b).norm() - 1.0) > tol) {
      return false;
    }
  }
  return true;
}

HumanoidConfig inverse_kinematics(const HumanPose& pose, const SkeletonSchema& schema, const IkOptions& options) {
  require(pose.dim() == schema.human_dim(), ErrorKind::InvalidArgument,
      "pose has dimension " + std::to_string(pose.dim()) + ", schema expects " + std::to_string(schema.human_dim()));
  if (options.previous != nullptr) {
    require(options.previous->dim() == schema.config_dim(), ErrorKind::InvalidArgument,
        "previous config has the wrong dimension");
  }
  const HumanPose unit = normalize_bones(pose.data);
  const double tol = options.degenerate_tol;
  const auto& joints = schema.joints();
  const auto& bones = schema.bones();

  Eigen::VectorXd angles = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(schema.config_dim()));
  const auto fallback = [&](int j) {
    return options.previous != nullptr ? options.previous->angles(j) : 0.0;
  };

  for (const auto& group : schema.ik_groups()) {
    const auto frames = joint_frames(schema, angles);
    const int first = group.joints.front();
    const Eigen::Matrix3d parent = frame_of(joints[static_cast<std::size_t>(first)].parent, frames);
    const Eigen::Vector3d d = parent.transpose() * unit.bone(static_cast<std::size_t>(group.bone));
    const Eigen::Vector3d& d0 = bones[static_cast<std::size_t>(group.bone)].rest;

    if (group.joints.size() == 1) {
      const auto theta = angle_about(joints[static_cast<std::size_t>(first)].axis, d0, d, tol);
      if (!theta) {
        throw DegeneratePoseError(static_cast<std::size_t>(group.bone),
            "bone " + bones[static_cast<std::size_t>(group.bone)].name + " lies on the axis of joint " +
                joint_label(schema, first));
      }
      angles(first) = *theta;
      continue;
    }

    const int second = group.joints[1];
    const Eigen::Vector3d& a1 = joints[static_cast<std::size_t>(first)].axis;
    const Eigen::Vector3d& a2 = joints[static_cast<std::size_t>(second)].axis;

    if (group.twist_bone >= 0) {
      // Two observed bones fix the whole local rotation.
      const Eigen::Vector3d e = parent.transpose() * unit.bone(static_cast<std::size_t>(group.twist_bone));
      if (d.cross(e).norm() < 1e-6) {
        throw DegeneratePoseError(static_cast<std::size_t>(group.twist_bone),
            "bone " + bones[static_cast<std::size_t>(group.twist_bone)].name + " is parallel to bone " +
                bones[static_cast<std::size_t>(group.bone)].name);
      }
      const Eigen::Vector3d& e0 = bones[static_cast<std::size_t>(group.twist_bone)].rest;
      const Eigen::Matrix3d local = triad(d, e) * triad(d0, e0).transpose();
      const double t1 = angle_about(a1, a2, local * a2, tol).value_or(fallback(first));
      const Eigen::Matrix3d rest_of = rotation(a1, t1).transpose() * local;
      const Eigen::Vector3d e0n = orthonormal_to(e0, d0);
      const Eigen::Vector3d& v0 = d0.cross(a2).norm() >= e0n.cross(a2).norm() ? d0 : e0n;
      const double t2 = angle_about(a2, v0, rest_of * v0, tol).value_or(fallback(second));
      angles(first) = t1;
      angles(second) = t2;
      continue;
    }

    // Swing decomposition: a1 . R(a2, t2) d0 must equal a1 . d.
    const Eigen::Vector3d p_par = a2.dot(d0) * a2;
    const Eigen::Vector3d p_perp = d0 - p_par;
    const double base = a1.dot(p_par);
    const double cos_coeff = a1.dot(p_perp);
    const double sin_coeff = a1.dot(a2.cross(p_perp));
    const double amp = std::hypot(cos_coeff, sin_coeff);
    const double phase = std::atan2(sin_coeff, cos_coeff);
    const double ratio = std::clamp((a1.dot(d) - base) / amp, -1.0, 1.0);
    const double spread = std::acos(ratio);

    struct Candidate {
      double t1, t2, violation, residual;
    };
    std::array<Candidate, 2> cands{};
    const std::array<double, 2> t2s = {wrap_angle(phase + spread), wrap_angle(phase - spread)};
    const auto& j1 = joints[static_cast<std::size_t>(first)];
    const auto& j2 = joints[static_cast<std::size_t>(second)];
    for (std::size_t c = 0; c < 2; ++c) {
      const double t2 = t2s[c];
      const Eigen::Vector3d v = rotation(a2, t2) * d0;
      const double t1 = angle_about(a1, v, d, tol).value_or(fallback(first));
      const double violation = limit_violation(j1, t1) + limit_violation(j2, t2);
      const double c1 = std::clamp(t1, j1.min, j1.max);
      const double c2 = std::clamp(t2, j2.min, j2.max);
      const double residual = (rotation(a1, c1) * rotation(a2, c2) * d0 - d).norm();
      cands[c] = {t1, t2, violation, residual};
    }
    const auto better = [](const Candidate& x, const Candidate& y) {
      if (x.violation != y.violation) {
        return x.violation < y.violation;
      }
      if (std::abs(x.residual - y.residual) > 1e-12) {
        return x.residual < y.residual;
      }
      return std::abs(x.t1) + std::abs(x.t2) < std::abs(y.t1) + std::abs(y.t2);
    };
    const auto& best = better(cands[1], cands[0]) ? cands[1] : cands[0];
    angles(first) = best.t1;
    angles(second) = best.t2;
  }

  HumanoidConfig out{angles};
  schema.clamp_in_place(out.angles);
  return out;
}

} // namespace corrproj
