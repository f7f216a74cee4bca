#include <initializer_list>
#include <string>
#include <utility>

#include "cproj/kinematics.hpp"

namespace corrproj {

namespace {

using V3 = Eigen::Vector3d;

struct PoseEntry {
  const char* name;
  std::initializer_list<std::pair<const char*, double>> angles;
};

class SchemaBuilder {
 public:
  int joint(const std::string& name, int parent, V3 axis, double min, double max) {
    joints_.push_back({name, parent, axis, min, max});
    return static_cast<int>(joints_.size()) - 1;
  }
  int bone(const std::string& name, int joint, V3 rest) {
    bones_.push_back({name, joint, rest});
    return static_cast<int>(bones_.size()) - 1;
  }
  void group(std::vector<int> joints, int bone, int twist = -1) {
    groups_.push_back({std::move(joints), bone, twist});
  }
  void pose(const PoseEntry& entry) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(joints_.size()));
    for (const auto& [joint_name, value] : entry.angles) {
      for (std::size_t j = 0; j < joints_.size(); ++j) {
        if (joints_[j].name == joint_name) {
          a(static_cast<Eigen::Index>(j)) = value;
        }
      }
    }
    poses_.push_back({entry.name, std::move(a)});
  }
  SkeletonSchema build(std::string name) {
    return SkeletonSchema(std::move(name), std::move(joints_), std::move(bones_), std::move(groups_), std::move(poses_));
  }

 private:
  std::vector<JointSpec> joints_;
  std::vector<BoneSpec> bones_;
  std::vector<IkGroup> groups_;
  std::vector<NamedPose> poses_;
};

} // namespace

SkeletonSchema desk_schema() {
  SchemaBuilder s;
  const int head_yaw = s.joint("head_yaw", -1, V3::UnitZ(), -1.0, 1.0);
  const int head_pitch = s.joint("head_pitch", head_yaw, V3::UnitY(), -0.5, 0.5);
  const int l_sp = s.joint("l_shoulder_pitch", -1, -V3::UnitY(), -1.0, 2.0);
  const int l_sr = s.joint("l_shoulder_roll", l_sp, V3::UnitX(), -0.3, 1.3);
  const int l_ey = s.joint("l_elbow_yaw", l_sr, V3::UnitZ(), -1.5, 1.5);
  const int l_er = s.joint("l_elbow_roll", l_ey, -V3::UnitY(), 0.0, 1.5);
  const int r_sp = s.joint("r_shoulder_pitch", -1, -V3::UnitY(), -1.0, 2.0);
  const int r_sr = s.joint("r_shoulder_roll", r_sp, -V3::UnitX(), -0.3, 1.3);
  const int r_ey = s.joint("r_elbow_yaw", r_sr, -V3::UnitZ(), -1.5, 1.5);
  const int r_er = s.joint("r_elbow_roll", r_ey, -V3::UnitY(), 0.0, 1.5);

  s.bone("torso", -1, V3::UnitZ());
  const int head = s.bone("head", head_pitch, V3::UnitX());
  const int l_upper = s.bone("l_upper_arm", l_sr, -V3::UnitZ());
  const int l_fore = s.bone("l_forearm", l_er, -V3::UnitZ());
  const int l_thumb = s.bone("l_thumb", l_er, V3::UnitX());
  const int r_upper = s.bone("r_upper_arm", r_sr, -V3::UnitZ());
  const int r_fore = s.bone("r_forearm", r_er, -V3::UnitZ());
  const int r_thumb = s.bone("r_thumb", r_er, V3::UnitX());

  s.group({head_yaw, head_pitch}, head);
  s.group({l_sp, l_sr}, l_upper);
  s.group({l_ey, l_er}, l_fore, l_thumb);
  s.group({r_sp, r_sr}, r_upper);
  s.group({r_ey, r_er}, r_fore, r_thumb);

  const PoseEntry poses[] = {
      {"POSE_1", {{"l_shoulder_pitch", 1.5}, {"l_shoulder_roll", 0.1}, {"l_elbow_roll", 0.1},
                     {"r_shoulder_pitch", 1.5}, {"r_shoulder_roll", 0.1}, {"r_elbow_roll", 0.1}}},
      {"POSE_2", {{"l_shoulder_roll", 1.25}, {"l_elbow_roll", 0.1}, {"r_shoulder_roll", 1.25}, {"r_elbow_roll", 0.1}}},
      {"POSE_3", {{"head_yaw", 0.3}, {"head_pitch", -0.2}, {"l_shoulder_pitch", 1.9}, {"l_shoulder_roll", 0.2},
                     {"l_elbow_yaw", 0.3}, {"l_elbow_roll", 0.3}, {"r_shoulder_roll", 0.1}, {"r_elbow_roll", 0.2}}},
      {"POSE_4", {{"head_yaw", -0.3}, {"head_pitch", -0.2}, {"l_shoulder_roll", 0.1}, {"l_elbow_roll", 0.2},
                     {"r_shoulder_pitch", 1.9}, {"r_shoulder_roll", 0.2}, {"r_elbow_yaw", 0.3}, {"r_elbow_roll", 0.3}}},
      {"POSE_5", {{"head_pitch", 0.1}, {"l_shoulder_pitch", 0.2}, {"l_shoulder_roll", 1.1}, {"l_elbow_yaw", 0.8},
                     {"l_elbow_roll", 1.4}, {"r_shoulder_pitch", 0.2}, {"r_shoulder_roll", 1.1}, {"r_elbow_yaw", 0.8},
                     {"r_elbow_roll", 1.4}}},
      {"POSE_6", {{"head_pitch", 0.3}, {"l_shoulder_pitch", 0.6}, {"l_shoulder_roll", 0.3}, {"l_elbow_yaw", 1.0},
                     {"l_elbow_roll", 1.3}, {"r_shoulder_pitch", 0.6}, {"r_shoulder_roll", 0.3}, {"r_elbow_yaw", 1.0},
                     {"r_elbow_roll", 1.3}}},
      {"POSE_7", {{"head_yaw", 0.5}, {"l_shoulder_pitch", 0.3}, {"l_shoulder_roll", 1.0}, {"l_elbow_yaw", -0.8},
                     {"l_elbow_roll", 1.2}, {"r_shoulder_roll", 0.1}, {"r_elbow_roll", 0.1}}},
      {"POSE_8", {{"head_yaw", -0.6}, {"head_pitch", 0.2}, {"l_shoulder_pitch", 1.2}, {"l_shoulder_roll", 0.6},
                     {"l_elbow_yaw", -0.5}, {"l_elbow_roll", 0.7}, {"r_shoulder_pitch", -0.5}, {"r_shoulder_roll", 0.4},
                     {"r_elbow_yaw", 0.6}, {"r_elbow_roll", 0.9}}},
  };
  for (const auto& p : poses) {
    s.pose(p);
  }
  return s.build("desk");
}

SkeletonSchema nao_schema() {
  SchemaBuilder s;
  const V3 x = V3::UnitX();
  const V3 y = V3::UnitY();
  const V3 z = V3::UnitZ();

  const int head_yaw = s.joint("HeadYaw", -1, z, -2.0857, 2.0857);
  const int head_pitch = s.joint("HeadPitch", head_yaw, y, -0.6720, 0.5149);

  struct Arm {
    int sp, sr, ey, er, wy, hand;
  };
  const auto arm = [&](const std::string& side, double mirror) {
    Arm a{};
    a.sp = s.joint(side + "ShoulderPitch", -1, -y, -2.0857, 2.0857);
    a.sr = s.joint(side + "ShoulderRoll", a.sp, mirror * x, -0.3142, 1.3265);
    a.ey = s.joint(side + "ElbowYaw", a.sr, mirror * z, -2.0857, 2.0857);
    a.er = s.joint(side + "ElbowRoll", a.ey, -y, 0.0, 1.5446);
    a.wy = s.joint(side + "WristYaw", a.er, mirror * z, -1.8238, 1.8238);
    a.hand = s.joint(side + "Hand", a.wy, mirror * x, 0.0, 1.0);
    return a;
  };
  const Arm la = arm("L", 1.0);
  const Arm ra = arm("R", -1.0);

  struct Leg {
    int hyp, hr, hp, kp, ap, ar;
  };
  const auto leg = [&](const std::string& side, double mirror) {
    Leg l{};
    l.hyp = s.joint(side + "HipYawPitch", -1, V3(0.0, 1.0, mirror).normalized(), -1.1453, 0.7408);
    l.hr = s.joint(side + "HipRoll", l.hyp, mirror * x, -0.3794, 0.7904);
    l.hp = s.joint(side + "HipPitch", l.hr, y, -1.5358, 0.4840);
    l.kp = s.joint(side + "KneePitch", l.hp, y, -0.0923, 2.1125);
    l.ap = s.joint(side + "AnklePitch", l.kp, y, -1.1895, 0.9228);
    l.ar = s.joint(side + "AnkleRoll", l.ap, mirror * x, -0.3976, 0.7690);
    return l;
  };
  const Leg ll = leg("L", 1.0);
  const Leg rl = leg("R", -1.0);

  s.bone("spine_lower", -1, z);
  s.bone("spine_upper", -1, z);
  const int neck = s.bone("neck_head", head_pitch, z);
  struct ArmBones {
    int upper, fore;
  };
  const auto arm_bones = [&](const std::string& side, const Arm& a, double mirror) {
    s.bone(side + "_clavicle", -1, mirror * y);
    ArmBones b{};
    b.upper = s.bone(side + "_upper_arm", a.sr, -z);
    b.fore = s.bone(side + "_forearm", a.er, -z);
    s.bone(side + "_hand", a.hand, -z);
    return b;
  };
  const ArmBones lab = arm_bones("l", la, 1.0);
  const ArmBones rab = arm_bones("r", ra, -1.0);
  struct LegBones {
    int thigh, shin, foot;
  };
  const auto leg_bones = [&](const std::string& side, const Leg& l, double mirror) {
    s.bone(side + "_hip", -1, mirror * y);
    LegBones b{};
    b.thigh = s.bone(side + "_thigh", l.hp, -z);
    b.shin = s.bone(side + "_shin", l.kp, -z);
    b.foot = s.bone(side + "_foot", l.ap, x);
    return b;
  };
  const LegBones llb = leg_bones("l", ll, 1.0);
  const LegBones rlb = leg_bones("r", rl, -1.0);

  s.group({head_yaw, head_pitch}, neck);
  s.group({la.sp, la.sr}, lab.upper);
  s.group({la.ey, la.er}, lab.fore);
  s.group({ra.sp, ra.sr}, rab.upper);
  s.group({ra.ey, ra.er}, rab.fore);
  s.group({ll.hr, ll.hp}, llb.thigh);
  s.group({ll.kp}, llb.shin);
  s.group({ll.ap}, llb.foot);
  s.group({rl.hr, rl.hp}, rlb.thigh);
  s.group({rl.kp}, rlb.shin);
  s.group({rl.ap}, rlb.foot);

  const PoseEntry poses[] = {
      {"POSE_1", {{"LShoulderPitch", 1.5}, {"LShoulderRoll", 0.1}, {"LElbowRoll", 0.1}, {"RShoulderPitch", 1.5},
                     {"RShoulderRoll", 0.1}, {"RElbowRoll", 0.1}}},
      {"POSE_2", {{"LShoulderRoll", 1.25}, {"LElbowRoll", 0.1}, {"RShoulderRoll", 1.25}, {"RElbowRoll", 0.1}}},
      {"POSE_3", {{"HeadYaw", 0.3}, {"HeadPitch", -0.2}, {"LShoulderPitch", 1.9}, {"LShoulderRoll", 0.2},
                     {"LElbowYaw", 0.3}, {"LElbowRoll", 0.3}}},
      {"POSE_4", {{"HeadYaw", -0.3}, {"HeadPitch", -0.2}, {"RShoulderPitch", 1.9}, {"RShoulderRoll", 0.2},
                     {"RElbowYaw", 0.3}, {"RElbowRoll", 0.3}}},
      {"POSE_5", {{"LShoulderRoll", 1.1}, {"LElbowYaw", 0.8}, {"LElbowRoll", 1.4}, {"RShoulderRoll", 1.1},
                     {"RElbowYaw", 0.8}, {"RElbowRoll", 1.4}}},
      {"POSE_6", {{"HeadPitch", 0.3}, {"LShoulderPitch", 0.6}, {"LShoulderRoll", 0.3}, {"LElbowYaw", 1.0},
                     {"LElbowRoll", 1.3}, {"RShoulderPitch", 0.6}, {"RShoulderRoll", 0.3}, {"RElbowYaw", 1.0},
                     {"RElbowRoll", 1.3}}},
      {"POSE_7", {{"HeadYaw", 0.5}, {"HeadPitch", 0.1}, {"LShoulderPitch", 0.3}, {"LShoulderRoll", 1.0},
                     {"LElbowYaw", -0.8}, {"LElbowRoll", 1.2}, {"LHipPitch", -0.4}, {"LKneePitch", 0.8},
                     {"LAnklePitch", -0.4}}},
      {"POSE_8", {{"HeadYaw", -0.6}, {"HeadPitch", 0.2}, {"LShoulderPitch", 1.2}, {"LShoulderRoll", 0.6},
                     {"LElbowYaw", -0.5}, {"LElbowRoll", 0.7}, {"RShoulderPitch", -0.5}, {"RShoulderRoll", 0.4},
                     {"RElbowYaw", 0.6}, {"RElbowRoll", 0.9}, {"RHipRoll", 0.2}, {"RHipPitch", -0.3}}},
  };
  for (const auto& p : poses) {
    s.pose(p);
  }
  return s.build("nao");
}

} // namespace corrproj
