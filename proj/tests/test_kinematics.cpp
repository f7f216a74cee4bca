#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cproj/error.hpp"
#include "cproj/kinematics.hpp"
#include "test_util.hpp"

using namespace corrproj;

namespace {

HumanoidConfig random_config(const SkeletonSchema& schema, std::mt19937_64& gen, double margin = 0.0) {
  HumanoidConfig c{Eigen::VectorXd(static_cast<Eigen::Index>(schema.config_dim()))};
  for (std::size_t j = 0; j < schema.config_dim(); ++j) {
    const auto& spec = schema.joints()[j];
    std::uniform_real_distribution<double> u(spec.min + margin, spec.max - margin);
    c.angles(static_cast<Eigen::Index>(j)) = u(gen);
  }
  return c;
}

std::array<double, 3> arr(const Eigen::Vector3d& v) {
  return {v.x(), v.y(), v.z()};
}

// Bone directions by composing joint rotations from the torso outwards.
oracle::Vec fk_oracle(const SkeletonSchema& schema, const Eigen::VectorXd& angles) {
  std::vector<oracle::Mat3> frames;
  for (std::size_t j = 0; j < schema.joints().size(); ++j) {
    const auto& spec = schema.joints()[j];
    const auto local = oracle::rotation(arr(spec.axis.normalized()), angles(static_cast<Eigen::Index>(j)));
    frames.push_back(spec.parent < 0 ? local : oracle::multiply(frames[static_cast<std::size_t>(spec.parent)], local));
  }
  oracle::Vec out;
  for (const auto& bone : schema.bones()) {
    const oracle::Mat3 f = bone.joint < 0 ? oracle::Mat3{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}
                                          : frames[static_cast<std::size_t>(bone.joint)];
    const auto v = oracle::apply(f, arr(bone.rest));
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

} // namespace

TEST(Kinematics, DeskDimensions) {
  const auto s = desk_schema();
  EXPECT_EQ(s.human_dim(), 24u);
  EXPECT_EQ(s.config_dim(), 10u);
  EXPECT_EQ(s.benchmark_poses().size(), SkeletonSchema::kBenchmarkPoseCount);
  for (const auto& p : s.benchmark_poses()) {
    EXPECT_TRUE(s.within_limits(HumanoidConfig{p.angles})) << p.name;
  }
}

TEST(Kinematics, NaoDimensions) {
  const auto s = nao_schema();
  EXPECT_EQ(s.human_dim(), 57u);
  EXPECT_EQ(s.config_dim(), 26u);
}

TEST(Kinematics, RestPoseMatchesConvention) {
  const auto s = desk_schema();
  const auto pose = forward_kinematics(s.rest_config(), s);
  const auto idx = [&](const char* name) { return *s.bone_index(name); };
  EXPECT_TRUE(pose.bone(idx("torso")).isApprox(Eigen::Vector3d::UnitZ()));
  EXPECT_TRUE(pose.bone(idx("head")).isApprox(Eigen::Vector3d::UnitX()));
  EXPECT_TRUE(pose.bone(idx("l_upper_arm")).isApprox(-Eigen::Vector3d::UnitZ()));
  EXPECT_TRUE(pose.bone(idx("r_forearm")).isApprox(-Eigen::Vector3d::UnitZ()));
  EXPECT_TRUE(pose.bone(idx("l_thumb")).isApprox(Eigen::Vector3d::UnitX()));
}

TEST(Kinematics, ShoulderPitchRaisesArmForward) {
  const auto s = desk_schema();
  auto c = s.rest_config();
  c.angles(static_cast<Eigen::Index>(*s.joint_index("l_shoulder_pitch"))) = M_PI / 2;
  const auto pose = forward_kinematics(c, s);
  const auto upper = pose.bone(*s.bone_index("l_upper_arm"));
  EXPECT_LT((upper - Eigen::Vector3d::UnitX()).norm(), 1e-12);
  const auto expect = oracle::rotation({0.0, -1.0, 0.0}, M_PI / 2);
  const auto v = oracle::apply(expect, {0.0, 0.0, -1.0});
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(upper(i), v[static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST(Kinematics, ForwardMatchesRotationComposition) {
  for (const auto& s : {desk_schema(), nao_schema()}) {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 200; ++trial) {
      const auto c = random_config(s, gen);
      const auto pose = forward_kinematics(c, s);
      const auto ref = fk_oracle(s, c.angles);
      ASSERT_EQ(ref.size(), pose.dim());
      for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_NEAR(pose.data(static_cast<Eigen::Index>(i)), ref[i], 1e-12);
      }
      EXPECT_TRUE(is_valid_pose(pose, s));
    }
  }
}

TEST(Kinematics, DistalJointLeavesProximalBones) {
  const auto s = nao_schema();
  std::mt19937_64 gen(2);
  auto c = random_config(s, gen);
  const auto wrist = static_cast<Eigen::Index>(*s.joint_index("LWristYaw"));
  const auto hand = static_cast<Eigen::Index>(*s.joint_index("LHand"));
  c.angles(hand) = 0.0;
  auto c2 = c;
  c2.angles(wrist) = c.angles(wrist) + (c.angles(wrist) > 0 ? -1.0 : 1.0);
  const auto a = forward_kinematics(c, s);
  const auto b = forward_kinematics(c2, s);
  EXPECT_LT((a.data - b.data).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kinematics, InverseRoundTrip) {
  const auto s = desk_schema();
  std::mt19937_64 gen(1);
  const auto roll_l = static_cast<Eigen::Index>(*s.joint_index("l_elbow_roll"));
  const auto roll_r = static_cast<Eigen::Index>(*s.joint_index("r_elbow_roll"));
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto c = random_config(s, gen);
    // Keep away from the straight-elbow singularity.
    c.angles(roll_l) = std::max(c.angles(roll_l), 0.05);
    c.angles(roll_r) = std::max(c.angles(roll_r), 0.05);
    const auto back = inverse_kinematics(forward_kinematics(c, s), s);
    worst = std::max(worst, (back.angles - c.angles).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Kinematics, RestPoseInvertsToZero) {
  for (const auto& s : {desk_schema(), nao_schema()}) {
    const auto c = inverse_kinematics(forward_kinematics(s.rest_config(), s), s);
    EXPECT_LT(c.angles.cwiseAbs().maxCoeff(), 1e-12) << s.name();
  }
}

TEST(Kinematics, StraightElbowKeepsPreviousYaw) {
  const auto s = nao_schema();
  std::mt19937_64 gen(4);
  auto c = s.rest_config();
  const auto yaw = static_cast<Eigen::Index>(*s.joint_index("LElbowYaw"));
  const auto sp = static_cast<Eigen::Index>(*s.joint_index("LShoulderPitch"));
  c.angles(sp) = 0.6;
  c.angles(yaw) = 0.7;
  const auto pose = forward_kinematics(c, s);
  EXPECT_EQ(inverse_kinematics(pose, s).angles(yaw), 0.0);
  auto previous = s.rest_config();
  previous.angles(yaw) = 0.4;
  IkOptions opt;
  opt.previous = &previous;
  EXPECT_EQ(inverse_kinematics(pose, s, opt).angles(yaw), 0.4);
}

TEST(Kinematics, ParallelThumbIsDegenerate) {
  const auto s = desk_schema();
  auto pose = forward_kinematics(s.rest_config(), s);
  const auto fore = *s.bone_index("l_forearm");
  const auto thumb = *s.bone_index("l_thumb");
  pose.data.segment<3>(static_cast<Eigen::Index>(3 * thumb)) = pose.bone(fore);
  try {
    inverse_kinematics(pose, s);
    FAIL() << "expected a degenerate pose";
  } catch (const DegeneratePoseError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegeneratePose);
    EXPECT_EQ(e.bone(), thumb);
  }
}

TEST(Kinematics, ForwardRejectsOutOfLimits) {
  const auto s = desk_schema();
  auto c = s.rest_config();
  c.angles(0) = 5.0;
  EXPECT_THROW(forward_kinematics(c, s), Error);
  EXPECT_THROW(forward_kinematics(HumanoidConfig{Eigen::VectorXd::Zero(3)}, s), Error);
  EXPECT_FALSE(s.within_limits(c));
  EXPECT_TRUE(s.within_limits(s.clamp(c)));
}

TEST(Kinematics, InverseClampsToLimits) {
  const auto s = desk_schema();
  std::mt19937_64 gen(6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd raw(24);
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
      raw(i) = n(gen);
    }
    try {
      EXPECT_TRUE(s.within_limits(inverse_kinematics(normalize_bones(raw), s)));
    } catch (const DegeneratePoseError&) {
    }
  }
}

TEST(Kinematics, NormalizeBones) {
  Eigen::VectorXd raw(6);
  raw << 3.0, 0.0, 4.0, 0.0, -2.0, 0.0;
  const auto p = normalize_bones(raw);
  EXPECT_NEAR(p.bone(0).norm(), 1.0, 1e-15);
  EXPECT_NEAR(p.data(0), 0.6, 1e-15);
  EXPECT_NEAR(p.data(4), -1.0, 1e-15);
  raw.segment<3>(3).setZero();
  EXPECT_THROW(normalize_bones(raw), Error);
  EXPECT_THROW(normalize_bones(Eigen::VectorXd::Ones(4)), Error);
}

TEST(Kinematics, SchemaJsonRoundTrip) {
  for (const auto& s : {desk_schema(), nao_schema()}) {
    const auto back = schema_from_json(to_json(s));
    EXPECT_EQ(back.digest(), s.digest());
    EXPECT_EQ(back.name(), s.name());
    EXPECT_EQ(back.benchmark_poses().size(), s.benchmark_poses().size());
  }
  EXPECT_EQ(builtin_schema("desk").digest(), desk_schema().digest());
  EXPECT_THROW(builtin_schema("robot"), Error);
  EXPECT_THROW(load_schema("/nonexistent/schema.json"), Error);
}

TEST(Kinematics, SchemaValidation) {
  std::vector<JointSpec> joints{{"a", -1, Eigen::Vector3d::UnitZ(), 0.1, 1.0}};
  std::vector<BoneSpec> bones{{"b", 0, Eigen::Vector3d::UnitX()}};
  // Rest (all zero) is outside [0.1, 1].
  EXPECT_THROW(SkeletonSchema("bad", joints, bones, {{{0}, 0, -1}}, {}), Error);
  joints[0].min = -1.0;
  EXPECT_NO_THROW(SkeletonSchema("ok", joints, bones, {{{0}, 0, -1}}, {}));
  // A benchmark pose list must be empty or have exactly eight entries.
  EXPECT_THROW(SkeletonSchema("bad", joints, bones, {{{0}, 0, -1}}, {{"p", Eigen::VectorXd::Zero(1)}}), Error);
}
