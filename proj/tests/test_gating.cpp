#include <gtest/gtest.h>

#include <random>

#include "larnet/gating.hpp"

namespace larnet {
namespace {

PoseAngles random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kPi / 2, kPi / 2);
  return {u(rng), u(rng), u(rng)};
}

TEST(EffectiveAngle, Cases) {
  EXPECT_EQ(effective_angle({0, 0, 0}), 0.0);
  EXPECT_EQ(effective_angle({0, kPi / 2, 0}), kPi / 2);
  EXPECT_NEAR(effective_angle({kPi / 6, kPi / 4, 0}), kPi / 4, 1e-15);
  EXPECT_NEAR(effective_angle({0, 0.1, -0.7}), 0.7, 1e-15);
}

TEST(EffectiveAngle, RejectsOutOfRange) {
  for (const PoseAngles& p : {PoseAngles{0, 1.6, 0}, PoseAngles{-2, 0, 0}, PoseAngles{0, 0, std::nan("")}}) {
    try {
      effective_angle(p);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::AngleOutOfRange);
    }
    EXPECT_THROW(gate(GateKind::AbsSin, p), Error);
  }
}

TEST(Gate, TableValues) {
  EXPECT_EQ(gate(GateKind::AbsSin, {0, 0, 0}), 0.0);
  EXPECT_EQ(gate(GateKind::AbsSin, {0, kPi / 2, 0}), 1.0);
  EXPECT_EQ(gate(GateKind::AbsSin, {0, -kPi / 2, 0}), 1.0);
  EXPECT_EQ(gate(GateKind::AbsSin, {0, 0, kPi / 2}), 1.0);
  EXPECT_NEAR(gate(GateKind::Linear, {0, kPi / 4, 0}), 0.5, 1e-15);
  EXPECT_EQ(gate(GateKind::Identity, {0, 0, 0}), 1.0);
  EXPECT_EQ(gate(GateKind::AbsSin, {0, -kPi / 3, 0}), gate(GateKind::AbsSin, {0, kPi / 3, 0}));
  EXPECT_NEAR(gate(GateKind::Sigmoid, {0, 0, 0}), 1.0 / (1.0 + std::exp(1.0)), 1e-15);
  EXPECT_NEAR(gate(GateKind::Sigmoid, {0, kPi / 2, 0}), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(Gate, RangeSymmetryMonotonicity) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 1000; ++i) {
    const PoseAngles p = random_pose(rng);
    for (GateKind k : kAllGateKinds) {
      EXPECT_EQ(gate(k, p), gate(k, -p));
      EXPECT_EQ(gate(k, p), gate(k, mirror(p)));
    }
    const double w = gate(GateKind::AbsSin, p);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
    const double s = gate(GateKind::Sigmoid, p);
    EXPECT_GT(s, 0.268);
    EXPECT_LT(s, 0.732);
  }
  double prev_abs = -1.0, prev_lin = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const PoseAngles p{0, (kPi / 2) * i / 1000.0, 0};
    EXPECT_GE(gate(GateKind::AbsSin, p), prev_abs);
    EXPECT_GE(gate(GateKind::Linear, p), prev_lin);
    prev_abs = gate(GateKind::AbsSin, p);
    prev_lin = gate(GateKind::Linear, p);
  }
}

TEST(GateKind, NamesRoundTrip) {
  for (GateKind k : kAllGateKinds) EXPECT_EQ(parse_gate_kind(to_string(k)), k);
  EXPECT_FALSE(parse_gate_kind("prelu").has_value());
}

TEST(PoseRotation, SingleAxisAndComposition) {
  const double yaw = 0.4;
  EXPECT_LT((pose_to_axis_angle({0, yaw, 0}).vector() - Vec3(0, 0, yaw)).norm(), 1e-15);
  EXPECT_LT((pose_to_axis_angle({0.3, 0, 0}).vector() - Vec3(0, 0.3, 0)).norm(), 1e-15);
  const PoseAngles p{0.2, -0.5, 0.1};
  const Mat3 expected = exp_map(Vec3(0, 0, -0.5)).matrix() * exp_map(Vec3(0, 0.2, 0)).matrix() *
                        exp_map(Vec3(0.1, 0, 0)).matrix();
  EXPECT_LT((pose_to_rotation(p).matrix() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PoseRotation, MirrorConjugatesByReflection) {
  std::mt19937_64 rng(42);
  const Mat3 flip = Eigen::Vector3d(1, -1, 1).asDiagonal();
  for (int i = 0; i < 100; ++i) {
    const PoseAngles p = random_pose(rng);
    const Mat3 lhs = pose_to_rotation(mirror(p)).matrix();
    const Mat3 rhs = flip * pose_to_rotation(p).matrix() * flip;
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
  }
}

}  // namespace
}  // namespace larnet
