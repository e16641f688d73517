#pragma once

// Gating control functions: head pose -> scalar gate on the residual
// correction. All kinds consume one effective angle,
// theta = asin(max(|sin pitch|, |sin yaw|, |sin roll|)).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "larnet/so3.hpp"

namespace larnet {

/// Head pose in radians. Yaw turns about z, pitch about y, roll about x of
/// the face frame (x forward, y lateral, z up).
struct PoseAngles {
  double pitch = 0.0;
  double yaw = 0.0;
  double roll = 0.0;

  bool operator==(const PoseAngles&) const = default;

  PoseAngles operator-() const { return {-pitch, -yaw, -roll}; }
};

/// Left-right image flip: reflection y -> -y conjugates yaw and roll.
inline PoseAngles mirror(const PoseAngles& p) { return {p.pitch, -p.yaw, -p.roll}; }

inline void validate_pose(const PoseAngles& p) {
  constexpr double limit = kPi / 2.0;
  for (double a : {p.pitch, p.yaw, p.roll}) {
    if (!(std::abs(a) <= limit)) {
      throw Error(ErrorCode::AngleOutOfRange, "pose angle outside [-pi/2, pi/2]: " + std::to_string(a));
    }
  }
}

/// max(|sin pitch|, |sin yaw|, |sin roll|), the sine of the effective angle.
inline double effective_sine(const PoseAngles& p) {
  validate_pose(p);
  return std::max({std::abs(std::sin(p.pitch)), std::abs(std::sin(p.yaw)), std::abs(std::sin(p.roll))});
}

inline double effective_angle(const PoseAngles& p) { return std::asin(effective_sine(p)); }

enum class GateKind { Identity, Linear, Sigmoid, AbsSin };

inline constexpr std::array<GateKind, 4> kAllGateKinds{GateKind::Identity, GateKind::Linear, GateKind::Sigmoid,
                                                       GateKind::AbsSin};

constexpr std::string_view to_string(GateKind k) {
  switch (k) {
    case GateKind::Identity: return "identity";
    case GateKind::Linear: return "linear";
    case GateKind::Sigmoid: return "sigmoid";
    case GateKind::AbsSin: return "abs_sin";
  }
  return "?";
}

inline std::optional<GateKind> parse_gate_kind(std::string_view name) {
  for (GateKind k : kAllGateKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

/// Identity: 1. Linear: 2 theta / pi. Sigmoid: logistic(4 theta / pi - 1),
/// which spans (0.269, 0.731) rather than [0, 1]. AbsSin: |sin theta|.
inline double gate(GateKind kind, const PoseAngles& p) {
  const double s = effective_sine(p);
  switch (kind) {
    case GateKind::Identity: return 1.0;
    case GateKind::Linear: return 2.0 * std::asin(s) / kPi;
    case GateKind::Sigmoid: return 1.0 / (1.0 + std::exp(-(4.0 * std::asin(s) / kPi - 1.0)));
    // |sin(asin s)| = s; returned directly so the endpoints are exact.
    case GateKind::AbsSin: return s;
  }
  return 1.0;
}

/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline RotationMatrix pose_to_rotation(const PoseAngles& p) {
  return exp_map(Vec3(0, 0, p.yaw)) * exp_map(Vec3(0, p.pitch, 0)) * exp_map(Vec3(p.roll, 0, 0));
}

inline AxisAngle pose_to_axis_angle(const PoseAngles& p) { return log_map(pose_to_rotation(p)); }

}  // namespace larnet
