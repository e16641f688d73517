#pragma once

// SO(3) and its Lie algebra so(3).
//
// Rotations are stored as dense 3x3 matrices; the algebra element is the
// rotation vector phi = theta * psi (unit axis psi, angle theta). The
// exponential map is Rodrigues' formula, the logarithm recovers theta from
// the trace and the axis from the skew-symmetric part (or from the symmetric
// part close to theta = pi, where the skew part vanishes).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "larnet/error.hpp"

namespace larnet {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

namespace so3_detail {
inline constexpr double kExpSeriesAngle = 1e-8;
inline constexpr double kJacobianSeriesAngle = 1e-6;
inline constexpr double kNearPiWindow = 1e-4;
inline constexpr double kSingularWindow = 1e-6;
}  // namespace so3_detail

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

/// max |m m^T - I|
inline double orthogonality_defect(const Mat3& m) {
  return (m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
}

/// An element of SO(3). Construction validates orthogonality and det = +1.
class RotationMatrix {
 public:
  static constexpr double kTolerance = 1e-9;

  RotationMatrix() : m_(Mat3::Identity()) {}

  explicit RotationMatrix(const Mat3& m, double tol = kTolerance) : m_(m) {
    if (!m.allFinite()) {
      throw Error(ErrorCode::NotARotation, "matrix has non-finite entries");
    }
    if (orthogonality_defect(m) > tol || std::abs(m.determinant() - 1.0) > tol) {
      throw Error(ErrorCode::NotARotation, "matrix is not in SO(3)");
    }
  }

  static RotationMatrix identity() { return RotationMatrix(); }

  const Mat3& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  RotationMatrix inverse() const { return RotationMatrix(Unchecked{}, m_.transpose()); }

  /// Matrix product this * other (apply `other` first).
  RotationMatrix operator*(const RotationMatrix& other) const {
    return RotationMatrix(Unchecked{}, m_ * other.m_);
  }

  double trace() const { return m_.trace(); }
  double defect() const { return orthogonality_defect(m_); }

  bool operator==(const RotationMatrix& other) const { return m_ == other.m_; }

 private:
  struct Unchecked {};
  RotationMatrix(Unchecked, const Mat3& m) : m_(m) {}

  friend RotationMatrix exp_map_unchecked(const Vec3&);
  friend RotationMatrix project_to_rotation(const Mat3&);

  Mat3 m_;
};

/// Rotation vector phi = theta * psi.
class AxisAngle {
 public:
  AxisAngle() : phi_(Vec3::Zero()) {}
  explicit AxisAngle(const Vec3& phi) : phi_(phi) {}
  AxisAngle(double x, double y, double z) : phi_(x, y, z) {}

  static AxisAngle from_axis_angle(const Vec3& axis, double angle) {
    return AxisAngle(axis.normalized() * angle);
  }

  const Vec3& vector() const { return phi_; }
  double angle() const { return phi_.norm(); }

  /// Unit axis; zero vector for the zero rotation.
  Vec3 axis() const {
    const double theta = angle();
    return theta > 0.0 ? Vec3(phi_ / theta) : Vec3::Zero();
  }

  /// theta in [0, pi/2], where exp/log are mutually inverse without ambiguity.
  bool in_bijective_range() const { return angle() <= kPi / 2.0; }

  bool operator==(const AxisAngle& other) const { return phi_ == other.phi_; }

 private:
  Vec3 phi_;
};

inline Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

inline Vec3 vee(const Mat3& m, double tol = 1e-9) {
  if ((m + m.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw Error(ErrorCode::NotSkewSymmetric, "vee of a non skew-symmetric matrix");
  }
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

/// Lie bracket on so(3) as the matrix commutator.
inline Mat3 lie_bracket(const Mat3& a, const Mat3& b) { return a * b - b * a; }

inline RotationMatrix exp_map_unchecked(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 K = hat(phi);
  if (theta < so3_detail::kExpSeriesAngle) {
    return RotationMatrix(RotationMatrix::Unchecked{}, Mat3::Identity() + K + 0.5 * K * K);
  }
  const Vec3 psi = phi / theta;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Mat3 R = c * Mat3::Identity() + (1.0 - c) * psi * psi.transpose() + s * hat(psi);
  return RotationMatrix(RotationMatrix::Unchecked{}, R);
}

inline RotationMatrix exp_map(const AxisAngle& phi) {
  if (!phi.vector().allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "exp_map of non-finite rotation vector");
  }
  return exp_map_unchecked(phi.vector());
}

inline RotationMatrix exp_map(const Vec3& phi) { return exp_map(AxisAngle(phi)); }

/// Nearest rotation in the Frobenius sense (polar factor via SVD).
inline RotationMatrix project_to_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return RotationMatrix(RotationMatrix::Unchecked{}, U * V.transpose());
}

/// Principal logarithm, theta in [0, pi].
inline AxisAngle log_map(const RotationMatrix& r) {
  const Mat3& R = r.matrix();
  const double tr = R.trace();
  if (tr < -1.0 - 1e-9 || tr > 3.0 + 1e-9) {
    throw Error(ErrorCode::NumericalDomain, "trace outside [-1, 3]");
  }
  const double cos_theta = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  // skew part = sin(theta) * psi
  const Vec3 skew = 0.5 * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double sin_theta = skew.norm();
  // atan2 of the two trace/skew invariants is the arccos of the trace
  // argument, but without arccos' loss of precision near 0.
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < so3_detail::kExpSeriesAngle) {
    return AxisAngle(skew);
  }
  if (theta > kPi - so3_detail::kNearPiWindow) {
    // (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) psi psi^T
    const Mat3 B = 0.5 * (R + R.transpose()) - cos_theta * Mat3::Identity();
    Eigen::Index j = 0;
    B.diagonal().maxCoeff(&j);
    Vec3 psi = B.col(j);
    psi.normalize();
    if (psi.dot(skew) < 0.0) psi = -psi;
    return AxisAngle(theta * psi);
  }
  return AxisAngle(theta * skew / sin_theta);
}

/// J_l(phi) = sum_{n>=0} hat(phi)^n / (n+1)!
inline Mat3 left_jacobian(const AxisAngle& phi) {
  const Vec3& v = phi.vector();
  const double theta = v.norm();
  const Mat3 K = hat(v);
  if (theta < so3_detail::kJacobianSeriesAngle) {
    return Mat3::Identity() + 0.5 * K + (1.0 / 6.0) * K * K;
  }
  const Vec3 psi = v / theta;
  const double sinc = std::sin(theta) / theta;
  return sinc * Mat3::Identity() + (1.0 - sinc) * psi * psi.transpose() +
         ((1.0 - std::cos(theta)) / theta) * hat(psi);
}

inline Mat3 left_jacobian_inv(const AxisAngle& phi) {
  const Vec3& v = phi.vector();
  const double theta = v.norm();
  const Mat3 K = hat(v);
  if (theta < so3_detail::kJacobianSeriesAngle) {
    return Mat3::Identity() - 0.5 * K + (1.0 / 12.0) * K * K;
  }
  // J_l is singular at theta = 2*pi*k, k >= 1.
  const double turns = std::round(theta / (2.0 * kPi));
  if (turns >= 1.0 && std::abs(theta - turns * 2.0 * kPi) < so3_detail::kSingularWindow) {
    throw Error(ErrorCode::Singular, "left Jacobian is singular at multiples of 2*pi");
  }
  const Vec3 psi = v / theta;
  const double half = 0.5 * theta;
  const double half_cot = half / std::tan(half);
  return half_cot * Mat3::Identity() + (1.0 - half_cot) * psi * psi.transpose() - half * hat(psi);
}

/// First-order left BCH: log(exp(delta^) exp(phi^)) ~= phi + J_l(phi)^-1 delta.
inline AxisAngle bch_compose_left(const Vec3& delta_phi, const AxisAngle& phi) {
  return AxisAngle(phi.vector() + left_jacobian_inv(phi) * delta_phi);
}

inline Vec3 rotate_point(const RotationMatrix& r, const Vec3& p) { return r.matrix() * p; }

/// d(exp(delta^) R p)/d(delta) at delta = 0, i.e. -(R p)^.
inline Mat3 perturbation_derivative(const RotationMatrix& r, const Vec3& p) {
  return -hat(r.matrix() * p);
}

/// Angle of R_a^T R_b.
inline double geodesic_distance(const RotationMatrix& a, const RotationMatrix& b) {
  return log_map(a.inverse() * b).angle();
}

struct PropertyReport {
  int trials = 0;
  double closure = 0.0;        // |[a^, b^] - (a x b)^|
  double alternativity = 0.0;  // |[a^, a^]|
  double jacobi = 0.0;         // |[a,[b,c]] + [b,[c,a]] + [c,[a,b]]|
  double bilinearity = 0.0;    // linearity of hat and of the bracket in each slot

  double max_violation() const { return std::max({closure, alternativity, jacobi, bilinearity}); }
};

namespace so3_detail {

inline PropertyReport& accumulate(PropertyReport& rep, const Vec3& a, const Vec3& b, const Vec3& c,
                                  double alpha, double beta) {
  const auto norm = [](const Mat3& m) { return m.cwiseAbs().maxCoeff(); };
  const Mat3 A = hat(a), B = hat(b), C = hat(c);
  rep.closure = std::max(rep.closure, norm(lie_bracket(A, B) - hat(a.cross(b))));
  rep.alternativity = std::max(rep.alternativity, norm(lie_bracket(A, A)));
  rep.jacobi = std::max(rep.jacobi, norm(lie_bracket(A, lie_bracket(B, C)) +
                                         lie_bracket(B, lie_bracket(C, A)) +
                                         lie_bracket(C, lie_bracket(A, B))));
  const Mat3 combo = hat(alpha * a + beta * b);
  const double lin_hat = norm(combo - (alpha * A + beta * B));
  const double lin_left = norm(lie_bracket(combo, C) - (alpha * lie_bracket(A, C) + beta * lie_bracket(B, C)));
  const double lin_right = norm(lie_bracket(C, combo) - (alpha * lie_bracket(C, A) + beta * lie_bracket(C, B)));
  rep.bilinearity = std::max({rep.bilinearity, lin_hat, lin_left, lin_right});
  return rep;
}

}  // namespace so3_detail

/// Maximum violation of the so(3) algebra axioms over random instances with
/// components in [-1, 1] and scalars in [-2, 2].
inline PropertyReport check_algebra_properties(std::uint64_t seed, int trials) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto draw = [&] { return Vec3(unit(rng), unit(rng), unit(rng)); };
  PropertyReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const Vec3 a = draw(), b = draw(), c = draw();
    so3_detail::accumulate(rep, a, b, c, 2.0 * unit(rng), 2.0 * unit(rng));
  }
  return rep;
}

/// Same checks on a single caller-chosen instance.
inline PropertyReport check_algebra_properties(const Vec3& a, const Vec3& b, const Vec3& c,
                                               double alpha = 1.0, double beta = 1.0) {
  PropertyReport rep;
  rep.trials = 1;
  return so3_detail::accumulate(rep, a, b, c, alpha, beta);
}

}  // namespace larnet
