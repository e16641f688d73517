#pragma once

// SE(3): rigid transforms T = [R t; 0 1] and twists xi = (rho, phi).
// exp(xi^) = [exp(phi^)  J_l(phi) rho; 0 1]; the log inverts the two blocks.

#include <Eigen/Core>

#include "larnet/so3.hpp"

namespace larnet {

using Mat4 = Eigen::Matrix4d;

struct Twist {
  Vec3 rho = Vec3::Zero();  // translational part
  Vec3 phi = Vec3::Zero();  // rotational part, radians

  bool operator==(const Twist&) const = default;
};

class Transform {
 public:
  Transform() = default;
  Transform(const RotationMatrix& r, const Vec3& t) : r_(r), t_(t) {}

  const RotationMatrix& rotation() const { return r_; }
  const Vec3& translation() const { return t_; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = r_.matrix();
    m.topRightCorner<3, 1>() = t_;
    return m;
  }

  Vec3 apply(const Vec3& p) const { return r_.matrix() * p + t_; }

  Transform operator*(const Transform& other) const {
    return Transform(r_ * other.r_, r_.matrix() * other.t_ + t_);
  }

 private:
  RotationMatrix r_;
  Vec3 t_ = Vec3::Zero();
};

inline Mat4 twist_hat(const Twist& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = hat(xi.phi);
  m.topRightCorner<3, 1>() = xi.rho;
  return m;
}

inline Transform se3_exp(const Twist& xi) {
  if (!xi.rho.allFinite() || !xi.phi.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "se3_exp of non-finite twist");
  }
  const AxisAngle phi(xi.phi);
  return Transform(exp_map(phi), left_jacobian(phi) * xi.rho);
}

inline Twist se3_log(const Transform& tf) {
  const AxisAngle phi = log_map(tf.rotation());
  return Twist{left_jacobian_inv(phi) * tf.translation(), phi.vector()};
}

}  // namespace larnet
