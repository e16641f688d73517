// A short walk through the SO(3) and SE(3) maps with their round-trip errors.

#include <cstdio>

#include "larnet/se3.hpp"
#include "larnet/so3.hpp"

using namespace larnet;

int main() {
  std::printf("axis (1, -2, 0.5)\n%-10s %-14s %-14s\n", "theta", "log(exp) err", "J*Jinv err");
  const Vec3 axis = Vec3(1.0, -2.0, 0.5).normalized();
  for (double theta : {0.0, 1e-9, 1e-4, 0.3, 1.0, kPi / 2, 2.5, kPi - 1e-3}) {
    const AxisAngle phi(Vec3(theta * axis));
    const RotationMatrix r = exp_map(phi);
    const double rt = (log_map(r).vector() - phi.vector()).norm();
    const double jac = (left_jacobian(phi) * left_jacobian_inv(phi) - Mat3::Identity()).norm();
    std::printf("%-10.4g %-14.3e %-14.3e\n", theta, rt, jac);
  }

  // A rotated point moves to first order by -(Rp)^ delta.
  const RotationMatrix r = exp_map(Vec3(0.2, 0.4, -0.1));
  const Vec3 p(1.0, 2.0, 3.0), delta(1e-6, -2e-6, 5e-7);
  const Vec3 moved = exp_map(delta).matrix() * r.matrix() * p;
  const Vec3 predicted = r.matrix() * p + perturbation_derivative(r, p) * delta;
  std::printf("\nperturbation: first-order prediction error %.3e for |delta| %.3e\n", (moved - predicted).norm(),
              delta.norm());

  const Vec3 a(0.01, -0.02, 0.015);
  const AxisAngle composed = bch_compose_left(a, AxisAngle(Vec3(0.3, 0.1, -0.2)));
  const AxisAngle exact = log_map(exp_map(a) * exp_map(Vec3(0.3, 0.1, -0.2)));
  std::printf("bch: first-order composition error %.3e for |delta| %.3e\n",
              (composed.vector() - exact.vector()).norm(), a.norm());

  Twist xi;
  xi.rho = Vec3(0.5, -1.0, 2.0);
  xi.phi = Vec3(0.3, 0.2, -0.9);
  const Transform tf = se3_exp(xi);
  const Twist back = se3_log(tf);
  std::printf("se3: log(exp) error %.3e, translation (%.4f, %.4f, %.4f)\n",
              (back.rho - xi.rho).norm() + (back.phi - xi.phi).norm(), tf.translation().x(), tf.translation().y(),
              tf.translation().z());
  return 0;
}
