#include <gtest/gtest.h>

#include <random>

#include "larnet/check/oracles.hpp"
#include "larnet/se3.hpp"

namespace larnet {
namespace {

Vec3 random_in_ball(std::mt19937_64& rng, double radius) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
  return dir * radius * std::cbrt(u(rng));
}

TEST(TwistHat, Layout) {
  EXPECT_EQ(twist_hat(Twist{}), Mat4::Zero());

  Mat4 only_x = Mat4::Zero();
  only_x(0, 3) = 1.0;
  EXPECT_EQ(twist_hat(Twist{Vec3(1, 0, 0), Vec3::Zero()}), only_x);

  const Mat4 m = twist_hat(Twist{Vec3(1, 2, 3), Vec3(0, 0, 1)});
  EXPECT_EQ(Mat3(m.topLeftCorner<3, 3>()), hat(Vec3(0, 0, 1)));
  EXPECT_EQ(Eigen::Vector4d(m.col(3)), Eigen::Vector4d(1, 2, 3, 0));
  EXPECT_EQ(Eigen::RowVector4d(m.row(3)), Eigen::RowVector4d::Zero());
}

TEST(Se3Exp, IdentityAndPureTranslation) {
  EXPECT_EQ(se3_exp(Twist{}).matrix(), Mat4::Identity());
  const Transform t = se3_exp(Twist{Vec3(1, 2, 3), Vec3::Zero()});
  EXPECT_EQ(t.rotation().matrix(), Mat3::Identity());
  EXPECT_EQ(t.translation(), Vec3(1, 2, 3));
}

TEST(Se3Exp, MatchesTruncatedMatrixSeries) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    const Twist xi{random_in_ball(rng, 3.0), random_in_ball(rng, kPi / 2)};
    const Mat4 series = oracle::series_exp(twist_hat(xi));
    const Mat4 m = se3_exp(xi).matrix();
    EXPECT_LT((m - series).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_EQ(Eigen::RowVector4d(m.row(3)), Eigen::RowVector4d(0, 0, 0, 1));
    EXPECT_LT(se3_exp(xi).rotation().defect(), 1e-12);
  }
}

TEST(Se3Log, ClosedFormCases) {
  EXPECT_EQ(se3_log(Transform()), Twist{});
  const Twist pure = se3_log(Transform(RotationMatrix(), Vec3(1, 2, 3)));
  EXPECT_EQ(pure.rho, Vec3(1, 2, 3));
  EXPECT_EQ(pure.phi, Vec3::Zero());
}

TEST(Se3Log, RoundTrip) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 500; ++i) {
    const Twist xi{random_in_ball(rng, 3.0), random_in_ball(rng, kPi / 2)};
    const Twist back = se3_log(se3_exp(xi));
    EXPECT_LT((back.rho - xi.rho).norm(), 1e-9);
    EXPECT_LT((back.phi - xi.phi).norm(), 1e-9);

    const Transform tf = se3_exp(xi);
    EXPECT_LT((se3_exp(se3_log(tf)).matrix() - tf.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Transform, ApplyMatchesHomogeneousProduct) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    const Transform tf = se3_exp(Twist{random_in_ball(rng, 2.0), random_in_ball(rng, kPi)});
    const Vec3 p = random_in_ball(rng, 4.0);
    const Eigen::Vector4d hp = tf.matrix() * p.homogeneous();
    EXPECT_LT((tf.apply(p) - hp.head<3>()).norm(), 1e-12);
    EXPECT_EQ(hp(3), 1.0);
  }
}

TEST(Transform, CompositionMatchesMatrixProduct) {
  const Transform a = se3_exp(Twist{Vec3(0.1, 0.2, 0.3), Vec3(0.3, -0.1, 0.2)});
  const Transform b = se3_exp(Twist{Vec3(-1, 0.5, 2), Vec3(0.0, 0.4, -0.6)});
  EXPECT_LT(((a * b).matrix() - a.matrix() * b.matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

}  // namespace
}  // namespace larnet
