#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "larnet/check/oracles.hpp"
#include "larnet/so3.hpp"

namespace larnet {
namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

Vec3 random_in_ball(std::mt19937_64& rng, double radius) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 dir(n(rng), n(rng), n(rng));
  dir.normalize();
  return dir * radius * std::cbrt(u(rng));
}

TEST(Hat, MatchesSkewLayout) {
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(hat(Vec3(1, 2, 3)), expected);
  EXPECT_EQ(hat(Vec3::Zero()), Mat3::Zero());
  Mat3 z;
  z << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  EXPECT_EQ(hat(Vec3(0, 0, 1)), z);
}

TEST(Hat, IsSkewAndVeeInvertsExactly) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 200; ++i) {
    const Vec3 v(u(rng), u(rng), u(rng));
    EXPECT_EQ(hat(v).transpose(), -hat(v));
    EXPECT_EQ(vee(hat(v)), v);
  }
  EXPECT_EQ(vee(hat(Vec3(-0.5, 0.25, 4))), Vec3(-0.5, 0.25, 4));
  EXPECT_EQ(vee(Mat3::Zero()), Vec3::Zero());
}

TEST(Vee, RejectsNonSkew) {
  Mat3 m = hat(Vec3(1, 2, 3));
  m(0, 0) = 1e-3;
  try {
    vee(m);
    FAIL() << "expected NotSkewSymmetric";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSkewSymmetric);
  }
}

TEST(RotationMatrix, RejectsNonRotation) {
  Mat3 reflection = Mat3::Identity();
  reflection(2, 2) = -1;
  EXPECT_THROW(RotationMatrix{reflection}, Error);
  EXPECT_THROW(RotationMatrix{Mat3::Identity() * 1.01}, Error);
}

TEST(ExpMap, ClosedFormCases) {
  EXPECT_EQ(exp_map(AxisAngle()).matrix(), Mat3::Identity());
  Mat3 quarter;
  quarter << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT(max_abs(exp_map(AxisAngle(0, 0, kPi / 2)).matrix() - quarter), 1e-15);
}

TEST(ExpMap, MatchesTruncatedSeries) {
  const Vec3 phi(0.1, 0.2, 0.3);
  EXPECT_LT(max_abs(exp_map(phi).matrix() - oracle::series_exp(oracle::skew(phi))), 1e-12);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const Vec3 v = random_in_ball(rng, kPi);
    EXPECT_LT(max_abs(exp_map(v).matrix() - oracle::series_exp(oracle::skew(v))), 1e-12);
  }
}

TEST(ExpMap, GroupInvariants) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const Vec3 v = random_in_ball(rng, 3.0 * kPi);
    const RotationMatrix R = exp_map(v);
    EXPECT_LT(R.defect(), 1e-12);
    EXPECT_NEAR(R.matrix().determinant(), 1.0, 1e-12);
    EXPECT_NEAR(R.trace(), 2.0 * std::cos(v.norm()) + 1.0, 1e-10);
    const Vec3 axis = v.normalized();
    EXPECT_LT((R.matrix() * axis - axis).norm(), 1e-10);
  }
}

TEST(ExpMap, SmallAngleBranchIsContinuous) {
  const Vec3 axis = Vec3(1, -2, 0.5).normalized();
  for (double theta : {1e-12, 5e-9, 1.5e-8, 1e-6}) {
    const Vec3 v = theta * axis;
    EXPECT_LT(max_abs(exp_map(v).matrix() - oracle::series_exp(oracle::skew(v))), 1e-15);
  }
}

TEST(LogMap, ClosedFormCases) {
  EXPECT_EQ(log_map(RotationMatrix()).vector(), Vec3::Zero());
  const AxisAngle phi = log_map(exp_map(AxisAngle(0, 0, kPi / 3)));
  EXPECT_LT((phi.vector() - Vec3(0, 0, kPi / 3)).norm(), 1e-15);
}

TEST(LogMap, RoundTripInBijectiveRange) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v = random_in_ball(rng, kPi / 2);
    EXPECT_LT((log_map(exp_map(v)).vector() - v).norm(), 1e-9);
  }
}

TEST(LogMap, NearPiUsesSymmetricPart) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  for (double gap : {0.0, 1e-12, 1e-7, 5e-5, 2e-4}) {
    for (int i = 0; i < 50; ++i) {
      const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
      const double theta = kPi - gap;
      const RotationMatrix R = exp_map(AxisAngle(theta * axis));
      const AxisAngle back = log_map(R);
      EXPECT_NEAR(back.angle(), theta, 1e-7);
      // At exactly pi both signs of the axis name the same rotation.
      EXPECT_LT(max_abs(exp_map(back).matrix() - R.matrix()), 1e-9);
      if (gap > 1e-9) {
        EXPECT_LT((back.axis() - axis).norm(), 1e-6);
      }
    }
  }
}

TEST(LogMap, PrincipalValueOutsideBijectiveRange) {
  const AxisAngle big(0, 0, 2.0);
  EXPECT_FALSE(big.in_bijective_range());
  EXPECT_TRUE(AxisAngle(0, 0, kPi / 2).in_bijective_range());
  const AxisAngle wrapped = log_map(exp_map(AxisAngle(0, 0, 2.0 * kPi - 0.5)));
  EXPECT_LT((wrapped.vector() - Vec3(0, 0, -0.5)).norm(), 1e-12);
}

TEST(LeftJacobian, MatchesSeries) {
  EXPECT_EQ(left_jacobian(AxisAngle()), Mat3::Identity());
  for (const Vec3& v : {Vec3(0.3, 0, 0), Vec3(0.1, 0.2, 0.3)}) {
    EXPECT_LT(max_abs(left_jacobian(AxisAngle(v)) - oracle::series_left_jacobian(oracle::skew(v))), 1e-12);
  }
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    const Vec3 v = random_in_ball(rng, kPi);
    EXPECT_LT(max_abs(left_jacobian(AxisAngle(v)) - oracle::series_left_jacobian(oracle::skew(v))), 1e-12);
  }
  const Vec3 tiny(3e-7, -2e-7, 1e-7);
  EXPECT_LT(max_abs(left_jacobian(AxisAngle(tiny)) - oracle::series_left_jacobian(oracle::skew(tiny))), 1e-15);
}

TEST(LeftJacobianInv, MatchesAdjugateInverseOfSeries) {
  EXPECT_EQ(left_jacobian_inv(AxisAngle()), Mat3::Identity());
  const Vec3 v(0.2, 0.1, 0.05);
  const Mat3 expected = oracle::adjugate_inverse(oracle::series_left_jacobian(oracle::skew(v)));
  EXPECT_LT(max_abs(left_jacobian_inv(AxisAngle(v)) - expected), 1e-10);

  std::mt19937_64 rng(10);
  for (int i = 0; i < 100; ++i) {
    const AxisAngle phi(random_in_ball(rng, 1.9 * kPi));
    EXPECT_LT(max_abs(left_jacobian(phi) * left_jacobian_inv(phi) - Mat3::Identity()), 1e-10);
  }
}

TEST(LeftJacobianInv, SingularAtFullTurn) {
  for (double theta : {2.0 * kPi, 2.0 * kPi + 5e-7, 4.0 * kPi - 1e-7}) {
    try {
      left_jacobian_inv(AxisAngle(0, theta, 0));
      FAIL() << "expected Singular at theta=" << theta;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Singular);
    }
  }
  EXPECT_NO_THROW(left_jacobian_inv(AxisAngle(0, 2.0 * kPi - 1e-3, 0)));
}

TEST(Bch, ZeroIncrementIsIdentity) {
  const AxisAngle phi(0.4, -0.2, 0.9);
  EXPECT_EQ(bch_compose_left(Vec3::Zero(), phi), phi);
}

TEST(Bch, MatchesExactCompositionForSmallIncrement) {
  const Vec3 delta(1e-4, 0, 0);
  const AxisAngle phi(0, 0, 0.5);
  const Vec3 exact = log_map(exp_map(delta) * exp_map(phi)).vector();
  EXPECT_LT((bch_compose_left(delta, phi).vector() - exact).norm(), 1e-7);
}

TEST(Bch, ErrorIsSecondOrder) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const AxisAngle phi(random_in_ball(rng, kPi / 2));
    const Vec3 dir = random_in_ball(rng, 1.0).normalized();
    const auto err = [&](double scale) {
      const Vec3 d = scale * dir;
      return (bch_compose_left(d, phi).vector() - log_map(exp_map(d) * exp_map(phi)).vector()).norm();
    };
    EXPECT_GE(err(1e-2) / err(5e-3), 3.5);
  }
}

TEST(RotatePoint, Isometry) {
  EXPECT_EQ(rotate_point(RotationMatrix(), Vec3(1, 2, 3)), Vec3(1, 2, 3));
  EXPECT_LT((rotate_point(exp_map(AxisAngle(0, 0, kPi / 2)), Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm(), 1e-15);
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const RotationMatrix R = exp_map(random_in_ball(rng, kPi));
    const Vec3 p = random_in_ball(rng, 5.0);
    EXPECT_NEAR(rotate_point(R, p).norm(), p.norm(), 1e-10);
  }
}

TEST(PerturbationDerivative, ClosedForm) {
  Mat3 expected;
  expected << 0, 1, 0, -1, 0, 0, 0, 0, 0;
  EXPECT_EQ(perturbation_derivative(RotationMatrix(), Vec3(0, 0, 1)), expected);
  EXPECT_EQ(perturbation_derivative(exp_map(Vec3(0.3, 0.2, 0.1)), Vec3::Zero()), Mat3::Zero());
}

TEST(PerturbationDerivative, MatchesFiniteDifferences) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i) {
    const RotationMatrix R = exp_map(random_in_ball(rng, kPi));
    const Vec3 p = random_in_ball(rng, 2.0);
    const auto f = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
      return exp_map(Vec3(d)).matrix() * R.matrix() * p;
    };
    const Eigen::MatrixXd fd = oracle::central_difference(f, Eigen::VectorXd::Zero(3), 1e-5);
    EXPECT_LT(max_abs(fd - perturbation_derivative(R, p)), 1e-6);
  }
}

TEST(AlgebraProperties, RandomInstances) {
  const PropertyReport rep = check_algebra_properties(2024, 1000);
  EXPECT_EQ(rep.trials, 1000);
  EXPECT_LE(rep.closure, 1e-10);
  EXPECT_LE(rep.alternativity, 1e-10);
  EXPECT_LE(rep.jacobi, 1e-10);
  EXPECT_LE(rep.bilinearity, 1e-10);
}

TEST(AlgebraProperties, HandPickedInstances) {
  const Vec3 ex(1, 0, 0), ey(0, 1, 0);
  EXPECT_EQ(check_algebra_properties(ex, ex, ey).alternativity, 0.0);
  EXPECT_EQ(lie_bracket(hat(ex), hat(ey)), hat(Vec3(0, 0, 1)));
  EXPECT_THROW(check_algebra_properties(1, 0), Error);
}

TEST(Geodesic, AngleOfRelativeRotation) {
  const RotationMatrix a = exp_map(Vec3(0, 0, 0.2));
  const RotationMatrix b = exp_map(Vec3(0, 0, 0.7));
  EXPECT_NEAR(geodesic_distance(a, b), 0.5, 1e-14);
  EXPECT_EQ(geodesic_distance(a, a), 0.0);
}

TEST(ProjectToRotation, RepairsDrift) {
  Mat3 m = exp_map(Vec3(0.3, -0.4, 0.5)).matrix();
  m(0, 1) += 1e-6;
  const RotationMatrix r = project_to_rotation(m);
  EXPECT_LT(r.defect(), 1e-14);
  EXPECT_LT(max_abs(r.matrix() - m), 1e-6);
}

}  // namespace
}  // namespace larnet
