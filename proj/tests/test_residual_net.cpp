#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "larnet/check/fixtures.hpp"
#include "larnet/check/oracles.hpp"
#include "larnet/residual_net.hpp"

namespace larnet {
namespace {

bool bitwise_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

TEST(ResidualForward, ZeroParamsGiveZero) {
  const SubnetParams p = SubnetParams::zeros(6, 6);
  const FeatureVector f = FeatureVector::LinSpaced(6, -1, 1);
  EXPECT_EQ(residual_forward(p, f, AxisAngle(0.1, 0.2, 0.3)), FeatureVector::Zero(6));
}

TEST(ResidualForward, LinearPreluReproducesFeature) {
  const int d = 5;
  SubnetParams p = SubnetParams::zeros(d, d);
  p.w1.leftCols(d) = Eigen::MatrixXd::Identity(d, d);
  p.w2 = Eigen::MatrixXd::Identity(d, d);
  p.a1 = 1.0;
  const FeatureVector f = FeatureVector::LinSpaced(d, -2, 3);
  EXPECT_EQ(residual_forward(p, f, AxisAngle(0.4, -0.1, 0.0)), f);
}

TEST(ResidualForward, MatchesLoopOracle) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    SubnetParams p = SubnetParams::glorot(7, 9, rng(), 0.3);
    for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1(i) = n(rng);
    for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2(i) = n(rng);
    FeatureVector f(7);
    for (int i = 0; i < 7; ++i) f(i) = n(rng);
    const Vec3 phi(n(rng), n(rng), n(rng));
    Eigen::VectorXd input(10);
    input << f, phi;
    const Eigen::VectorXd expected = oracle::mlp_loops(p.w1, p.b1, p.a1, p.w2, p.b2, input);
    EXPECT_LT((residual_forward(p, f, AxisAngle(phi)) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ResidualForward, ShapeMismatch) {
  const SubnetParams p = SubnetParams::zeros(4, 4);
  try {
    residual_forward(p, FeatureVector::Zero(5), AxisAngle());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Frontalize, ZeroGateIsBitwiseIdentity) {
  TrainedModel model;
  model.params = SubnetParams::glorot(8, 8, 3);
  model.params.b2.setConstant(0.5);
  model.gate_kind = GateKind::AbsSin;
  std::mt19937_64 rng(52);
  std::normal_distribution<double> n(0, 1);
  for (int i = 0; i < 200; ++i) {
    FeatureVector f(8);
    for (int k = 0; k < 8; ++k) f(k) = n(rng);
    f(0) = -0.0;
    EXPECT_TRUE(bitwise_equal(frontalize(model, f, {0, 0, 0}), f));
  }
}

TEST(Frontalize, IdentityGateWithZeroParams) {
  TrainedModel model;
  model.params = SubnetParams::zeros(4, 4);
  model.gate_kind = GateKind::Identity;
  const FeatureVector f = FeatureVector::LinSpaced(4, 0.1, 0.9);
  EXPECT_EQ(frontalize(model, f, {0.1, -0.8, 0.2}), f);
}

TEST(Frontalize, AppliesGatedResidual) {
  TrainedModel model;
  model.params = SubnetParams::glorot(4, 6, 9);
  model.gate_kind = GateKind::Linear;
  const FeatureVector f = FeatureVector::LinSpaced(4, -0.3, 0.6);
  const PoseAngles pose{0, kPi / 4, 0};
  const FeatureVector expected = f + 0.5 * residual_forward(model.params, f, pose_to_axis_angle(pose));
  EXPECT_LT((frontalize(model, f, pose) - expected).norm(), 1e-15);
  EXPECT_THROW(frontalize(model, f, {0, 2.0, 0}), Error);
}

TEST(Backprop, MatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    EXPECT_LE(fixture::subnet_gradient_check(fixture::micro_instance(s)), 1e-5) << "seed " << s;
    EXPECT_LE(fixture::subnet_gradient_check(fixture::micro_instance(s, 4, 3, 5, LossForm::Inverse)), 1e-5);
  }
}

TEST(Backprop, InputGradientsMatchFiniteDifferences) {
  const fixture::MicroInstance m = fixture::micro_instance(77);
  const ResidualGradients g = residual_loss_grad(m.params, m.batch, 1.0, true);
  const auto d = m.batch.feats.rows();
  const auto n = m.batch.feats.cols();
  ResidualBatch probe = m.batch;
  const auto loss_in = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    probe.feats = Eigen::Map<const Eigen::MatrixXd>(v.data(), d, n);
    return Eigen::VectorXd::Constant(1, residual_loss_grad(m.params, probe, 1.0).loss_sum);
  };
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(m.batch.feats.data(), d * n);
  const Eigen::VectorXd fd = oracle::central_difference(loss_in, x, 1e-5).row(0).transpose();
  const Eigen::VectorXd an = Eigen::Map<const Eigen::VectorXd>(g.feats.data(), d * n);
  EXPECT_LT((fd - an).cwiseAbs().maxCoeff(), 1e-6);
  // d/d(target) of |out - target|^2 is -2 (out - target).
  probe = m.batch;
  const auto loss_t = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    probe.targets = Eigen::Map<const Eigen::MatrixXd>(v.data(), d, n);
    return Eigen::VectorXd::Constant(1, residual_loss_grad(m.params, probe, 1.0).loss_sum);
  };
  const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(m.batch.targets.data(), d * n);
  const Eigen::VectorXd fdt = oracle::central_difference(loss_t, t, 1e-5).row(0).transpose();
  EXPECT_LT((fdt - Eigen::Map<const Eigen::VectorXd>(g.targets.data(), d * n)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(TrainSubnet, NothingToLearnAtFrontalPose) {
  std::vector<TrainingPair> pairs;
  for (int i = 0; i < 50; ++i) {
    const FeatureVector f = FeatureVector::Constant(4, 0.1 * i);
    pairs.push_back({f, f, {0, 0, 0}});
  }
  TrainConfig cfg;
  cfg.epochs = 5;
  const TrainedModel m = train_subnet(pairs, cfg, GateKind::AbsSin);
  EXPECT_LE(m.loss_history.back(), 1e-12);
}

TEST(TrainSubnet, RealizableTargetConverges) {
  const auto pairs = fixture::realizable_pairs(61, 8, 2000);
  TrainConfig cfg;
  cfg.seed = 5;
  const TrainedModel m = train_subnet(pairs, cfg, GateKind::AbsSin);
  ASSERT_EQ(m.loss_history.size(), 200u);
  EXPECT_LE(m.loss_history.back(), 1e-3);
  EXPECT_LT(m.loss_history.back(), m.loss_history.front());
}

TEST(TrainSubnet, InverseFormReducesLoss) {
  const auto pairs = fixture::realizable_pairs(62, 8, 500);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.loss_form = LossForm::Inverse;
  const TrainedModel m = train_subnet(pairs, cfg, GateKind::AbsSin);
  EXPECT_LT(m.loss_history.back(), 0.2 * m.loss_history.front());
}

TEST(TrainSubnet, DeterministicPerSeed) {
  const auto pairs = fixture::realizable_pairs(63, 8, 300);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 99;
  const TrainedModel a = train_subnet(pairs, cfg, GateKind::AbsSin);
  const TrainedModel b = train_subnet(pairs, cfg, GateKind::AbsSin);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.params.w1, b.params.w1);
  cfg.seed = 100;
  EXPECT_NE(train_subnet(pairs, cfg, GateKind::AbsSin).loss_history, a.loss_history);
}

TEST(TrainSubnet, ZeroEpochsStillRecordsLoss) {
  const auto pairs = fixture::realizable_pairs(64, 4, 20);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_EQ(train_subnet(pairs, cfg, GateKind::AbsSin).loss_history.size(), 1u);
}

TEST(TrainSubnet, Errors) {
  TrainConfig cfg;
  try {
    train_subnet({}, cfg, GateKind::AbsSin);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
  std::vector<TrainingPair> bad{{FeatureVector::Zero(4), FeatureVector::Zero(4), {}},
                                {FeatureVector::Zero(5), FeatureVector::Zero(5), {}}};
  try {
    train_subnet(bad, cfg, GateKind::AbsSin);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  cfg.lr = 1e6;
  cfg.momentum = 0.99;
  cfg.epochs = 50;
  try {
    train_subnet(fixture::realizable_pairs(65, 4, 200), cfg, GateKind::Identity);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
  }
  cfg = {};
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(TrainConfig, LearningRateSchedule) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.lr_at(0), 0.01);
  EXPECT_DOUBLE_EQ(cfg.lr_at(119), 0.01);
  EXPECT_DOUBLE_EQ(cfg.lr_at(120), 0.001);
  EXPECT_DOUBLE_EQ(cfg.lr_at(170), 0.0001);
}

}  // namespace
}  // namespace larnet
