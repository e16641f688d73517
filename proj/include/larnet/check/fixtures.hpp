#pragma once

// Synthetic inputs shared by the unit tests, the acceptance suite and the
// `selftest` command.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "larnet/check/oracles.hpp"
#include "larnet/residual_net.hpp"

namespace larnet::fixture {

inline PoseAngles random_yaw_pose(std::mt19937_64& rng, double range = kPi / 2) {
  std::uniform_real_distribution<double> u(-range, range);
  return {0.0, u(rng), 0.0};
}

/// frontal = profile + gate(pose) * A [profile; phi(pose)] for a fixed random
/// A, so a subnet whose PReLU is linear can represent the map exactly.
inline std::vector<TrainingPair> realizable_pairs(std::uint64_t seed, int d, int n, GateKind kind = GateKind::AbsSin) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd a(d, d + 3);
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r) a(r, c) = 0.3 * gauss(rng) / std::sqrt(static_cast<double>(d + 3));
  std::vector<TrainingPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd f(d);
    for (int k = 0; k < d; ++k) f(k) = gauss(rng) / std::sqrt(static_cast<double>(d));
    const PoseAngles pose = random_yaw_pose(rng);
    Eigen::VectorXd z(d + 3);
    z << f, pose_to_axis_angle(pose).vector();
    pairs.push_back({f, f + gate(kind, pose) * (a * z), pose});
  }
  return pairs;
}

/// Random parameters and a handful of pairs at a small dimension.
struct MicroInstance {
  SubnetParams params;
  ResidualBatch batch;
};

inline MicroInstance micro_instance(std::uint64_t seed, int d = 4, int hidden = 4, int n = 6,
                                    LossForm form = LossForm::Forward) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MicroInstance m;
  m.params = SubnetParams::glorot(d, hidden, rng(), 0.25);
  for (Eigen::Index i = 0; i < m.params.b1.size(); ++i) m.params.b1(i) = 0.1 * gauss(rng);
  for (Eigen::Index i = 0; i < m.params.b2.size(); ++i) m.params.b2(i) = 0.1 * gauss(rng);
  m.batch.feats.resize(d, n);
  m.batch.targets.resize(d, n);
  m.batch.phis.resize(3, n);
  m.batch.gates.resize(n);
  m.batch.sign = form == LossForm::Forward ? 1.0 : -1.0;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < d; ++k) {
      m.batch.feats(k, j) = gauss(rng);
      m.batch.targets(k, j) = gauss(rng);
    }
    const PoseAngles pose = random_yaw_pose(rng);
    m.batch.phis.col(j) = pose_to_axis_angle(pose).vector();
    m.batch.gates(j) = gate(GateKind::AbsSin, pose);
  }
  return m;
}

/// Worst relative disagreement |g - fd| / max(|g|, |fd|, floor) between the
/// back-propagated gradient and central differences of the loss.
inline double subnet_gradient_check(const MicroInstance& m, double h = 1e-5, double floor = 1e-6) {
  const ResidualGradients g = residual_loss_grad(m.params, m.batch, 1.0);
  const Eigen::VectorXd analytic = g.params.flatten();
  const Eigen::VectorXd theta = m.params.flatten();
  SubnetParams probe = m.params;
  const auto loss = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    probe.unflatten(v);
    Eigen::VectorXd out(1);
    out(0) = residual_loss_grad(probe, m.batch, 1.0).loss_sum;
    return out;
  };
  const Eigen::VectorXd fd = oracle::central_difference(loss, theta, h).row(0).transpose();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < fd.size(); ++i) {
    const double denom = std::max({std::abs(analytic(i)), std::abs(fd(i)), floor});
    worst = std::max(worst, std::abs(analytic(i) - fd(i)) / denom);
  }
  return worst;
}

}  // namespace larnet::fixture
