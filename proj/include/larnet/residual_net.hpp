#pragma once

// Gated residual feature correction.
//
//   frontal ~= profile + gate(pose) * C(profile, phi(pose))
//
// C is two fully-connected layers with a PReLU between them, fed the profile
// feature concatenated with the pose's rotation vector. Training minimises
// the squared l2 distance between the corrected profile feature and the
// frontal feature with momentum SGD; gradients are back-propagated by hand.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "larnet/gating.hpp"
#include "larnet/so3.hpp"

namespace larnet {

using FeatureVector = Eigen::VectorXd;

struct SubnetParams {
  Eigen::MatrixXd w1;  // hidden x (d + 3)
  Eigen::VectorXd b1;  // hidden
  double a1 = 0.25;    // PReLU slope
  Eigen::MatrixXd w2;  // d x hidden
  Eigen::VectorXd b2;  // d

  int feature_dim() const { return static_cast<int>(w2.rows()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  Eigen::Index size() const { return w1.size() + b1.size() + 1 + w2.size() + b2.size(); }

  static SubnetParams zeros(int d, int hidden) {
    SubnetParams p;
    p.w1 = Eigen::MatrixXd::Zero(hidden, d + 3);
    p.b1 = Eigen::VectorXd::Zero(hidden);
    p.a1 = 0.0;
    p.w2 = Eigen::MatrixXd::Zero(d, hidden);
    p.b2 = Eigen::VectorXd::Zero(d);
    return p;
  }

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static SubnetParams glorot(int d, int hidden, std::uint64_t seed, double prelu_init = 0.25) {
    std::mt19937_64 rng(seed);
    const auto fill = [&rng](Eigen::MatrixXd& m) {
      const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
    };
    SubnetParams p = zeros(d, hidden);
    fill(p.w1);
    fill(p.w2);
    p.a1 = prelu_init;
    return p;
  }

  void validate() const {
    const auto d = w2.rows();
    const auto h = w1.rows();
    if (d < 1 || h < 1 || w1.cols() != d + 3 || b1.size() != h || w2.cols() != h || b2.size() != d) {
      throw Error(ErrorCode::ShapeMismatch, "inconsistent subnet parameter shapes");
    }
    if (!w1.allFinite() || !b1.allFinite() || !std::isfinite(a1) || !w2.allFinite() || !b2.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "non-finite subnet parameters");
    }
  }

  /// Flattened as [w1 (col-major), b1, a1, w2 (col-major), b2].
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(size());
    Eigen::Index o = 0;
    const auto put = [&](const auto& m) {
      v.segment(o, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
      o += m.size();
    };
    put(w1);
    put(b1);
    v(o++) = a1;
    put(w2);
    put(b2);
    return v;
  }

  void unflatten(const Eigen::VectorXd& v) {
    Eigen::Index o = 0;
    const auto get = [&](auto& m) {
      Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = v.segment(o, m.size());
      o += m.size();
    };
    get(w1);
    get(b1);
    a1 = v(o++);
    get(w2);
    get(b2);
  }

  SubnetParams& operator+=(const SubnetParams& o) {
    w1 += o.w1;
    b1 += o.b1;
    a1 += o.a1;
    w2 += o.w2;
    b2 += o.b2;
    return *this;
  }
};

/// Which side of the pair the correction is trained on.
///   Forward: |profile + gate * C(profile) - frontal|^2   (what inference applies)
///   Inverse: |profile - (frontal - gate * C(frontal))|^2 (frontal mapped to profile)
enum class LossForm { Forward, Inverse };

constexpr std::string_view to_string(LossForm f) { return f == LossForm::Forward ? "forward" : "inverse"; }

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int epochs = 200;
  int batch_size = 64;
  std::vector<std::pair<int, double>> lr_schedule{{120, 10.0}, {170, 10.0}};
  std::uint64_t seed = 1;
  int hidden_dim = 0;  // 0: same as the feature dimension
  double prelu_init = 0.25;
  LossForm loss_form = LossForm::Forward;

  void validate() const {
    if (!(lr > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::InvalidConfig, "momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw Error(ErrorCode::InvalidConfig, "weight_decay must be >= 0");
    if (epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 0");
    if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
    if (hidden_dim < 0) throw Error(ErrorCode::InvalidConfig, "hidden_dim must be >= 0");
    for (const auto& [epoch, divisor] : lr_schedule) {
      if (epoch < 0 || !(divisor > 0.0)) throw Error(ErrorCode::InvalidConfig, "bad lr_schedule entry");
    }
  }

  double lr_at(int epoch) const {
    double rate = lr;
    for (const auto& [at, divisor] : lr_schedule) {
      if (epoch >= at) rate /= divisor;
    }
    return rate;
  }
};

struct TrainedModel {
  SubnetParams params;
  GateKind gate_kind = GateKind::AbsSin;
  std::vector<double> loss_history;
  TrainConfig config;
};

struct TrainingPair {
  FeatureVector profile;
  FeatureVector frontal;
  PoseAngles pose;
};

inline Eigen::VectorXd prelu(const Eigen::VectorXd& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

inline FeatureVector residual_forward(const SubnetParams& params, const FeatureVector& feat, const AxisAngle& phi) {
  if (feat.size() != params.feature_dim() || params.w1.cols() != feat.size() + 3) {
    throw Error(ErrorCode::ShapeMismatch, "feature dimension does not match subnet");
  }
  Eigen::VectorXd input(feat.size() + 3);
  input << feat, phi.vector();
  return params.w2 * prelu(params.w1 * input + params.b1, params.a1) + params.b2;
}

/// profile + gate(pose) * C(profile, phi(pose)); returns the input untouched
/// when the gate is exactly zero.
inline FeatureVector frontalize(const TrainedModel& model, const FeatureVector& feat_profile, const PoseAngles& pose) {
  const double w = gate(model.gate_kind, pose);
  if (feat_profile.size() != model.params.feature_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "feature dimension does not match model");
  }
  if (w == 0.0) return feat_profile;
  return feat_profile + w * residual_forward(model.params, feat_profile, pose_to_axis_angle(pose));
}

// ---- loss and back-propagation ------------------------------------------------

/// A batch laid out column-wise: features (d x B), rotation vectors (3 x B),
/// gate values (B), regression targets (d x B). `sign` is +1 for the forward
/// loss form and -1 for the inverse one.
struct ResidualBatch {
  Eigen::MatrixXd feats;
  Eigen::MatrixXd phis;
  Eigen::VectorXd gates;
  Eigen::MatrixXd targets;
  double sign = 1.0;
};

struct ResidualGradients {
  double loss_sum = 0.0;   // sum over the batch of |out - target|^2
  SubnetParams params;     // d(scale * loss_sum)/d(params)
  Eigen::MatrixXd feats;   // d(scale * loss_sum)/d(feats), when requested
  Eigen::MatrixXd targets; // d(scale * loss_sum)/d(targets), when requested
};

/// Sum of squared residual errors over the batch and, scaled by `scale`, its
/// gradient w.r.t. every parameter (and optionally w.r.t. the inputs).
inline ResidualGradients residual_loss_grad(const SubnetParams& p, const ResidualBatch& batch, double scale,
                                            bool input_grads = false) {
  const Eigen::Index d = batch.feats.rows();
  const Eigen::Index n = batch.feats.cols();
  Eigen::MatrixXd z(d + 3, n);
  z.topRows(d) = batch.feats;
  z.bottomRows(3) = batch.phis;

  Eigen::MatrixXd pre = p.w1 * z;
  pre.colwise() += p.b1;
  const Eigen::MatrixXd act = pre.unaryExpr([a = p.a1](double v) { return v > 0.0 ? v : a * v; });
  Eigen::MatrixXd c = p.w2 * act;
  c.colwise() += p.b2;
  const Eigen::MatrixXd err =
      batch.feats + batch.sign * (c * batch.gates.asDiagonal()) - batch.targets;

  ResidualGradients g;
  g.loss_sum = err.squaredNorm();

  const Eigen::MatrixXd d_out = (2.0 * scale) * err;
  const Eigen::MatrixXd d_c = batch.sign * (d_out * batch.gates.asDiagonal());
  g.params.w2 = d_c * act.transpose();
  g.params.b2 = d_c.rowwise().sum();
  const Eigen::MatrixXd d_act = p.w2.transpose() * d_c;
  const Eigen::MatrixXd d_pre =
      d_act.cwiseProduct(pre.unaryExpr([a = p.a1](double v) { return v > 0.0 ? 1.0 : a; }));
  g.params.a1 = d_act.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 0.0 : v; })).sum();
  g.params.w1 = d_pre * z.transpose();
  g.params.b1 = d_pre.rowwise().sum();
  if (input_grads) {
    g.feats = d_out + (p.w1.transpose() * d_pre).topRows(d);
    g.targets = -d_out;
  }
  return g;
}

/// Momentum SGD; weight decay applies to w1 and w2 only.
class MomentumSgd {
 public:
  MomentumSgd(const SubnetParams& shape, double momentum, double weight_decay)
      : velocity_(SubnetParams::zeros(shape.feature_dim(), shape.hidden_dim())),
        momentum_(momentum),
        weight_decay_(weight_decay) {}

  void step(SubnetParams& p, const SubnetParams& grad, double lr) {
    velocity_.w1 = momentum_ * velocity_.w1 + grad.w1 + weight_decay_ * p.w1;
    velocity_.b1 = momentum_ * velocity_.b1 + grad.b1;
    velocity_.a1 = momentum_ * velocity_.a1 + grad.a1;
    velocity_.w2 = momentum_ * velocity_.w2 + grad.w2 + weight_decay_ * p.w2;
    velocity_.b2 = momentum_ * velocity_.b2 + grad.b2;
    p.w1 -= lr * velocity_.w1;
    p.b1 -= lr * velocity_.b1;
    p.a1 -= lr * velocity_.a1;
    p.w2 -= lr * velocity_.w2;
    p.b2 -= lr * velocity_.b2;
  }

 private:
  SubnetParams velocity_;
  double momentum_;
  double weight_decay_;
};

/// Per-pair quantities that do not change during training.
struct PreparedPairs {
  Eigen::MatrixXd inputs;   // d x N, the side fed to the subnet
  Eigen::MatrixXd targets;  // d x N
  Eigen::MatrixXd phis;     // 3 x N
  Eigen::VectorXd gates;    // N
  double sign = 1.0;

  Eigen::Index size() const { return inputs.cols(); }

  ResidualBatch gather(const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) const {
    const auto n = static_cast<Eigen::Index>(end - begin);
    ResidualBatch b;
    b.feats.resize(inputs.rows(), n);
    b.targets.resize(targets.rows(), n);
    b.phis.resize(3, n);
    b.gates.resize(n);
    b.sign = sign;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto i = static_cast<Eigen::Index>(order[begin + static_cast<std::size_t>(j)]);
      b.feats.col(j) = inputs.col(i);
      b.targets.col(j) = targets.col(i);
      b.phis.col(j) = phis.col(i);
      b.gates(j) = gates(i);
    }
    return b;
  }
};

inline PreparedPairs prepare_pairs(const std::vector<TrainingPair>& pairs, GateKind kind, LossForm form) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "no training pairs");
  const auto d = pairs.front().profile.size();
  PreparedPairs out;
  const auto n = static_cast<Eigen::Index>(pairs.size());
  out.inputs.resize(d, n);
  out.targets.resize(d, n);
  out.phis.resize(3, n);
  out.gates.resize(n);
  out.sign = form == LossForm::Forward ? 1.0 : -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const TrainingPair& tp = pairs[static_cast<std::size_t>(i)];
    if (tp.profile.size() != d || tp.frontal.size() != d) {
      throw Error(ErrorCode::ShapeMismatch, "training pairs have inconsistent dimensions");
    }
    out.inputs.col(i) = form == LossForm::Forward ? tp.profile : tp.frontal;
    out.targets.col(i) = form == LossForm::Forward ? tp.frontal : tp.profile;
    out.phis.col(i) = pose_to_axis_angle(tp.pose).vector();
    out.gates(i) = gate(kind, tp.pose);
  }
  return out;
}

/// Mean per-pair loss of the current parameters over all prepared pairs.
inline double mean_loss(const SubnetParams& params, const PreparedPairs& data) {
  std::vector<std::size_t> all(static_cast<std::size_t>(data.size()));
  std::iota(all.begin(), all.end(), std::size_t{0});
  const ResidualBatch b = data.gather(all, 0, all.size());
  return residual_loss_grad(params, b, 0.0).loss_sum / static_cast<double>(data.size());
}

/// Continues training from `params`; appends one epoch-mean loss per epoch.
inline void train_epochs(SubnetParams& params, const PreparedPairs& data, const TrainConfig& cfg,
                         std::vector<double>& history, std::mt19937_64& rng) {
  MomentumSgd opt(params, cfg.momentum, cfg.weight_decay);
  std::vector<std::size_t> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = cfg.lr_at(epoch);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const ResidualBatch b = data.gather(order, start, end);
      const ResidualGradients g = residual_loss_grad(params, b, 1.0 / static_cast<double>(end - start));
      if (!std::isfinite(g.loss_sum)) {
        throw Error(ErrorCode::NonFiniteLoss, "loss diverged at epoch " + std::to_string(epoch));
      }
      total += g.loss_sum;
      opt.step(params, g.params, lr);
    }
    history.push_back(total / static_cast<double>(order.size()));
  }
}

inline TrainedModel train_subnet(const std::vector<TrainingPair>& pairs, const TrainConfig& cfg, GateKind gate_kind,
                                 const SubnetParams* warm_start = nullptr) {
  cfg.validate();
  const PreparedPairs data = prepare_pairs(pairs, gate_kind, cfg.loss_form);
  const int d = static_cast<int>(data.inputs.rows());
  const int hidden = cfg.hidden_dim > 0 ? cfg.hidden_dim : d;

  std::mt19937_64 rng(cfg.seed);
  TrainedModel model;
  model.gate_kind = gate_kind;
  model.config = cfg;
  if (warm_start) {
    warm_start->validate();
    if (warm_start->feature_dim() != d) throw Error(ErrorCode::ShapeMismatch, "warm start has wrong dimension");
    model.params = *warm_start;
  } else {
    model.params = SubnetParams::glorot(d, hidden, rng(), cfg.prelu_init);
  }
  train_epochs(model.params, data, cfg, model.loss_history, rng);
  if (model.loss_history.empty()) model.loss_history.push_back(mean_loss(model.params, data));
  return model;
}

}  // namespace larnet
