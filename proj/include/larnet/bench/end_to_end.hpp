#pragma once

// Joint training of the toy backbone projection and the residual subnet,
// followed by subnet-only fine-tuning on the frozen backbone.

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "larnet/bench/backbone.hpp"
#include "larnet/bench/dataset.hpp"
#include "larnet/residual_net.hpp"

namespace larnet::bench {

struct EndToEndConfig {
  int joint_epochs = 60;
  double backbone_lr_scale = 1.0;  // backbone lr = scale * subnet lr
  // Pulls P toward its initial value; without it the pair loss alone is
  // minimised by collapsing every feature onto one point.
  double anchor = 0.1;
  int finetune_epochs = 100;
  // Softmax identity classification on the backbone features during the
  // joint phase (logits = scale * W f). Weight 0 leaves only the pair loss.
  double id_loss_weight = 1.0;
  double id_logit_scale = 16.0;

  void validate() const {
    if (joint_epochs < 0 || finetune_epochs < 0) throw Error(ErrorCode::InvalidConfig, "epoch counts must be >= 0");
    if (!(id_loss_weight >= 0.0)) throw Error(ErrorCode::InvalidConfig, "id_loss_weight must be >= 0");
    if (!(id_logit_scale > 0.0)) throw Error(ErrorCode::InvalidConfig, "id_logit_scale must be > 0");
    if (!(backbone_lr_scale >= 0.0)) throw Error(ErrorCode::InvalidConfig, "backbone_lr_scale must be >= 0");
    if (!(anchor >= 0.0)) throw Error(ErrorCode::InvalidConfig, "anchor must be >= 0");
  }
};

struct EndToEndResult {
  ToyBackbone backbone;
  TrainedModel model;
  std::vector<double> joint_history;  // epoch-mean pair loss during the joint phase
  double loss_before_joint = 0.0;     // mean pair loss at initialisation
  double loss_after_joint = 0.0;      // mean pair loss once the joint phase ends
};

/// Softmax cross-entropy of scale * W f against integer labels, summed over
/// the batch columns. Adds weight * d(loss)/d(f) into d_feats and returns
/// d(loss)/dW (also scaled by weight).
inline double identity_softmax(const Eigen::MatrixXd& w, const Eigen::MatrixXd& feats, const std::vector<int>& labels,
                               double scale, double weight, Eigen::MatrixXd& d_feats, Eigen::MatrixXd& d_w) {
  Eigen::MatrixXd logits = scale * (w * feats);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    auto col = logits.col(j);
    const double mx = col.maxCoeff();
    col = (col.array() - mx).exp().matrix();
    const double z = col.sum();
    col /= z;
    loss -= std::log(col(labels[static_cast<std::size_t>(j)]));
    col(labels[static_cast<std::size_t>(j)]) -= 1.0;
  }
  logits *= weight * scale;  // (softmax - onehot) * weight * scale
  d_feats += w.transpose() * logits;
  d_w = logits * feats.transpose();
  return loss;
}

inline std::vector<TrainingPair> make_training_pairs(const ToyBackbone& backbone, const Dataset& ds) {
  const Eigen::MatrixXd feats = extract_all(backbone, ds.observations);
  std::vector<TrainingPair> pairs;
  for (const auto& [p, f] : frontal_profile_pairs(ds)) {
    pairs.push_back({feats.col(static_cast<Eigen::Index>(p)), feats.col(static_cast<Eigen::Index>(f)),
                     ds.observations[p].pose});
  }
  if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no frontal/profile pairs");
  return pairs;
}

/// The backbone passed in is the seed-initialised starting point; it is
/// copied, marked trainable, and returned updated.
inline EndToEndResult train_end_to_end(const Dataset& train, const ToyBackbone& init, const TrainConfig& cfg,
                                       const EndToEndConfig& e2e, GateKind gate_kind) {
  cfg.validate();
  e2e.validate();
  const auto idx = frontal_profile_pairs(train);
  if (idx.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no frontal/profile pairs");
  const Eigen::MatrixXd flat = flatten_observations(train.observations);
  const int d = init.feature_dim();
  const int hidden = cfg.hidden_dim > 0 ? cfg.hidden_dim : d;
  const bool forward = cfg.loss_form == LossForm::Forward;

  // Per-pair constants; the input side feeds the subnet, the other side is the target.
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd phis(3, n);
  Eigen::VectorXd gates(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const PoseAngles& pose = train.observations[idx[static_cast<std::size_t>(i)].first].pose;
    phis.col(i) = pose_to_axis_angle(pose).vector();
    gates(i) = gate(gate_kind, pose);
  }

  EndToEndResult res;
  res.backbone = init;
  res.backbone.set_trainable(true);
  std::mt19937_64 rng(cfg.seed);
  SubnetParams params = SubnetParams::glorot(d, hidden, rng(), cfg.prelu_init);

  const auto pair_loss = [&](const ToyBackbone& bb, const SubnetParams& sp) {
    const Eigen::MatrixXd feats = bb.extract_batch(flat);
    ResidualBatch b;
    b.feats.resize(d, n);
    b.targets.resize(d, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto [p, f] = idx[static_cast<std::size_t>(i)];
      b.feats.col(i) = feats.col(static_cast<Eigen::Index>(forward ? p : f));
      b.targets.col(i) = feats.col(static_cast<Eigen::Index>(forward ? f : p));
    }
    b.phis = phis;
    b.gates = gates;
    b.sign = forward ? 1.0 : -1.0;
    return residual_loss_grad(sp, b, 0.0).loss_sum / static_cast<double>(n);
  };
  res.loss_before_joint = pair_loss(res.backbone, params);

  // Identity labels compacted to 0..K-1 for the classification term.
  std::map<int, int> label_of;
  for (const Observation& o : train.observations) label_of.emplace(o.identity_id, static_cast<int>(label_of.size()));
  std::mt19937_64 cls_rng(rng());
  std::normal_distribution<double> cls_init(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  Eigen::MatrixXd cls = Eigen::MatrixXd::NullaryExpr(static_cast<Eigen::Index>(label_of.size()), d,
                                                     [&] { return cls_init(cls_rng); });
  Eigen::MatrixXd cls_velocity = Eigen::MatrixXd::Zero(cls.rows(), cls.cols());

  const Eigen::MatrixXd p0 = init.projection();
  MomentumSgd opt(params, cfg.momentum, cfg.weight_decay);
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(p0.rows(), p0.cols());
  std::vector<std::size_t> order(idx.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < e2e.joint_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = cfg.lr_at(epoch);
    const double lr_bb = e2e.backbone_lr_scale * lr;
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const auto m = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd x_in(flat.rows(), m), x_tg(flat.rows(), m);
      ResidualBatch b;
      b.phis.resize(3, m);
      b.gates.resize(m);
      b.sign = forward ? 1.0 : -1.0;
      std::vector<int> labels(static_cast<std::size_t>(m));
      for (Eigen::Index j = 0; j < m; ++j) {
        const std::size_t i = order[start + static_cast<std::size_t>(j)];
        const auto [p, f] = idx[i];
        labels[static_cast<std::size_t>(j)] = label_of.at(train.observations[p].identity_id);
        x_in.col(j) = flat.col(static_cast<Eigen::Index>(forward ? p : f));
        x_tg.col(j) = flat.col(static_cast<Eigen::Index>(forward ? f : p));
        b.phis.col(j) = phis.col(static_cast<Eigen::Index>(i));
        b.gates(j) = gates(static_cast<Eigen::Index>(i));
      }
      Eigen::MatrixXd act_in, act_tg;
      Eigen::VectorXd nrm_in, nrm_tg;
      b.feats = res.backbone.extract_batch(x_in, &act_in, &nrm_in);
      b.targets = res.backbone.extract_batch(x_tg, &act_tg, &nrm_tg);

      ResidualGradients g = residual_loss_grad(params, b, 1.0 / static_cast<double>(m), true);
      if (!std::isfinite(g.loss_sum)) {
        throw Error(ErrorCode::NonFiniteLoss, "joint loss diverged at epoch " + std::to_string(epoch));
      }
      total += g.loss_sum;
      if (e2e.id_loss_weight > 0.0) {
        const double wgt = e2e.id_loss_weight / (2.0 * static_cast<double>(m));
        Eigen::MatrixXd dw_in, dw_tg;
        identity_softmax(cls, b.feats, labels, e2e.id_logit_scale, wgt, g.feats, dw_in);
        identity_softmax(cls, b.targets, labels, e2e.id_logit_scale, wgt, g.targets, dw_tg);
        cls_velocity = cfg.momentum * cls_velocity + dw_in + dw_tg;
        cls -= lr * cls_velocity;
      }
      Eigen::MatrixXd grad_p = res.backbone.projection_gradient(x_in, b.feats, act_in, nrm_in, g.feats) +
                               res.backbone.projection_gradient(x_tg, b.targets, act_tg, nrm_tg, g.targets);
      grad_p += 2.0 * e2e.anchor * (res.backbone.projection() - p0);
      velocity = cfg.momentum * velocity + grad_p;
      opt.step(params, g.params, lr);
      res.backbone.update_projection(-lr_bb * velocity);
    }
    res.joint_history.push_back(total / static_cast<double>(order.size()));
  }
  res.loss_after_joint = pair_loss(res.backbone, params);

  res.backbone.set_trainable(false);
  TrainConfig fine = cfg;
  fine.epochs = e2e.finetune_epochs;
  // The frozen-backbone phase restarts the schedule at its own epoch 0.
  res.model = train_subnet(make_training_pairs(res.backbone, train), fine, gate_kind, &params);
  std::vector<double> history = res.joint_history;
  history.insert(history.end(), res.model.loss_history.begin(), res.model.loss_history.end());
  res.model.loss_history = std::move(history);
  res.model.config = cfg;
  return res;
}

}  // namespace larnet::bench
