#pragma once

// Benchmark protocol: generate, split by identity, train, evaluate.
//
// Gallery: the frontal view of every held-out identity. Probes: all posed
// views of the held-out identities. Both sides go through the model with
// their own pose before cosine scoring; every probe is scored against every
// gallery entry (one genuine pair per probe, the rest impostor).

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "larnet/bench/backbone.hpp"
#include "larnet/bench/dataset.hpp"
#include "larnet/bench/end_to_end.hpp"
#include "larnet/bench/metrics.hpp"
#include "larnet/residual_net.hpp"

namespace larnet::bench {

enum class ArmKind { Backbone, Larnet, LarnetPlus };

constexpr std::string_view to_string(ArmKind a) {
  switch (a) {
    case ArmKind::Backbone: return "backbone";
    case ArmKind::Larnet: return "larnet";
    case ArmKind::LarnetPlus: return "larnet+";
  }
  return "?";
}

inline std::optional<ArmKind> parse_arm_kind(std::string_view s) {
  for (ArmKind a : {ArmKind::Backbone, ArmKind::Larnet, ArmKind::LarnetPlus}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

struct Arm {
  ArmKind kind = ArmKind::Larnet;
  GateKind gate = GateKind::AbsSin;  // unused by the backbone arm

  std::string name() const {
    return kind == ArmKind::Backbone ? std::string(to_string(kind))
                                     : std::string(to_string(kind)) + "/" + std::string(to_string(gate));
  }
  bool operator==(const Arm&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  DataConfig data;
  BackboneConfig backbone;
  TrainConfig train;
  EndToEndConfig end_to_end;
  GateKind gate = GateKind::AbsSin;
  std::vector<Arm> arms{{ArmKind::Backbone, GateKind::AbsSin},  {ArmKind::Larnet, GateKind::Identity},
                        {ArmKind::Larnet, GateKind::Linear},    {ArmKind::Larnet, GateKind::Sigmoid},
                        {ArmKind::Larnet, GateKind::AbsSin},    {ArmKind::LarnetPlus, GateKind::AbsSin}};
  std::vector<double> far_targets{1e-2, 1e-3};

  void validate() const {
    data.validate();
    backbone.validate();
    train.validate();
    end_to_end.validate();
    if (arms.empty()) throw Error(ErrorCode::InvalidConfig, "no experiment arms configured");
    for (double t : far_targets) {
      if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::InvalidConfig, "far targets must be in (0, 1)");
    }
  }
};

struct EvalReport {
  double eer = 0.0;
  std::vector<TarAtFar> tar_at_far;
  double rank1 = 0.0;
  double rank5 = 0.0;
  std::size_t n_genuine = 0;
  std::size_t n_impostor = 0;

  double verification_accuracy() const { return 1.0 - eer; }
  double tar_at(double target) const {
    for (const auto& t : tar_at_far) {
      if (t.target == target) return t.tar;
    }
    throw Error(ErrorCode::InvalidArgument, "TAR not computed at requested FAR");
  }
};

struct Scores {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

struct Evaluation {
  EvalReport report;
  Scores scores;
};

/// Corrected features for every observation. Without a model the backbone
/// features are returned as they are.
inline Eigen::MatrixXd corrected_features(const ToyBackbone& backbone, const TrainedModel* model,
                                          const std::vector<Observation>& obs) {
  Eigen::MatrixXd f = extract_all(backbone, obs);
  if (model) {
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      f.col(j) = frontalize(*model, f.col(j), obs[static_cast<std::size_t>(j)].pose);
    }
  }
  return f;
}

inline Evaluation evaluate(const ToyBackbone& backbone, const TrainedModel* model, const Dataset& test,
                           const std::vector<double>& far_targets) {
  const Eigen::MatrixXd f = corrected_features(backbone, model, test.observations);
  std::vector<Eigen::VectorXd> gallery, probes;
  std::vector<int> gallery_ids, probe_ids;
  for (std::size_t i = 0; i < test.observations.size(); ++i) {
    const Observation& o = test.observations[i];
    if (o.mirrored) continue;
    if (o.frontal()) {
      gallery.push_back(f.col(static_cast<Eigen::Index>(i)));
      gallery_ids.push_back(o.identity_id);
    } else {
      probes.push_back(f.col(static_cast<Eigen::Index>(i)));
      probe_ids.push_back(o.identity_id);
    }
  }
  if (probes.empty() || gallery.size() < 2) throw Error(ErrorCode::EmptyDataset, "test split needs probes and >= 2 gallery entries");

  Evaluation ev;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      const double s = cosine(probes[p], gallery[g]);
      (probe_ids[p] == gallery_ids[g] ? ev.scores.genuine : ev.scores.impostor).push_back(s);
    }
  }
  ev.report.eer = compute_eer(ev.scores.genuine, ev.scores.impostor);
  ev.report.tar_at_far = compute_tar_at_far(ev.scores.genuine, ev.scores.impostor, far_targets);
  ev.report.rank1 = identification_rank_k(probes, probe_ids, gallery, gallery_ids, 1);
  ev.report.rank5 = identification_rank_k(probes, probe_ids, gallery, gallery_ids, 5);
  ev.report.n_genuine = ev.scores.genuine.size();
  ev.report.n_impostor = ev.scores.impostor.size();
  return ev;
}

// ---- seeding -------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t replica) {
  std::uint64_t h = splitmix64(base);
  for (char c : stream) h = splitmix64(h ^ static_cast<unsigned char>(c));
  return splitmix64(h ^ splitmix64(replica + 1));
}

// ---- runs -----------------------------------------------------------------------

/// Data, split and backbone for one seed replica; shared by every arm so the
/// arms are compared on identical inputs.
struct ReplicaSetup {
  Split split;
  ToyBackbone backbone;
};

inline ReplicaSetup make_replica(const ExperimentConfig& cfg, std::uint64_t replica) {
  DataConfig dc = cfg.data;
  dc.seed = derive_seed(cfg.seed, "data", replica);
  BackboneConfig bc = cfg.backbone;
  bc.seed = derive_seed(cfg.seed, "backbone", replica);
  const Dataset ds = generate_dataset(dc);
  return {split_by_identity(ds, dc.train_fraction, derive_seed(cfg.seed, "split", replica)),
          ToyBackbone(bc, dc.n_landmarks)};
}

struct ArmResult {
  Arm arm;
  std::uint64_t replica = 0;
  EvalReport report;
  Scores scores;
  std::optional<TrainedModel> model;
  std::optional<ToyBackbone> backbone;  // set when the arm trained its own
};

inline ArmResult run_arm(const ExperimentConfig& cfg, const ReplicaSetup& setup, const Arm& arm,
                         std::uint64_t replica) {
  ArmResult r{arm, replica, {}, {}, std::nullopt, std::nullopt};
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, arm.name(), replica);
  Evaluation ev;
  switch (arm.kind) {
    case ArmKind::Backbone:
      ev = evaluate(setup.backbone, nullptr, setup.split.test, cfg.far_targets);
      break;
    case ArmKind::Larnet:
      r.model = train_subnet(make_training_pairs(setup.backbone, setup.split.train), tc, arm.gate);
      ev = evaluate(setup.backbone, &*r.model, setup.split.test, cfg.far_targets);
      break;
    case ArmKind::LarnetPlus: {
      EndToEndResult e = train_end_to_end(setup.split.train, setup.backbone, tc, cfg.end_to_end, arm.gate);
      ev = evaluate(e.backbone, &e.model, setup.split.test, cfg.far_targets);
      r.model = std::move(e.model);
      r.backbone = std::move(e.backbone);
      break;
    }
  }
  r.report = ev.report;
  r.scores = std::move(ev.scores);
  return r;
}

/// Every configured arm on every replica in [0, n_seeds). Models and scores
/// are dropped to keep sweeps light.
inline std::vector<ArmResult> run_sweep(const ExperimentConfig& cfg, int n_seeds) {
  cfg.validate();
  if (n_seeds < 1) throw Error(ErrorCode::InvalidConfig, "need at least one seed");
  std::vector<ArmResult> out;
  for (int s = 0; s < n_seeds; ++s) {
    const auto replica = static_cast<std::uint64_t>(s);
    const ReplicaSetup setup = make_replica(cfg, replica);
    for (const Arm& arm : cfg.arms) {
      ArmResult r = run_arm(cfg, setup, arm, replica);
      r.model.reset();
      r.backbone.reset();
      r.scores = {};
      out.push_back(std::move(r));
    }
  }
  return out;
}

struct ArmSummary {
  Arm arm;
  int n = 0;
  double mean_eer = 0.0;
  double mean_accuracy = 0.0;
  double mean_tar_1e2 = 0.0;
  double mean_rank1 = 0.0;
};

inline std::vector<ArmSummary> summarize(const std::vector<ArmResult>& results) {
  std::vector<ArmSummary> out;
  for (const ArmResult& r : results) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ArmSummary& s) { return s.arm == r.arm; });
    if (it == out.end()) {
      out.push_back({r.arm, 0, 0, 0, 0, 0});
      it = out.end() - 1;
    }
    it->n += 1;
    it->mean_eer += r.report.eer;
    it->mean_accuracy += r.report.verification_accuracy();
    it->mean_tar_1e2 += r.report.tar_at_far.empty() ? 0.0 : r.report.tar_at_far.front().tar;
    it->mean_rank1 += r.report.rank1;
  }
  for (ArmSummary& s : out) {
    s.mean_eer /= s.n;
    s.mean_accuracy /= s.n;
    s.mean_tar_1e2 /= s.n;
    s.mean_rank1 /= s.n;
  }
  return out;
}

}  // namespace larnet::bench
