#pragma once

// JSON for configs, models, datasets and reports.
//
// Readers are strict: an unknown key anywhere is an InvalidConfig error, as
// is a value of the wrong type. Missing keys keep their defaults. Doubles are
// written in shortest round-trip form, so reading a document back yields
// bit-identical values.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "larnet/bench/experiment.hpp"

namespace larnet::bench {

using nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(where) + ": expected a JSON object");
}

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::InvalidConfig, std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, std::string_view where) {
  if (!j.contains(key)) return;
  try {
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw Error(ErrorCode::InvalidConfig, "");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw Error(ErrorCode::InvalidConfig, "");
      if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) throw Error(ErrorCode::InvalidConfig, "");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, "");
    }
    out = v.get<T>();
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string(where) + "." + key + ": value has the wrong type");
  }
}

inline json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_rows(const json& j, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": wrong number of rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd vector_from(const json& j, Eigen::Index n, std::string_view what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": wrong length");
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace detail

// ---- configs ------------------------------------------------------------------

inline json to_json(const DataConfig& c) {
  return {{"n_identities", c.n_identities}, {"obs_per_identity", c.obs_per_identity},
          {"pose_range", c.pose_range},     {"pitch_range", c.pitch_range},
          {"roll_range", c.roll_range},     {"noise_sigma", c.noise_sigma},
          {"n_landmarks", c.n_landmarks},   {"identity_scale", c.identity_scale},
          {"flip_augment", c.flip_augment}, {"train_fraction", c.train_fraction}};
}

inline void from_json_strict(const json& j, DataConfig& c) {
  constexpr std::string_view w = "data";
  detail::check_keys(j, {"n_identities", "obs_per_identity", "pose_range", "pitch_range", "roll_range", "noise_sigma",
                         "n_landmarks", "identity_scale", "flip_augment", "train_fraction"}, w);
  detail::read(j, "n_identities", c.n_identities, w);
  detail::read(j, "obs_per_identity", c.obs_per_identity, w);
  detail::read(j, "pose_range", c.pose_range, w);
  detail::read(j, "pitch_range", c.pitch_range, w);
  detail::read(j, "roll_range", c.roll_range, w);
  detail::read(j, "noise_sigma", c.noise_sigma, w);
  detail::read(j, "n_landmarks", c.n_landmarks, w);
  detail::read(j, "identity_scale", c.identity_scale, w);
  detail::read(j, "flip_augment", c.flip_augment, w);
  detail::read(j, "train_fraction", c.train_fraction, w);
}

inline json to_json(const BackboneConfig& c) {
  return {{"feature_dim", c.feature_dim}, {"gain", c.gain}, {"mirror_paired", c.mirror_paired}};
}

inline void from_json_strict(const json& j, BackboneConfig& c) {
  constexpr std::string_view w = "backbone";
  detail::check_keys(j, {"feature_dim", "gain", "mirror_paired"}, w);
  detail::read(j, "feature_dim", c.feature_dim, w);
  detail::read(j, "gain", c.gain, w);
  detail::read(j, "mirror_paired", c.mirror_paired, w);
}

/// Hyper-parameters only; seed and loss form live elsewhere in experiment
/// configs and are added by the model snapshot.
inline json to_json(const TrainConfig& c) {
  json sched = json::array();
  for (const auto& [epoch, divisor] : c.lr_schedule) sched.push_back({epoch, divisor});
  return {{"lr", c.lr},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr_schedule", sched},
          {"hidden_dim", c.hidden_dim},
          {"prelu_init", c.prelu_init}};
}

inline void from_json_strict(const json& j, TrainConfig& c, bool snapshot = false) {
  constexpr std::string_view w = "train";
  if (snapshot) {
    detail::check_keys(j, {"lr", "momentum", "weight_decay", "epochs", "batch_size", "lr_schedule", "hidden_dim",
                           "prelu_init", "seed", "loss_form"}, w);
  } else {
    detail::check_keys(j, {"lr", "momentum", "weight_decay", "epochs", "batch_size", "lr_schedule", "hidden_dim",
                           "prelu_init"}, w);
  }
  detail::read(j, "lr", c.lr, w);
  detail::read(j, "momentum", c.momentum, w);
  detail::read(j, "weight_decay", c.weight_decay, w);
  detail::read(j, "epochs", c.epochs, w);
  detail::read(j, "batch_size", c.batch_size, w);
  detail::read(j, "hidden_dim", c.hidden_dim, w);
  detail::read(j, "prelu_init", c.prelu_init, w);
  if (j.contains("lr_schedule")) {
    const json& s = j.at("lr_schedule");
    if (!s.is_array()) throw Error(ErrorCode::InvalidConfig, "train.lr_schedule must be an array of [epoch, divisor]");
    c.lr_schedule.clear();
    for (const json& e : s) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number()) {
        throw Error(ErrorCode::InvalidConfig, "train.lr_schedule entries must be [epoch, divisor]");
      }
      c.lr_schedule.emplace_back(e[0].get<int>(), e[1].get<double>());
    }
  }
  if (snapshot) {
    detail::read(j, "seed", c.seed, w);
    if (j.contains("loss_form")) {
      const std::string f = j.at("loss_form").get<std::string>();
      if (f != "forward" && f != "inverse") throw Error(ErrorCode::InvalidConfig, "train.loss_form must be forward|inverse");
      c.loss_form = f == "forward" ? LossForm::Forward : LossForm::Inverse;
    }
  }
}

inline json to_json(const EndToEndConfig& c) {
  return {{"joint_epochs", c.joint_epochs},     {"finetune_epochs", c.finetune_epochs},
          {"backbone_lr_scale", c.backbone_lr_scale}, {"anchor", c.anchor},
          {"id_loss_weight", c.id_loss_weight}, {"id_logit_scale", c.id_logit_scale}};
}

inline void from_json_strict(const json& j, EndToEndConfig& c) {
  constexpr std::string_view w = "end_to_end";
  detail::check_keys(j, {"joint_epochs", "finetune_epochs", "backbone_lr_scale", "anchor", "id_loss_weight",
                         "id_logit_scale"}, w);
  detail::read(j, "joint_epochs", c.joint_epochs, w);
  detail::read(j, "finetune_epochs", c.finetune_epochs, w);
  detail::read(j, "backbone_lr_scale", c.backbone_lr_scale, w);
  detail::read(j, "anchor", c.anchor, w);
  detail::read(j, "id_loss_weight", c.id_loss_weight, w);
  detail::read(j, "id_logit_scale", c.id_logit_scale, w);
}

inline GateKind gate_from_json(const json& j, std::string_view where) {
  if (!j.is_string()) throw Error(ErrorCode::InvalidConfig, std::string(where) + " must be a string");
  const auto k = parse_gate_kind(j.get<std::string>());
  if (!k) throw Error(ErrorCode::InvalidConfig, std::string(where) + ": unknown gate kind '" + j.get<std::string>() + "'");
  return *k;
}

inline Arm parse_arm(const std::string& s) {
  const auto slash = s.find('/');
  const auto kind = parse_arm_kind(s.substr(0, slash));
  if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown arm '" + s + "'");
  Arm a{*kind, GateKind::AbsSin};
  if (slash != std::string::npos) {
    const auto g = parse_gate_kind(s.substr(slash + 1));
    if (!g || *kind == ArmKind::Backbone) throw Error(ErrorCode::InvalidConfig, "bad gate in arm '" + s + "'");
    a.gate = *g;
  }
  return a;
}

inline json to_json(const ExperimentConfig& c) {
  json arms = json::array();
  for (const Arm& a : c.arms) arms.push_back(a.name());
  return {{"seed", c.seed},
          {"data", to_json(c.data)},
          {"backbone", to_json(c.backbone)},
          {"train", to_json(c.train)},
          {"loss", {{"form", std::string(to_string(c.train.loss_form))}}},
          {"gating", {{"kind", std::string(to_string(c.gate))}}},
          {"end_to_end", to_json(c.end_to_end)},
          {"experiment", {{"arms", arms}, {"far_targets", c.far_targets}}}};
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  detail::check_keys(j, {"seed", "data", "backbone", "train", "loss", "gating", "end_to_end", "experiment"}, "config");
  detail::read(j, "seed", c.seed, "config");
  if (j.contains("data")) from_json_strict(j.at("data"), c.data);
  if (j.contains("backbone")) from_json_strict(j.at("backbone"), c.backbone);
  if (j.contains("train")) from_json_strict(j.at("train"), c.train);
  if (j.contains("end_to_end")) from_json_strict(j.at("end_to_end"), c.end_to_end);
  if (j.contains("loss")) {
    const json& l = j.at("loss");
    detail::check_keys(l, {"form"}, "loss");
    if (l.contains("form")) {
      const json& f = l.at("form");
      if (f == "forward") {
        c.train.loss_form = LossForm::Forward;
      } else if (f == "inverse") {
        c.train.loss_form = LossForm::Inverse;
      } else {
        throw Error(ErrorCode::InvalidConfig, "loss.form must be \"forward\" or \"inverse\"");
      }
    }
  }
  if (j.contains("gating")) {
    const json& g = j.at("gating");
    detail::check_keys(g, {"kind"}, "gating");
    if (g.contains("kind")) c.gate = gate_from_json(g.at("kind"), "gating.kind");
  }
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    detail::check_keys(e, {"arms", "far_targets"}, "experiment");
    if (e.contains("arms")) {
      if (!e.at("arms").is_array()) throw Error(ErrorCode::InvalidConfig, "experiment.arms must be an array");
      c.arms.clear();
      for (const json& a : e.at("arms")) {
        if (!a.is_string()) throw Error(ErrorCode::InvalidConfig, "experiment.arms entries must be strings");
        c.arms.push_back(parse_arm(a.get<std::string>()));
      }
    }
    detail::read(e, "far_targets", c.far_targets, "experiment");
  }
  c.validate();
  return c;
}

/// LARNET_SEED, when set, replaces the configured base seed.
inline void apply_seed_override(ExperimentConfig& c, const char* env_value) {
  if (!env_value) return;
  const std::string s(env_value);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  const bool digits = !s.empty() && std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
  if (!digits || used != s.size()) {
    throw Error(ErrorCode::InvalidConfig, "LARNET_SEED must be a non-negative integer, got '" + s + "'");
  }
  c.seed = v;
}

inline json parse_json_text(const std::string& text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for '" + path + "'");
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(parse_json_text(read_file(path), path));
}

// ---- seeds for single (non-sweep) runs -------------------------------------------

/// The replica-0 instantiation the CLI uses for gen/train/eval.
struct ResolvedSeeds {
  std::uint64_t data, split, backbone, train;
};

inline ResolvedSeeds resolve_seeds(const ExperimentConfig& c, const Arm& arm) {
  return {derive_seed(c.seed, "data", 0), derive_seed(c.seed, "split", 0), derive_seed(c.seed, "backbone", 0),
          derive_seed(c.seed, arm.name(), 0)};
}

// ---- models -----------------------------------------------------------------------

inline json to_json(const ToyBackbone& b) {
  return {{"feature_dim", b.feature_dim()},
          {"input_dim", b.input_dim()},
          {"nonlinearity", ToyBackbone::nonlinearity()},
          {"mirror_paired", b.mirror_paired()},
          {"trainable", b.trainable()},
          {"projection", detail::matrix_rows(b.projection())}};
}

inline ToyBackbone backbone_from_json(const json& j) {
  detail::check_keys(j, {"feature_dim", "input_dim", "nonlinearity", "mirror_paired", "trainable", "projection"},
                     "backbone");
  if (j.value("nonlinearity", "tanh") != std::string("tanh")) {
    throw Error(ErrorCode::InvalidConfig, "backbone: unsupported nonlinearity");
  }
  const int d = j.at("feature_dim").get<int>();
  const int in = j.at("input_dim").get<int>();
  return ToyBackbone(detail::matrix_from_rows(j.at("projection"), d, in, "backbone.projection"),
                     j.at("mirror_paired").get<bool>(), j.value("trainable", false));
}

struct ModelBundle {
  TrainedModel model;
  ToyBackbone backbone;
  bool end_to_end = false;
  json experiment;  // config snapshot (informational)
};

inline json to_json(const TrainedModel& m) {
  json cfg = to_json(m.config);
  cfg["seed"] = m.config.seed;
  cfg["loss_form"] = std::string(to_string(m.config.loss_form));
  return {{"feature_dim", m.params.feature_dim()},
          {"hidden_dim", m.params.hidden_dim()},
          {"gate_kind", std::string(to_string(m.gate_kind))},
          {"w1", detail::matrix_rows(m.params.w1)},
          {"b1", detail::vector_json(m.params.b1)},
          {"a1", m.params.a1},
          {"w2", detail::matrix_rows(m.params.w2)},
          {"b2", detail::vector_json(m.params.b2)},
          {"loss_history", m.loss_history},
          {"config", cfg}};
}

inline TrainedModel trained_model_from_json(const json& j) {
  detail::check_keys(j, {"feature_dim", "hidden_dim", "gate_kind", "w1", "b1", "a1", "w2", "b2", "loss_history",
                         "config"}, "model");
  TrainedModel m;
  const int d = j.at("feature_dim").get<int>();
  const int h = j.at("hidden_dim").get<int>();
  m.gate_kind = gate_from_json(j.at("gate_kind"), "model.gate_kind");
  m.params.w1 = detail::matrix_from_rows(j.at("w1"), h, d + 3, "model.w1");
  m.params.b1 = detail::vector_from(j.at("b1"), h, "model.b1");
  m.params.a1 = j.at("a1").get<double>();
  m.params.w2 = detail::matrix_from_rows(j.at("w2"), d, h, "model.w2");
  m.params.b2 = detail::vector_from(j.at("b2"), d, "model.b2");
  m.params.validate();
  m.loss_history = j.at("loss_history").get<std::vector<double>>();
  if (j.contains("config")) from_json_strict(j.at("config"), m.config, true);
  return m;
}

inline json to_json(const ModelBundle& b) {
  return {{"format_version", kModelFormatVersion},
          {"kind", b.end_to_end ? "larnet+" : "larnet"},
          {"model", to_json(b.model)},
          {"backbone", to_json(b.backbone)},
          {"experiment", b.experiment}};
}

inline ModelBundle model_bundle_from_json(const json& j) try {
  detail::check_keys(j, {"format_version", "kind", "model", "backbone", "experiment"}, "model file");
  if (!j.contains("format_version") || !j.at("format_version").is_number_integer()) {
    throw Error(ErrorCode::ParseError, "model file has no format_version");
  }
  if (j.at("format_version").get<int>() != kModelFormatVersion) {
    throw Error(ErrorCode::ParseError, "unsupported model format_version " + j.at("format_version").dump());
  }
  ModelBundle b;
  const std::string kind = j.value("kind", "larnet");
  if (kind != "larnet" && kind != "larnet+") throw Error(ErrorCode::ParseError, "unknown model kind '" + kind + "'");
  b.end_to_end = kind == "larnet+";
  b.model = trained_model_from_json(j.at("model"));
  b.backbone = backbone_from_json(j.at("backbone"));
  if (b.backbone.feature_dim() != b.model.params.feature_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "backbone and subnet feature dimensions differ");
  }
  b.experiment = j.value("experiment", json::object());
  return b;
} catch (const json::exception& e) {
  throw Error(ErrorCode::ParseError, std::string("model file: ") + e.what());
}

// ---- datasets (JSON lines) -------------------------------------------------------

inline json to_json(const Observation& o) {
  std::vector<double> flat;
  flat.reserve(3 * o.points.size());
  for (const Vec3& p : o.points) flat.insert(flat.end(), {p.x(), p.y(), p.z()});
  return {{"id", o.identity_id},
          {"pose", {o.pose.pitch, o.pose.yaw, o.pose.roll}},
          {"points", flat},
          {"noise_sigma", o.noise_sigma},
          {"mirrored", o.mirrored}};
}

inline Observation observation_from_json(const json& j) {
  detail::check_keys(j, {"id", "pose", "points", "noise_sigma", "mirrored"}, "observation");
  Observation o;
  try {
    o.identity_id = j.at("id").get<int>();
    const auto pose = j.at("pose").get<std::vector<double>>();
    if (pose.size() != 3) throw Error(ErrorCode::ParseError, "observation.pose must have 3 entries");
    o.pose = {pose[0], pose[1], pose[2]};
    validate_pose(o.pose);
    o.rotation = pose_to_rotation(o.pose);
    const auto flat = j.at("points").get<std::vector<double>>();
    if (flat.empty() || flat.size() % 3 != 0) throw Error(ErrorCode::ParseError, "observation.points length must be a multiple of 3");
    for (std::size_t i = 0; i < flat.size(); i += 3) o.points.emplace_back(flat[i], flat[i + 1], flat[i + 2]);
    o.noise_sigma = j.value("noise_sigma", 0.0);
    o.mirrored = j.value("mirrored", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("observation: ") + e.what());
  }
  return o;
}

inline std::string to_jsonl(const std::vector<Observation>& obs) {
  std::string out;
  for (const Observation& o : obs) {
    out += to_json(o).dump();
    out += '\n';
  }
  return out;
}

/// Observations from JSON lines; identities are rebuilt from the ids seen.
inline Dataset dataset_from_jsonl(const std::string& text) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  std::vector<int> ids;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ds.observations.push_back(observation_from_json(parse_json_text(line, "line " + std::to_string(lineno))));
    ids.push_back(ds.observations.back().identity_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (int id : ids) ds.identities.push_back({id, {}});
  if (ds.observations.empty()) throw Error(ErrorCode::EmptyDataset, "dataset file has no observations");
  return ds;
}

// ---- reports ----------------------------------------------------------------------

inline json to_json(const EvalReport& r) {
  json tar = json::array();
  for (const TarAtFar& t : r.tar_at_far) {
    tar.push_back({{"far", t.target}, {"tar", t.tar}, {"threshold", t.threshold},
                   {"insufficient_impostors", t.insufficient_impostors}});
  }
  return {{"eer", r.eer},
          {"verification_accuracy", r.verification_accuracy()},
          {"tar_at_far", tar},
          {"rank_k", {{"1", r.rank1}, {"5", r.rank5}}},
          {"n_genuine", r.n_genuine},
          {"n_impostor", r.n_impostor}};
}

/// %.17g, the fixed-width decimal form used in CSV output.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "threshold,far,frr,tar\n";
  for (const CurvePoint& p : curve) {
    out += fmt17(p.threshold) + "," + fmt17(p.far) + "," + fmt17(p.frr) + "," + fmt17(p.tar) + "\n";
  }
  return out;
}

inline std::string sweep_csv(const std::vector<ArmResult>& results) {
  std::string out = "arm,gate,seed,eer,tar@1e-2,tar@1e-3,rank1,rank5\n";
  const auto tar = [](const EvalReport& r, double t) {
    for (const TarAtFar& x : r.tar_at_far) {
      if (x.target == t) return fmt17(x.tar);
    }
    return std::string();
  };
  for (const ArmResult& r : results) {
    out += std::string(to_string(r.arm.kind)) + "," +
           (r.arm.kind == ArmKind::Backbone ? std::string("none") : std::string(to_string(r.arm.gate))) + "," +
           std::to_string(r.replica) + "," + fmt17(r.report.eer) + "," + tar(r.report, 1e-2) + "," +
           tar(r.report, 1e-3) + "," + fmt17(r.report.rank1) + "," + fmt17(r.report.rank5) + "\n";
  }
  return out;
}

}  // namespace larnet::bench
