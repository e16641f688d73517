#pragma once

// Synthetic frontal/profile observations of 3D landmark "faces".

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "larnet/gating.hpp"
#include "larnet/so3.hpp"

namespace larnet::bench {

struct DataConfig {
  int n_identities = 200;
  int obs_per_identity = 8;
  double pose_range = kPi / 2;  // yaw ~ U[-pose_range, pose_range]
  double pitch_range = 0.0;
  double roll_range = 0.0;
  double noise_sigma = 0.01;
  int n_landmarks = 32;
  double identity_scale = 0.35;  // per-identity deviation from the shared template
  bool flip_augment = true;
  double train_fraction = 0.8;
  std::uint64_t seed = 7;

  void validate() const {
    constexpr double half_pi = kPi / 2;
    if (n_identities < 2) throw Error(ErrorCode::InvalidConfig, "n_identities must be >= 2");
    if (obs_per_identity < 1) throw Error(ErrorCode::InvalidConfig, "obs_per_identity must be >= 1");
    if (!(pose_range > 0.0 && pose_range <= half_pi)) throw Error(ErrorCode::InvalidConfig, "pose_range must be in (0, pi/2]");
    if (!(pitch_range >= 0.0 && pitch_range <= half_pi)) throw Error(ErrorCode::InvalidConfig, "pitch_range must be in [0, pi/2]");
    if (!(roll_range >= 0.0 && roll_range <= half_pi)) throw Error(ErrorCode::InvalidConfig, "roll_range must be in [0, pi/2]");
    if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidConfig, "noise_sigma must be >= 0");
    if (n_landmarks < 3) throw Error(ErrorCode::InvalidConfig, "n_landmarks must be >= 3");
    if (!(identity_scale >= 0.0)) throw Error(ErrorCode::InvalidConfig, "identity_scale must be >= 0");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error(ErrorCode::InvalidConfig, "train_fraction must be in (0, 1)");
  }
};

struct Identity3D {
  int id = 0;
  std::vector<Vec3> landmarks;  // centred, RMS radius 1
};

struct Observation {
  int identity_id = 0;
  PoseAngles pose;
  RotationMatrix rotation;
  std::vector<Vec3> points;
  double noise_sigma = 0.0;
  bool mirrored = false;

  bool frontal() const { return pose == PoseAngles{}; }
};

struct Dataset {
  std::vector<Identity3D> identities;
  std::vector<Observation> observations;
};

/// Reflection y -> -y, the 3D counterpart of a horizontal image flip.
inline Vec3 mirror_point(const Vec3& p) { return {p.x(), -p.y(), p.z()}; }

inline void normalize_shape(std::vector<Vec3>& pts) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double ss = 0.0;
  for (auto& p : pts) {
    p -= centroid;
    ss += p.squaredNorm();
  }
  const double rms = std::sqrt(ss / static_cast<double>(pts.size()));
  for (auto& p : pts) p /= rms;
}

inline Observation mirrored(const Observation& o) {
  Observation m = o;
  m.pose = mirror(o.pose);
  m.rotation = pose_to_rotation(m.pose);
  for (auto& p : m.points) p = mirror_point(p);
  m.mirrored = !o.mirrored;
  return m;
}

/// Per identity: one frontal observation followed by obs_per_identity - 1
/// posed ones. With flip augmentation every observation also gets a mirrored
/// copy (appended after the originals).
inline Dataset generate_dataset(const DataConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = static_cast<std::size_t>(cfg.n_landmarks);

  std::vector<Vec3> tmpl(n);
  for (auto& p : tmpl) p = Vec3(gauss(rng), gauss(rng), gauss(rng));
  normalize_shape(tmpl);

  Dataset ds;
  for (int id = 0; id < cfg.n_identities; ++id) {
    Identity3D ident{id, tmpl};
    for (auto& p : ident.landmarks) p += cfg.identity_scale * Vec3(gauss(rng), gauss(rng), gauss(rng));
    normalize_shape(ident.landmarks);
    ds.identities.push_back(std::move(ident));
  }

  const auto sample = [&rng](double range) {
    if (range <= 0.0) return 0.0;
    return std::uniform_real_distribution<double>(-range, range)(rng);
  };
  for (const Identity3D& ident : ds.identities) {
    for (int k = 0; k < cfg.obs_per_identity; ++k) {
      Observation o;
      o.identity_id = ident.id;
      o.noise_sigma = cfg.noise_sigma;
      if (k > 0) {
        o.pose.yaw = sample(cfg.pose_range);
        o.pose.pitch = sample(cfg.pitch_range);
        o.pose.roll = sample(cfg.roll_range);
      }
      o.rotation = pose_to_rotation(o.pose);
      o.points.reserve(n);
      for (const Vec3& l : ident.landmarks) {
        Vec3 p = o.rotation.matrix() * l;
        if (cfg.noise_sigma > 0.0) p += cfg.noise_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
        o.points.push_back(p);
      }
      ds.observations.push_back(std::move(o));
    }
  }
  if (cfg.flip_augment) {
    const std::size_t originals = ds.observations.size();
    for (std::size_t i = 0; i < originals; ++i) ds.observations.push_back(mirrored(ds.observations[i]));
  }
  return ds;
}

struct Split {
  Dataset train;
  Dataset test;
};

/// Identity-disjoint split. Mirrored copies stay with the training side only.
inline Split split_by_identity(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  std::vector<int> ids;
  for (const auto& ident : ds.identities) ids.push_back(ident.id);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::clamp<double>(std::round(train_fraction * static_cast<double>(ids.size())), 1.0,
                         static_cast<double>(ids.size() - 1)));
  const std::set<int> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));

  Split s;
  for (const auto& ident : ds.identities) (train_ids.count(ident.id) ? s.train : s.test).identities.push_back(ident);
  for (const auto& o : ds.observations) {
    if (train_ids.count(o.identity_id)) {
      s.train.observations.push_back(o);
    } else if (!o.mirrored) {
      s.test.observations.push_back(o);
    }
  }
  return s;
}

/// (profile, frontal) observation indices: every posed observation paired
/// with the frontal view of the same identity and the same mirroring.
inline std::vector<std::pair<std::size_t, std::size_t>> frontal_profile_pairs(const Dataset& ds) {
  std::map<std::pair<int, bool>, std::size_t> frontal;
  for (std::size_t i = 0; i < ds.observations.size(); ++i) {
    const Observation& o = ds.observations[i];
    if (o.frontal()) frontal.emplace(std::make_pair(o.identity_id, o.mirrored), i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < ds.observations.size(); ++i) {
    const Observation& o = ds.observations[i];
    if (o.frontal()) continue;
    const auto it = frontal.find({o.identity_id, o.mirrored});
    if (it != frontal.end()) out.emplace_back(i, it->second);
  }
  return out;
}

}  // namespace larnet::bench
