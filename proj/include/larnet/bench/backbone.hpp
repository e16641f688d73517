#pragma once

// Toy feature extractor: F(x) = normalize(tanh(P * flatten(points))).

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "larnet/bench/dataset.hpp"
#include "larnet/residual_net.hpp"

namespace larnet::bench {

struct BackboneConfig {
  int feature_dim = 64;
  double gain = 1.5;
  bool mirror_paired = true;  // rows come in pairs related by y -> -y
  std::uint64_t seed = 11;

  void validate() const {
    if (feature_dim < 1) throw Error(ErrorCode::InvalidConfig, "feature_dim must be >= 1");
    if (mirror_paired && feature_dim % 2 != 0) {
      throw Error(ErrorCode::InvalidConfig, "mirror_paired backbone needs an even feature_dim");
    }
    if (!(gain > 0.0)) throw Error(ErrorCode::InvalidConfig, "gain must be > 0");
  }
};

inline Eigen::VectorXd flatten_points(const std::vector<Vec3>& pts) {
  Eigen::VectorXd x(3 * static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) x.segment<3>(3 * static_cast<Eigen::Index>(i)) = pts[i];
  return x;
}

/// Observations as the columns of a (3n x N) matrix.
inline Eigen::MatrixXd flatten_observations(const std::vector<Observation>& obs) {
  if (obs.empty()) return {};
  Eigen::MatrixXd x(3 * static_cast<Eigen::Index>(obs.front().points.size()), static_cast<Eigen::Index>(obs.size()));
  for (std::size_t j = 0; j < obs.size(); ++j) {
    if (3 * obs[j].points.size() != static_cast<std::size_t>(x.rows())) {
      throw Error(ErrorCode::ShapeMismatch, "observations have different landmark counts");
    }
    x.col(static_cast<Eigen::Index>(j)) = flatten_points(obs[j].points);
  }
  return x;
}

class ToyBackbone {
 public:
  ToyBackbone() = default;

  /// P entries ~ N(0, gain^2 / (3n)). With mirror pairing, row 2k+1 is row 2k
  /// with its y-coefficients negated, so mirroring the input swaps each pair
  /// of output features.
  ToyBackbone(const BackboneConfig& cfg, int n_landmarks, bool trainable = false)
      : mirror_paired_(cfg.mirror_paired), trainable_(trainable) {
    cfg.validate();
    if (n_landmarks < 1) throw Error(ErrorCode::InvalidConfig, "n_landmarks must be >= 1");
    const int cols = 3 * n_landmarks;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, cfg.gain / std::sqrt(static_cast<double>(cols)));
    projection_.resize(cfg.feature_dim, cols);
    for (Eigen::Index r = 0; r < projection_.rows(); ++r) {
      if (mirror_paired_ && r % 2 == 1) continue;
      for (Eigen::Index c = 0; c < cols; ++c) projection_(r, c) = gauss(rng);
    }
    if (mirror_paired_) tie_pairs(projection_);
  }

  ToyBackbone(Eigen::MatrixXd projection, bool mirror_paired, bool trainable)
      : projection_(std::move(projection)), mirror_paired_(mirror_paired), trainable_(trainable) {}

  const Eigen::MatrixXd& projection() const { return projection_; }
  int feature_dim() const { return static_cast<int>(projection_.rows()); }
  int input_dim() const { return static_cast<int>(projection_.cols()); }
  bool mirror_paired() const { return mirror_paired_; }
  bool trainable() const { return trainable_; }
  void set_trainable(bool t) { trainable_ = t; }
  static constexpr const char* nonlinearity() { return "tanh"; }

  FeatureVector extract(const Eigen::VectorXd& flat) const {
    if (flat.size() != projection_.cols()) throw Error(ErrorCode::ShapeMismatch, "observation size does not match backbone");
    const Eigen::VectorXd u = (projection_ * flat).array().tanh().matrix();
    return u / u.norm();
  }

  /// Column-wise extraction; also returns the un-normalized activations and
  /// their norms when asked (needed for back-propagation).
  Eigen::MatrixXd extract_batch(const Eigen::MatrixXd& flat, Eigen::MatrixXd* act = nullptr,
                                Eigen::VectorXd* norms = nullptr) const {
    if (flat.rows() != projection_.cols()) throw Error(ErrorCode::ShapeMismatch, "observation size does not match backbone");
    Eigen::MatrixXd u = (projection_ * flat).array().tanh().matrix();
    const Eigen::VectorXd n = u.colwise().norm().transpose();
    Eigen::MatrixXd f = u * n.cwiseInverse().asDiagonal();
    if (act) *act = std::move(u);
    if (norms) *norms = n;
    return f;
  }

  /// d(loss)/dP given d(loss)/d(features) for a batch, consistent with the
  /// row tying when the backbone is mirror paired.
  Eigen::MatrixXd projection_gradient(const Eigen::MatrixXd& flat, const Eigen::MatrixXd& feats,
                                      const Eigen::MatrixXd& act, const Eigen::VectorXd& norms,
                                      const Eigen::MatrixXd& d_feats) const {
    // f = u / |u|: du = (df - f (f . df)) / |u|; u = tanh(a): da = du (1 - u^2).
    const Eigen::RowVectorXd proj = (feats.cwiseProduct(d_feats)).colwise().sum();
    Eigen::MatrixXd du = (d_feats - feats * proj.asDiagonal()) * norms.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd da = du.cwiseProduct((1.0 - act.array().square()).matrix());
    Eigen::MatrixXd g = da * flat.transpose();
    if (mirror_paired_) {
      for (Eigen::Index r = 0; r + 1 < g.rows(); r += 2) {
        Eigen::RowVectorXd twin = g.row(r + 1);
        for (Eigen::Index c = 1; c < twin.size(); c += 3) twin(c) = -twin(c);
        g.row(r) += twin;
      }
      tie_pairs(g);
    }
    return g;
  }

  void update_projection(const Eigen::MatrixXd& delta) {
    if (delta.rows() != projection_.rows() || delta.cols() != projection_.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "projection update has wrong shape");
    }
    projection_ += delta;
    if (mirror_paired_) tie_pairs(projection_);
  }

 private:
  static void tie_pairs(Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r + 1 < m.rows(); r += 2) {
      m.row(r + 1) = m.row(r);
      for (Eigen::Index c = 1; c < m.cols(); c += 3) m(r + 1, c) = -m(r, c);
    }
  }

  Eigen::MatrixXd projection_;
  bool mirror_paired_ = true;
  bool trainable_ = false;
};

inline FeatureVector extract_features(const ToyBackbone& backbone, const Observation& obs) {
  return backbone.extract(flatten_points(obs.points));
}

/// Features of every observation, as columns.
inline Eigen::MatrixXd extract_all(const ToyBackbone& backbone, const std::vector<Observation>& obs) {
  return backbone.extract_batch(flatten_observations(obs));
}

}  // namespace larnet::bench
