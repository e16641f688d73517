#pragma once

// Verification and identification metrics over cosine scores.
//
// A pair is accepted when its score is >= the threshold. Operating points are
// taken between consecutive distinct scores (plus one below and one above all
// of them), so FAR falls and FRR rises along the sweep.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "larnet/error.hpp"

namespace larnet::bench {

struct CurvePoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  double tar = 0.0;
};

inline void require_scores(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  if (genuine.empty() || impostor.empty()) throw Error(ErrorCode::EmptyScores, "genuine and impostor scores must be nonempty");
}

inline std::vector<CurvePoint> score_curve(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  require_scores(genuine, impostor);
  std::vector<double> g = genuine, im = impostor;
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> s;
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(s));
  s.erase(std::unique(s.begin(), s.end()), s.end());

  const double ng = static_cast<double>(g.size()), ni = static_cast<double>(im.size());
  std::vector<CurvePoint> curve;
  curve.reserve(s.size() + 1);
  std::size_t gi = 0, ii = 0;  // scores strictly below the current threshold
  for (std::size_t k = 0; k <= s.size(); ++k) {
    double t;
    if (k == 0) {
      t = s.front() - 1.0;
    } else {
      while (gi < g.size() && g[gi] <= s[k - 1]) ++gi;
      while (ii < im.size() && im[ii] <= s[k - 1]) ++ii;
      t = k == s.size() ? s.back() + 1.0 : 0.5 * (s[k - 1] + s[k]);
    }
    const double far = static_cast<double>(im.size() - ii) / ni;
    const double frr = static_cast<double>(gi) / ng;
    curve.push_back({t, far, frr, 1.0 - frr});
  }
  return curve;
}

/// Rate at which FAR and FRR cross, interpolated linearly between the two
/// operating points that bracket the crossing.
inline double compute_eer(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  const auto curve = score_curve(genuine, impostor);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const double d0 = curve[k].far - curve[k].frr;
    if (d0 == 0.0) return curve[k].far;
    if (k + 1 < curve.size()) {
      const double d1 = curve[k + 1].far - curve[k + 1].frr;
      if (d0 > 0.0 && d1 < 0.0) {
        const double lambda = d0 / (d0 - d1);
        return curve[k].far + lambda * (curve[k + 1].far - curve[k].far);
      }
    }
  }
  // Unreachable: the sweep starts at FAR=1, FRR=0 and ends at FAR=0, FRR=1.
  return std::numeric_limits<double>::quiet_NaN();
}

struct TarAtFar {
  double target = 0.0;
  double tar = 0.0;
  double threshold = 0.0;
  bool insufficient_impostors = false;  // fewer than 1/target impostor pairs
};

/// For each target: the smallest threshold among the observed scores (or
/// +inf) with empirical FAR <= target, and the TAR there.
inline std::vector<TarAtFar> compute_tar_at_far(const std::vector<double>& genuine, const std::vector<double>& impostor,
                                                const std::vector<double>& far_targets) {
  require_scores(genuine, impostor);
  std::vector<double> g = genuine, im = impostor;
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> cand;
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(cand));
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  cand.push_back(std::numeric_limits<double>::infinity());
  const double ni = static_cast<double>(im.size());
  const auto far_at = [&](double t) {
    return static_cast<double>(im.end() - std::lower_bound(im.begin(), im.end(), t)) / ni;
  };

  std::vector<TarAtFar> out;
  for (double target : far_targets) {
    if (!(target > 0.0 && target < 1.0)) throw Error(ErrorCode::InvalidArgument, "FAR target must be in (0, 1)");
    // FAR is non-increasing in the threshold: binary search the first feasible candidate.
    const auto it = std::partition_point(cand.begin(), cand.end(), [&](double t) { return far_at(t) > target; });
    const double t = *it;
    const auto accepted = g.end() - std::lower_bound(g.begin(), g.end(), t);
    out.push_back({target, static_cast<double>(accepted) / static_cast<double>(g.size()), t,
                   ni < 1.0 / target});
  }
  return out;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

/// Fraction of probes whose identity is among the k most similar gallery
/// entries; equal similarities rank the lower identity id first.
inline double identification_rank_k(const std::vector<Eigen::VectorXd>& probes, const std::vector<int>& probe_ids,
                                    const std::vector<Eigen::VectorXd>& gallery, const std::vector<int>& gallery_ids,
                                    int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (probes.size() != probe_ids.size() || gallery.size() != gallery_ids.size()) {
    throw Error(ErrorCode::LengthMismatch, "feature and id lists differ in length");
  }
  if (probes.empty() || gallery.empty()) throw Error(ErrorCode::EmptyScores, "no probes or empty gallery");
  std::set<int> seen;
  for (int id : gallery_ids) {
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateGalleryIdentity, "gallery identity repeated: " + std::to_string(id));
  }

  int hits = 0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto own = std::find(gallery_ids.begin(), gallery_ids.end(), probe_ids[p]);
    if (own == gallery_ids.end()) continue;  // unknown identity: never a hit
    const double own_score = cosine(probes[p], gallery[static_cast<std::size_t>(own - gallery_ids.begin())]);
    int ahead = 0;
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      if (gallery_ids[g] == probe_ids[p]) continue;
      const double s = cosine(probes[p], gallery[g]);
      if (s > own_score || (s == own_score && gallery_ids[g] < probe_ids[p])) ++ahead;
    }
    if (ahead < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probes.size());
}

}  // namespace larnet::bench
