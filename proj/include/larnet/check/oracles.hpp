#pragma once

// Reference computations used to validate the library. Each one takes a
// deliberately different route from the production code path: truncated
// power series instead of closed forms, adjugate inversion instead of the
// closed-form inverse Jacobian, finite differences instead of analytic
// derivatives, and O(n^2) threshold enumeration instead of sorted sweeps.
// Nothing in here is used by the library itself.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include <Eigen/Core>

namespace larnet::oracle {

/// sum_{n < terms} M^n / n!
template <typename Matrix>
Matrix series_exp(const Matrix& m, int terms = 40) {
  Matrix sum = Matrix::Identity(m.rows(), m.cols());
  Matrix power = Matrix::Identity(m.rows(), m.cols());
  for (int n = 1; n < terms; ++n) {
    power = (power * m) / static_cast<double>(n);
    sum += power;
  }
  return sum;
}

/// sum_{n < terms} M^n / (n+1)!
template <typename Matrix>
Matrix series_left_jacobian(const Matrix& m, int terms = 40) {
  Matrix sum = Matrix::Identity(m.rows(), m.cols());
  Matrix power = Matrix::Identity(m.rows(), m.cols());
  for (int n = 1; n < terms; ++n) {
    power = (power * m) / static_cast<double>(n + 1);
    sum += power;
  }
  return sum;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 1) = -v(2);
  m(0, 2) = v(1);
  m(1, 0) = v(2);
  m(1, 2) = -v(0);
  m(2, 0) = -v(1);
  m(2, 1) = v(0);
  return m;
}

/// 3x3 inverse through the adjugate.
inline Eigen::Matrix3d adjugate_inverse(const Eigen::Matrix3d& a) {
  Eigen::Matrix3d cof;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const int r0 = (r + 1) % 3, r1 = (r + 2) % 3;
      const int c0 = (c + 1) % 3, c1 = (c + 2) % 3;
      cof(r, c) = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
    }
  }
  const double det = a.row(0).dot(cof.row(0));
  return cof.transpose() / det;
}

/// Central-difference Jacobian of f : R^m -> R^n at x.
inline Eigen::MatrixXd central_difference(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    jac.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

// ---- verification metrics ---------------------------------------------------

struct OperatingPoint {
  double far = 0.0;
  double frr = 0.0;
};

/// FAR/FRR at every distinct operating point, evaluated at midpoints between
/// consecutive distinct scores plus one threshold below and one above them
/// all, in increasing threshold order. Counts are taken by direct scanning.
inline std::vector<OperatingPoint> midpoint_sweep(const std::vector<double>& genuine,
                                                  const std::vector<double>& impostor) {
  std::set<double> distinct(genuine.begin(), genuine.end());
  distinct.insert(impostor.begin(), impostor.end());
  const std::vector<double> s(distinct.begin(), distinct.end());
  std::vector<double> thresholds;
  thresholds.push_back(s.front() - 1.0);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) thresholds.push_back(0.5 * (s[i] + s[i + 1]));
  thresholds.push_back(s.back() + 1.0);

  std::vector<OperatingPoint> pts;
  for (double t : thresholds) {
    int fa = 0, fr = 0;
    for (double g : genuine) fr += (g < t) ? 1 : 0;
    for (double i : impostor) fa += (i >= t) ? 1 : 0;
    pts.push_back({static_cast<double>(fa) / static_cast<double>(impostor.size()),
                   static_cast<double>(fr) / static_cast<double>(genuine.size())});
  }
  return pts;
}

/// EER as the FAR at which the piecewise-linear FAR and FRR curves (over the
/// operating-point index) cross.
inline double eer_bruteforce(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  const auto pts = midpoint_sweep(genuine, impostor);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double d0 = pts[k].far - pts[k].frr;
    if (d0 == 0.0) return pts[k].far;
    if (k + 1 < pts.size()) {
      const double d1 = pts[k + 1].far - pts[k + 1].frr;
      if (d0 > 0.0 && d1 < 0.0) {
        const double lambda = d0 / (d0 - d1);
        return pts[k].far + lambda * (pts[k + 1].far - pts[k].far);
      }
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// TAR at the smallest candidate threshold (any observed score, or +inf)
/// whose FAR does not exceed the target.
inline double tar_bruteforce(const std::vector<double>& genuine, const std::vector<double>& impostor,
                             double target) {
  std::vector<double> candidates(genuine);
  candidates.insert(candidates.end(), impostor.begin(), impostor.end());
  candidates.push_back(std::numeric_limits<double>::infinity());
  double best_t = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    int fa = 0;
    for (double i : impostor) fa += (i >= t) ? 1 : 0;
    if (static_cast<double>(fa) / static_cast<double>(impostor.size()) <= target) best_t = std::min(best_t, t);
  }
  int ta = 0;
  for (double g : genuine) ta += (g >= best_t) ? 1 : 0;
  return static_cast<double>(ta) / static_cast<double>(genuine.size());
}

/// Rank-k accuracy by fully sorting the gallery for each probe.
inline double rank_k_bruteforce(const std::vector<Eigen::VectorXd>& probes, const std::vector<int>& probe_ids,
                                const std::vector<Eigen::VectorXd>& gallery, const std::vector<int>& gallery_ids,
                                int k) {
  int hits = 0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    std::vector<std::pair<double, int>> ranked;
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      const double cos = probes[p].dot(gallery[g]) / (probes[p].norm() * gallery[g].norm());
      ranked.emplace_back(-cos, gallery_ids[g]);
    }
    std::sort(ranked.begin(), ranked.end());
    for (int r = 0; r < k && r < static_cast<int>(ranked.size()); ++r) {
      if (ranked[r].second == probe_ids[p]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(probes.size());
}

// ---- residual subnet ---------------------------------------------------------

/// Two-layer PReLU network evaluated entry by entry with plain loops.
inline Eigen::VectorXd mlp_loops(const Eigen::MatrixXd& w1, const Eigen::VectorXd& b1, double slope,
                                 const Eigen::MatrixXd& w2, const Eigen::VectorXd& b2,
                                 const Eigen::VectorXd& input) {
  std::vector<double> hidden(static_cast<std::size_t>(w1.rows()));
  for (Eigen::Index i = 0; i < w1.rows(); ++i) {
    double acc = b1(i);
    for (Eigen::Index j = 0; j < w1.cols(); ++j) acc += w1(i, j) * input(j);
    hidden[static_cast<std::size_t>(i)] = acc > 0.0 ? acc : slope * acc;
  }
  Eigen::VectorXd out(w2.rows());
  for (Eigen::Index i = 0; i < w2.rows(); ++i) {
    double acc = b2(i);
    for (Eigen::Index j = 0; j < w2.cols(); ++j) acc += w2(i, j) * hidden[static_cast<std::size_t>(j)];
    out(i) = acc;
  }
  return out;
}

}  // namespace larnet::oracle
