#pragma once

// Gradient descent on SO(3) through left perturbations.
//
// Each step perturbs the current estimate on the left, R <- exp((-alpha D delta)^) R,
// where delta is the gradient of the objective with respect to the
// perturbation vector. Iterates never leave the group.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "larnet/so3.hpp"

namespace larnet {

/// Scalar objective u(R) over SO(3), optionally with its perturbation-space
/// gradient. Alignment objectives also expose their point pairs.
class RotationObjective {
 public:
  using ValueFn = std::function<double(const RotationMatrix&)>;
  using GradientFn = std::function<Vec3(const RotationMatrix&)>;

  explicit RotationObjective(ValueFn value, GradientFn gradient = {})
      : value_(std::move(value)), gradient_(std::move(gradient)) {}

  double value(const RotationMatrix& r) const { return value_(r); }
  bool has_gradient() const { return static_cast<bool>(gradient_); }
  Vec3 gradient(const RotationMatrix& r) const { return gradient_(r); }

  std::span<const Vec3> source_points() const { return src_; }
  std::span<const Vec3> target_points() const { return dst_; }

 private:
  friend RotationObjective wahba_objective(std::vector<Vec3>, std::vector<Vec3>);

  ValueFn value_;
  GradientFn gradient_;
  std::vector<Vec3> src_;
  std::vector<Vec3> dst_;
};

struct OptimizerConfig {
  double alpha = 0.5;
  Mat3 d_matrix = Mat3::Identity();
  int max_iters = 1000;
  double grad_tol = 1e-9;
  double step_tol = 1e-12;
  bool backtracking = true;
  int max_halvings = 20;
  double fd_step = 1e-6;  // used only when the objective has no gradient

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidConfig, "alpha must be > 0");
    if (max_iters < 0) throw Error(ErrorCode::InvalidConfig, "max_iters must be >= 0");
    if (!d_matrix.allFinite() || (d_matrix - d_matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw Error(ErrorCode::InvalidConfig, "D must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(d_matrix, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "D must be positive definite");
    }
  }
};

enum class StopReason { GradTol, StepTol, MaxIters };

constexpr std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::GradTol: return "GradTol";
    case StopReason::StepTol: return "StepTol";
    case StopReason::MaxIters: return "MaxIters";
  }
  return "?";
}

struct Iterate {
  RotationMatrix rotation;
  double value = 0.0;
  double grad_norm = 0.0;
};

struct OptimizerTrace {
  std::vector<Iterate> iterates;
  bool converged = false;
  StopReason reason = StopReason::MaxIters;

  const Iterate& last() const { return iterates.back(); }
};

inline RotationMatrix perturbation_step(const RotationMatrix& r, const Vec3& delta, const OptimizerConfig& cfg) {
  const Vec3 step = -cfg.alpha * (cfg.d_matrix * delta);
  RotationMatrix next = exp_map(step) * r;
  if (next.defect() > 1e-12) next = project_to_rotation(next.matrix());
  return next;
}

/// Central differences of u(exp(+-h e_k) R) over the three basis perturbations.
inline Vec3 numeric_gradient(const RotationObjective& obj, const RotationMatrix& r, double h) {
  if (!(h > 0.0) || h > 1e-2) throw Error(ErrorCode::InvalidArgument, "h must be in (0, 1e-2]");
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    const Vec3 e = Vec3::Unit(k) * h;
    g(k) = (obj.value(exp_map(e) * r) - obj.value(exp_map(Vec3(-e)) * r)) / (2.0 * h);
  }
  return g;
}

inline OptimizerTrace minimize(const RotationObjective& obj, const RotationMatrix& r0, const OptimizerConfig& cfg) {
  cfg.validate();
  const auto evaluate = [&](const RotationMatrix& r) {
    const double u = obj.value(r);
    if (!std::isfinite(u)) throw Error(ErrorCode::NonFiniteObjective, "objective is not finite at an iterate");
    return u;
  };
  const auto grad = [&](const RotationMatrix& r) {
    return obj.has_gradient() ? obj.gradient(r) : numeric_gradient(obj, r, cfg.fd_step);
  };

  OptimizerTrace trace;
  RotationMatrix r = r0;
  double u = evaluate(r);
  bool step_small = false;
  for (int iter = 0;; ++iter) {
    const Vec3 delta = grad(r);
    const double gn = delta.norm();
    trace.iterates.push_back({r, u, gn});
    if (gn <= cfg.grad_tol) {
      trace.converged = true;
      trace.reason = StopReason::GradTol;
      break;
    }
    if (step_small) {
      trace.converged = true;
      trace.reason = StopReason::StepTol;
      break;
    }
    if (iter >= cfg.max_iters) {
      trace.reason = StopReason::MaxIters;
      break;
    }

    OptimizerConfig step_cfg = cfg;
    RotationMatrix next = perturbation_step(r, delta, step_cfg);
    double u_next = evaluate(next);
    for (int h = 0; cfg.backtracking && u_next > u && h < cfg.max_halvings; ++h) {
      step_cfg.alpha *= 0.5;
      next = perturbation_step(r, delta, step_cfg);
      u_next = evaluate(next);
    }
    step_small = step_cfg.alpha * (cfg.d_matrix * delta).norm() <= cfg.step_tol;
    r = next;
    u = u_next;
  }
  return trace;
}

/// u(R) = (1/N) sum_i |R p_i - q_i|^2 with its analytic perturbation gradient
/// delta = (1/N) sum_i J_i^T 2 (R p_i - q_i), J_i = -(R p_i)^.
///
/// Pairs are stored in a canonical (lexicographic) order, so the objective and
/// everything computed from it is independent of how the caller listed them.
inline RotationObjective wahba_objective(std::vector<Vec3> src, std::vector<Vec3> dst) {
  if (src.size() != dst.size()) throw Error(ErrorCode::LengthMismatch, "source/target point counts differ");
  if (src.empty()) throw Error(ErrorCode::EmptyInput, "no point pairs");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!src[i].allFinite() || !dst[i].allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite point");
  }

  std::vector<std::size_t> order(src.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto key = [&](std::size_t i) {
    return std::make_tuple(src[i].x(), src[i].y(), src[i].z(), dst[i].x(), dst[i].y(), dst[i].z());
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<Vec3> p, q;
  for (std::size_t i : order) {
    p.push_back(src[i]);
    q.push_back(dst[i]);
  }

  const double inv_n = 1.0 / static_cast<double>(p.size());
  auto value = [p, q, inv_n](const RotationMatrix& r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += (r.matrix() * p[i] - q[i]).squaredNorm();
    return sum * inv_n;
  };
  auto gradient = [p, q, inv_n](const RotationMatrix& r) {
    Vec3 g = Vec3::Zero();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Mat3 J = perturbation_derivative(r, p[i]);
      g += J.transpose() * (2.0 * (r.matrix() * p[i] - q[i]));
    }
    return Vec3(g * inv_n);
  };
  RotationObjective obj(std::move(value), std::move(gradient));
  obj.src_ = std::move(p);
  obj.dst_ = std::move(q);
  return obj;
}

struct WahbaProblem {
  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  RotationMatrix truth;
  RotationMatrix init;
};

/// Points uniform in [-1, 1]^3, dst = R_gt src + N(0, sigma^2) noise, and an
/// initial guess exp(v) R_gt with |v| = init_angle in a random direction.
inline WahbaProblem random_wahba_problem(std::uint64_t seed, int n_points, double noise_sigma, double init_angle) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto direction = [&] {
    Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    return Vec3(v.normalized());
  };
  WahbaProblem prob;
  std::uniform_real_distribution<double> angle(0.0, kPi);
  prob.truth = exp_map(Vec3(direction() * angle(rng)));
  for (int i = 0; i < n_points; ++i) {
    const Vec3 p(unit(rng), unit(rng), unit(rng));
    Vec3 q = prob.truth.matrix() * p;
    if (noise_sigma > 0.0) q += noise_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    prob.src.push_back(p);
    prob.dst.push_back(q);
  }
  prob.init = exp_map(Vec3(direction() * init_angle)) * prob.truth;
  return prob;
}

}  // namespace larnet
