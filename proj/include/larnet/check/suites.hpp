#pragma once

// Property suites shared by the acceptance binary and `larnet selftest`.
// Each suite returns one pass/fail result with a short measurement summary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "larnet/bench/experiment.hpp"
#include "larnet/check/fixtures.hpp"
#include "larnet/check/oracles.hpp"
#include "larnet/gating.hpp"
#include "larnet/manifold_opt.hpp"
#include "larnet/residual_net.hpp"
#include "larnet/se3.hpp"
#include "larnet/so3.hpp"

namespace larnet::check {

struct SuiteResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Runs body, times it, and fails the suite when it exceeds the time limit
/// or throws.
inline SuiteResult timed(int id, std::string name, double limit_s,
                         const std::function<bool(std::string&)>& body) {
  SuiteResult r{id, std::move(name), false, {}, 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r.passed = body(r.detail);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0 && r.seconds > limit_s) {
    r.passed = false;
    r.detail += " (over the " + sci(limit_s) + " s limit)";
  }
  return r;
}

/// Uniform in the ball of the given radius.
inline Vec3 random_in_ball(std::mt19937_64& rng, double radius) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec3 dir = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
  return dir * (radius * std::cbrt(unit(rng)));
}

inline SuiteResult lie_algebra_suite() {
  return timed(1, "so3 exp/log round trip, series oracle, trace and axis identities", 5.0, [](std::string& detail) {
    std::mt19937_64 rng(1001);
    double rt = 0, series = 0, trace = 0, axis = 0;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 phi = random_in_ball(rng, kPi / 2);
      const AxisAngle aa(phi);
      const RotationMatrix r = exp_map(aa);
      rt = std::max(rt, (log_map(r).vector() - phi).norm());
      series = std::max(series, (r.matrix() - oracle::series_exp(hat(phi), 40)).cwiseAbs().maxCoeff());
      trace = std::max(trace, std::abs(r.trace() - (2.0 * std::cos(aa.angle()) + 1.0)));
      if (aa.angle() > 0.0) axis = std::max(axis, (r.matrix() * aa.axis() - aa.axis()).norm());
    }
    detail = "round-trip " + sci(rt) + ", series " + sci(series) + ", trace " + sci(trace) + ", axis " + sci(axis);
    return rt <= 1e-9 && series <= 1e-12 && trace <= 1e-10 && axis <= 1e-10;
  });
}

inline SuiteResult algebra_properties_suite() {
  return timed(2, "so3 closure / alternativity / Jacobi / bilinearity", 0.0, [](std::string& detail) {
    const PropertyReport rep = check_algebra_properties(1002, 1000);
    detail = "closure " + sci(rep.closure) + ", alternativity " + sci(rep.alternativity) + ", jacobi " +
             sci(rep.jacobi) + ", bilinearity " + sci(rep.bilinearity) + " over " + std::to_string(rep.trials);
    return rep.trials == 1000 && rep.max_violation() <= 1e-10;
  });
}

inline SuiteResult derivative_suite() {
  return timed(3, "perturbation derivative and subnet backprop vs finite differences", 0.0, [](std::string& detail) {
    std::mt19937_64 rng(1003);
    double pert = 0;
    for (int i = 0; i < 200; ++i) {
      const RotationMatrix r = exp_map(random_in_ball(rng, kPi));
      const Vec3 p = random_in_ball(rng, 3.0);
      const auto f = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
        return rotate_point(exp_map(Vec3(d)) * r, p);
      };
      const Eigen::MatrixXd fd = oracle::central_difference(f, Eigen::VectorXd::Zero(3), 1e-5);
      pert = std::max(pert, (fd - perturbation_derivative(r, p)).cwiseAbs().maxCoeff());
    }
    double backprop = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      for (LossForm form : {LossForm::Forward, LossForm::Inverse}) {
        backprop = std::max(backprop, fixture::subnet_gradient_check(fixture::micro_instance(2000 + s, 4, 4, 6, form), 1e-5));
      }
    }
    detail = "perturbation " + sci(pert) + ", subnet relative " + sci(backprop);
    return pert <= 1e-6 && backprop <= 1e-5;
  });
}

inline SuiteResult bch_suite() {
  return timed(4, "first-order left BCH error shrinks quadratically", 0.0, [](std::string& detail) {
    std::mt19937_64 rng(1004);
    double worst = 1e300;
    for (int i = 0; i < 100; ++i) {
      const AxisAngle phi(random_in_ball(rng, kPi / 2));
      const Vec3 dir = random_in_ball(rng, 1.0).normalized();
      const auto err = [&](double scale) {
        const Vec3 d = scale * dir;
        return (bch_compose_left(d, phi).vector() - log_map(exp_map(d) * exp_map(phi)).vector()).norm();
      };
      worst = std::min(worst, err(1e-2) / err(5e-3));
    }
    detail = "smallest shrink factor " + sci(worst);
    return worst >= 3.5;
  });
}

inline SuiteResult wahba_suite() {
  return timed(5, "Wahba gradient descent on SO(3)", 10.0, [](std::string& detail) {
    std::mt19937_64 rng(1005);
    std::uniform_real_distribution<double> init_angle(0.0, kPi / 3);
    double worst_err = 0, worst_defect = 0;
    int max_used = 0, failures = 0;
    OptimizerConfig cfg;
    cfg.max_iters = 200;
    for (int t = 0; t < 100; ++t) {
      const WahbaProblem prob = random_wahba_problem(rng(), 20, 0.0, init_angle(rng));
      const OptimizerTrace tr = minimize(wahba_objective(prob.src, prob.dst), prob.init, cfg);
      for (const Iterate& it : tr.iterates) {
        worst_defect = std::max({worst_defect, it.rotation.defect(), std::abs(it.rotation.matrix().determinant() - 1.0)});
      }
      const double err = geodesic_distance(tr.last().rotation, prob.truth);
      worst_err = std::max(worst_err, err);
      max_used = std::max(max_used, static_cast<int>(tr.iterates.size()) - 1);
      failures += err <= 1e-6 ? 0 : 1;
    }
    detail = "worst geodesic error " + sci(worst_err) + ", most iterations " + std::to_string(max_used) +
             ", worst SO(3) defect " + sci(worst_defect);
    return failures == 0 && max_used <= 200 && worst_defect <= 1e-9;
  });
}

inline SuiteResult se3_suite() {
  return timed(6, "se3 exp vs 4x4 series, exp/log round trip", 0.0, [](std::string& detail) {
    std::mt19937_64 rng(1006);
    double series = 0, rt = 0;
    for (int i = 0; i < 500; ++i) {
      const Twist xi{random_in_ball(rng, 2.0), random_in_ball(rng, kPi / 2)};
      const Transform tf = se3_exp(xi);
      const Eigen::Matrix4d s = oracle::series_exp(Eigen::Matrix4d(twist_hat(xi)), 40);
      series = std::max(series, (tf.matrix() - s).cwiseAbs().maxCoeff());
      const Twist back = se3_log(tf);
      rt = std::max({rt, (back.rho - xi.rho).norm(), (back.phi - xi.phi).norm()});
    }
    detail = "series " + sci(series) + ", round-trip " + sci(rt);
    return series <= 1e-11 && rt <= 1e-9;
  });
}

inline SuiteResult gating_suite() {
  return timed(7, "gate endpoints and mirror symmetry", 0.0, [](std::string& detail) {
    std::mt19937_64 rng(1007);
    std::uniform_real_distribution<double> ang(-kPi / 2, kPi / 2);
    bool zero_ok = gate(GateKind::AbsSin, PoseAngles{}) == 0.0;
    bool one_ok = true, mirror_ok = true;
    for (int i = 0; i < 1000; ++i) {
      const PoseAngles p{ang(rng), ang(rng), ang(rng)};
      for (GateKind k : kAllGateKinds) mirror_ok = mirror_ok && gate(k, p) == gate(k, mirror(p));
      const double end = (i % 2 ? 1.0 : -1.0) * kPi / 2;
      PoseAngles q = p;
      (i % 3 == 0 ? q.pitch : i % 3 == 1 ? q.yaw : q.roll) = end;
      one_ok = one_ok && gate(GateKind::AbsSin, q) == 1.0;
    }
    detail = std::string("zero pose ") + (zero_ok ? "exact" : "WRONG") + ", quarter-turn component " +
             (one_ok ? "exact" : "WRONG") + ", mirror " + (mirror_ok ? "exact" : "WRONG");
    return zero_ok && one_ok && mirror_ok;
  });
}

inline SuiteResult frontalize_identity_suite() {
  return timed(8, "gate-zero frontalization returns its input bitwise", 0.0, [](std::string& detail) {
    std::mt19937_64 rng(1008);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int d = 16;
    TrainedModel model;
    model.params = SubnetParams::glorot(d, d, 1008);
    model.params.b2.setConstant(0.5);  // a nonzero C(f, 0), to show the gate alone suppresses it
    int mismatches = 0;
    for (GateKind k : {GateKind::AbsSin, GateKind::Linear}) {
      model.gate_kind = k;
      for (int i = 0; i < 500; ++i) {
        FeatureVector f(d);
        for (int j = 0; j < d; ++j) f(j) = gauss(rng);
        const FeatureVector out = frontalize(model, f, PoseAngles{});
        mismatches += std::memcmp(out.data(), f.data(), sizeof(double) * d) == 0 ? 0 : 1;
      }
    }
    detail = std::to_string(mismatches) + " of 1000 outputs differ";
    return mismatches == 0;
  });
}

inline SuiteResult realizable_training_suite() {
  return timed(9, "realizable-target subnet training", 30.0, [](std::string& detail) {
    const auto pairs = fixture::realizable_pairs(1009, 8, 2000);
    TrainConfig cfg;
    cfg.seed = 1009;
    const TrainedModel a = train_subnet(pairs, cfg, GateKind::AbsSin);
    const TrainedModel b = train_subnet(pairs, cfg, GateKind::AbsSin);
    const bool same = a.loss_history == b.loss_history;
    detail = "final epoch-mean loss " + sci(a.loss_history.back()) + " after " +
             std::to_string(a.loss_history.size()) + " epochs, rerun " + (same ? "identical" : "DIFFERS");
    return a.loss_history.size() <= 200 && a.loss_history.back() <= 1e-3 && same;
  });
}

/// Scores on a coarse grid so ties are common.
inline std::vector<double> random_scores(std::mt19937_64& rng, int n, double shift) {
  std::uniform_int_distribution<int> grid(0, 20);
  std::vector<double> s;
  for (int i = 0; i < n; ++i) s.push_back(0.05 * grid(rng) + shift);
  return s;
}

inline SuiteResult metric_oracle_suite() {
  return timed(12, "EER / TAR@FAR / rank-k vs brute force", 0.0, [](std::string& detail) {
    std::mt19937_64 rng(1012);
    int eer_bad = 0, tar_bad = 0, rank_bad = 0;
    const std::vector<double> targets{0.5, 0.2, 0.1, 1e-2, 1e-3};
    for (int inst = 0; inst < 1000; ++inst) {
      std::uniform_int_distribution<int> count(1, 25);
      std::uniform_real_distribution<double> shift(-0.3, 0.3);
      const auto gen = random_scores(rng, count(rng), shift(rng));
      const auto imp = random_scores(rng, count(rng), 0.0);
      if (bench::compute_eer(gen, imp) != oracle::eer_bruteforce(gen, imp)) ++eer_bad;
      const auto tars = bench::compute_tar_at_far(gen, imp, targets);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        if (tars[t].tar != oracle::tar_bruteforce(gen, imp, targets[t])) ++tar_bad;
      }

      std::uniform_int_distribution<int> gsize(1, 8), psize(1, 12), dim(2, 4), level(-2, 2);
      const int ng = gsize(rng), np = psize(rng), d = dim(rng);
      std::vector<int> gallery_ids(static_cast<std::size_t>(ng));
      for (int g = 0; g < ng; ++g) gallery_ids[static_cast<std::size_t>(g)] = 3 * g + 1;
      std::shuffle(gallery_ids.begin(), gallery_ids.end(), rng);
      const auto feature = [&] {
        Eigen::VectorXd f(d);
        for (int k = 0; k < d; ++k) f(k) = level(rng);
        if (f.isZero()) f(0) = 1.0;
        return f;
      };
      std::vector<Eigen::VectorXd> gallery, probes;
      std::vector<int> probe_ids;
      for (int g = 0; g < ng; ++g) gallery.push_back(feature());
      for (int p = 0; p < np; ++p) {
        probes.push_back(feature());
        probe_ids.push_back(gallery_ids[std::uniform_int_distribution<std::size_t>(0, gallery_ids.size() - 1)(rng)]);
      }
      for (int k : {1, 2, 5}) {
        if (bench::identification_rank_k(probes, probe_ids, gallery, gallery_ids, k) !=
            oracle::rank_k_bruteforce(probes, probe_ids, gallery, gallery_ids, k)) {
          ++rank_bad;
        }
      }
    }
    detail = "mismatches over 1000 instances: eer " + std::to_string(eer_bad) + ", tar " + std::to_string(tar_bad) +
             ", rank-k " + std::to_string(rank_bad);
    return eer_bad == 0 && tar_bad == 0 && rank_bad == 0;
  });
}

/// Criteria run by `selftest`: everything that does not need the benchmark sweep.
inline std::vector<SuiteResult> run_property_suites() {
  return {lie_algebra_suite(),  algebra_properties_suite(),  derivative_suite(),          bch_suite(),
          wahba_suite(),        se3_suite(),                 gating_suite(),              frontalize_identity_suite(),
          realizable_training_suite(), metric_oracle_suite()};
}

// ---- benchmark orderings --------------------------------------------------------

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Per-seed EERs for each arm of a default-config sweep.
struct SweepTable {
  std::vector<bench::Arm> arms;
  std::vector<std::vector<double>> eer;  // [arm][seed]
  double seconds = 0.0;

  const std::vector<double>& of(const bench::Arm& a) const {
    for (std::size_t i = 0; i < arms.size(); ++i) {
      if (arms[i] == a) return eer[i];
    }
    throw Error(ErrorCode::InvalidArgument, "arm not in sweep: " + a.name());
  }
};

inline SweepTable run_default_sweep(int n_seeds, const bench::ExperimentConfig& cfg = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepTable t;
  t.arms = cfg.arms;
  t.eer.assign(cfg.arms.size(), {});
  for (const bench::ArmResult& r : bench::run_sweep(cfg, n_seeds)) {
    for (std::size_t i = 0; i < t.arms.size(); ++i) {
      if (t.arms[i] == r.arm) t.eer[i].push_back(r.report.eer);
    }
  }
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

inline SuiteResult gate_ordering_suite(const SweepTable& t) {
  SuiteResult r{10, "gate ablation ordering (abs_sin vs identity / linear)", false, {}, t.seconds};
  using bench::Arm;
  using bench::ArmKind;
  const auto& abs = t.of(Arm{ArmKind::Larnet, GateKind::AbsSin});
  const auto& idn = t.of(Arm{ArmKind::Larnet, GateKind::Identity});
  const auto& lin = t.of(Arm{ArmKind::Larnet, GateKind::Linear});
  int wins = 0;
  for (std::size_t s = 0; s < abs.size(); ++s) wins += abs[s] <= idn[s] ? 1 : 0;
  const double ma = mean_of(abs), mi = mean_of(idn), ml = mean_of(lin);
  r.detail = "abs_sin <= identity in " + std::to_string(wins) + "/" + std::to_string(abs.size()) +
             " seeds; mean EER abs_sin " + sci(ma) + ", linear " + sci(ml) + ", identity " + sci(mi) + "; sweep " +
             sci(t.seconds) + " s";
  r.passed = abs.size() == 10 && wins >= 8 && ma <= ml && t.seconds <= 300.0;
  return r;
}

inline SuiteResult architecture_ordering_suite(const SweepTable& t) {
  SuiteResult r{11, "architecture ablation ordering (backbone / larnet / larnet+)", false, {}, t.seconds};
  using bench::Arm;
  using bench::ArmKind;
  const auto& bb = t.of(Arm{ArmKind::Backbone, GateKind::AbsSin});
  const auto& ln = t.of(Arm{ArmKind::Larnet, GateKind::AbsSin});
  const auto& lp = t.of(Arm{ArmKind::LarnetPlus, GateKind::AbsSin});
  int wins = 0;
  for (std::size_t s = 0; s < bb.size(); ++s) wins += (1.0 - ln[s]) > (1.0 - bb[s]) ? 1 : 0;
  const double ab = 1.0 - mean_of(bb), al = 1.0 - mean_of(ln), ap = 1.0 - mean_of(lp);
  r.detail = "mean verification accuracy backbone " + sci(ab) + ", larnet " + sci(al) + ", larnet+ " + sci(ap) +
             "; larnet > backbone in " + std::to_string(wins) + "/" + std::to_string(bb.size()) + " seeds";
  r.passed = bb.size() == 10 && ab <= al && al <= ap && wins >= 8;
  return r;
}

inline void print_result(const SuiteResult& r, std::FILE* out = stdout) {
  std::fprintf(out, "[%s] criterion %2d: %s -- %s (%.2f s)\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
               r.detail.c_str(), r.seconds);
}

}  // namespace larnet::check
