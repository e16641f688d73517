// larnet: dataset generation, training, evaluation, ablation sweeps and
// self-checks for the gated residual frontalization benchmark.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"

#include "larnet/bench/serialize.hpp"
#include "larnet/check/suites.hpp"
#include "larnet/manifold_opt.hpp"

namespace fs = std::filesystem;
using namespace larnet;
using namespace larnet::bench;

namespace {

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_experiment_config(path);
  apply_seed_override(cfg, std::getenv("LARNET_SEED"));
  cfg.validate();
  return cfg;
}

std::uint64_t cli_seed(std::uint64_t fallback) {
  ExperimentConfig c;
  c.seed = fallback;
  apply_seed_override(c, std::getenv("LARNET_SEED"));
  return c.seed;
}

Dataset load_split(const std::string& dir, const char* name) {
  return dataset_from_jsonl(read_file((fs::path(dir) / name).string()));
}

int cmd_gen(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = load_config(config_path);
  const ResolvedSeeds seeds = resolve_seeds(cfg, Arm{});
  DataConfig dc = cfg.data;
  dc.seed = seeds.data;
  const Dataset ds = generate_dataset(dc);
  const Split split = split_by_identity(ds, dc.train_fraction, seeds.split);
  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / "train.jsonl").string(), to_jsonl(split.train.observations));
  write_file((fs::path(out_dir) / "test.jsonl").string(), to_jsonl(split.test.observations));
  json meta = {{"config", to_json(cfg)},
               {"data_seed", seeds.data},
               {"split_seed", seeds.split},
               {"n_train_observations", split.train.observations.size()},
               {"n_test_observations", split.test.observations.size()},
               {"n_train_identities", split.train.identities.size()},
               {"n_test_identities", split.test.identities.size()}};
  write_file((fs::path(out_dir) / "meta.json").string(), meta.dump(2) + "\n");
  std::printf("wrote %zu train / %zu test observations to %s\n", split.train.observations.size(),
              split.test.observations.size(), out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir, const std::string& out, bool end_to_end) {
  const ExperimentConfig cfg = load_config(config_path);
  const Dataset train = load_split(data_dir, "train.jsonl");
  const Arm arm{end_to_end ? ArmKind::LarnetPlus : ArmKind::Larnet, cfg.gate};
  const ResolvedSeeds seeds = resolve_seeds(cfg, arm);
  BackboneConfig bc = cfg.backbone;
  bc.seed = seeds.backbone;
  const ToyBackbone backbone(bc, static_cast<int>(train.observations.front().points.size()));
  TrainConfig tc = cfg.train;
  tc.seed = seeds.train;

  ModelBundle bundle;
  bundle.experiment = to_json(cfg);
  bundle.end_to_end = end_to_end;
  if (end_to_end) {
    EndToEndResult r = train_end_to_end(train, backbone, tc, cfg.end_to_end, cfg.gate);
    std::printf("joint phase: pair loss %.6g -> %.6g\n", r.loss_before_joint, r.loss_after_joint);
    bundle.model = std::move(r.model);
    bundle.backbone = std::move(r.backbone);
  } else {
    bundle.model = train_subnet(make_training_pairs(backbone, train), tc, cfg.gate);
    bundle.backbone = backbone;
  }
  write_file(out, to_json(bundle).dump() + "\n");
  std::printf("trained %s (%s gate), final epoch loss %.6g, wrote %s\n", std::string(to_string(arm.kind)).c_str(),
              std::string(to_string(cfg.gate)).c_str(), bundle.model.loss_history.back(), out.c_str());
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir, const std::string& out,
             const std::string& csv, bool backbone_only) {
  const ModelBundle bundle = model_bundle_from_json(parse_json_text(read_file(model_path), model_path));
  const Dataset test = load_split(data_dir, "test.jsonl");
  std::vector<double> targets{1e-2, 1e-3};
  if (bundle.experiment.contains("experiment")) {
    targets = bundle.experiment.at("experiment").value("far_targets", targets);
  }
  const Evaluation ev = evaluate(bundle.backbone, backbone_only ? nullptr : &bundle.model, test, targets);
  json doc = to_json(ev.report);
  doc["model"] = backbone_only ? "backbone" : (bundle.end_to_end ? "larnet+" : "larnet");
  doc["gate_kind"] = std::string(to_string(bundle.model.gate_kind));
  doc["config"] = bundle.experiment;
  if (!out.empty()) write_file(out, doc.dump(2) + "\n");
  if (!csv.empty()) write_file(csv, curve_csv(score_curve(ev.scores.genuine, ev.scores.impostor)));
  std::printf("eer %.6f  tar@1e-2 %.6f  rank1 %.6f  rank5 %.6f  (%zu genuine, %zu impostor)\n", ev.report.eer,
              ev.report.tar_at_far.empty() ? 0.0 : ev.report.tar_at_far.front().tar, ev.report.rank1,
              ev.report.rank5, ev.report.n_genuine, ev.report.n_impostor);
  for (const TarAtFar& t : ev.report.tar_at_far) {
    if (t.insufficient_impostors) {
      std::fprintf(stderr, "warning: only %zu impostor pairs for FAR target %g\n", ev.report.n_impostor, t.target);
    }
  }
  return 0;
}

int cmd_ablate(const std::string& config_path, int seeds, const std::string& out) {
  const ExperimentConfig cfg = load_config(config_path);
  const std::vector<ArmResult> results = run_sweep(cfg, seeds);
  if (!out.empty()) write_file(out, sweep_csv(results));
  std::printf("%-22s %5s %12s %12s %12s\n", "arm", "n", "mean_eer", "mean_acc", "mean_rank1");
  for (const ArmSummary& s : summarize(results)) {
    std::printf("%-22s %5d %12.6f %12.6f %12.6f\n", s.arm.name().c_str(), s.n, s.mean_eer, s.mean_accuracy,
                s.mean_rank1);
  }
  return 0;
}

int cmd_opt_demo(int trials, double noise, const std::string& out, std::uint64_t seed, int points) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "--trials must be >= 1");
  if (!(noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "--noise must be >= 0");
  std::mt19937_64 rng(cli_seed(seed));
  std::uniform_real_distribution<double> init_angle(0.0, kPi / 3);
  std::string csv = "trial,iter,u,grad_norm,geodesic_error\n";
  OptimizerConfig oc;
  oc.max_iters = 200;
  for (int t = 0; t < trials; ++t) {
    const WahbaProblem prob = random_wahba_problem(rng(), points, noise, init_angle(rng));
    const OptimizerTrace tr = minimize(wahba_objective(prob.src, prob.dst), prob.init, oc);
    for (std::size_t i = 0; i < tr.iterates.size(); ++i) {
      const Iterate& it = tr.iterates[i];
      csv += std::to_string(t) + "," + std::to_string(i) + "," + fmt17(it.value) + "," + fmt17(it.grad_norm) + "," +
             fmt17(geodesic_distance(it.rotation, prob.truth)) + "\n";
    }
    std::printf("trial %d: %zu iterations, %s, geodesic error %.3g\n", t, tr.iterates.size() - 1,
                std::string(to_string(tr.reason)).c_str(), geodesic_distance(tr.last().rotation, prob.truth));
  }
  if (!out.empty()) write_file(out, csv);
  return 0;
}

int cmd_selftest() {
  bool ok = true;
  for (const check::SuiteResult& r : check::run_property_suites()) {
    check::print_result(r);
    ok = ok && r.passed;
  }
  std::printf("selftest %s\n", ok ? "passed" : "FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"larnet: gated residual frontalization on a synthetic benchmark"};
  app.require_subcommand(0, 1);
  bool print_config = false;
  std::string print_config_path;
  app.add_flag("--print-config", print_config, "Print the full configuration (defaults merged with --config) and exit");
  app.add_option("--config", print_config_path, "Config used with --print-config");

  std::string config, out, data, model, csv;
  int seeds = 10, trials = 10, points = 20;
  double noise = 0.0;
  std::uint64_t seed = 1;
  bool end_to_end = false, backbone_only = false;

  auto* gen = app.add_subcommand("gen", "Generate a dataset split as JSON lines");
  gen->add_option("--config", config, "Config JSON");
  gen->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train the residual subnet (or the end-to-end variant)");
  train->add_option("--config", config, "Config JSON");
  train->add_option("--data", data, "Dataset directory from `gen`")->required();
  train->add_option("--out", out, "Model JSON to write")->required();
  train->add_flag("--end-to-end", end_to_end, "Train backbone and subnet jointly, then fine-tune the subnet");

  auto* eval = app.add_subcommand("eval", "Evaluate a model on the held-out split");
  eval->add_option("--model", model, "Model JSON")->required();
  eval->add_option("--data", data, "Dataset directory from `gen`")->required();
  eval->add_option("--out", out, "Report JSON to write");
  eval->add_option("--csv", csv, "Score curve CSV to write");
  eval->add_flag("--backbone-only", backbone_only, "Score the model's backbone features without correction");

  auto* ablate = app.add_subcommand("ablate", "Seed sweep over all configured arms");
  ablate->add_option("--config", config, "Config JSON");
  ablate->add_option("--seeds", seeds, "Number of seed replicas")->check(CLI::PositiveNumber);
  ablate->add_option("--out", out, "Per-arm, per-seed CSV");

  auto* opt = app.add_subcommand("opt-demo", "Wahba rotation fitting by gradient descent on SO(3)");
  opt->add_option("--trials", trials, "Number of random problems")->check(CLI::PositiveNumber);
  opt->add_option("--noise", noise, "Gaussian noise sigma on the targets");
  opt->add_option("--points", points, "Point pairs per problem")->check(CLI::PositiveNumber);
  opt->add_option("--seed", seed, "RNG seed (LARNET_SEED overrides)");
  opt->add_option("--out", out, "Trace CSV");

  auto* selftest = app.add_subcommand("selftest", "Run the property suites; nonzero exit on any violation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_config) {
      std::cout << to_json(load_config(print_config_path)).dump(2) << "\n";
      return 0;
    }
    if (*gen) return cmd_gen(config, out);
    if (*train) return cmd_train(config, data, out, end_to_end);
    if (*eval) return cmd_eval(model, data, out, csv, backbone_only);
    if (*ablate) return cmd_ablate(config, seeds, out);
    if (*opt) return cmd_opt_demo(trials, noise, out, seed, points);
    if (*selftest) return cmd_selftest();
    std::cout << app.help();
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
