// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// leaftrain: config-driven training, self-training, evaluation, prediction,
// ensembling and dataset tooling.  Every command is reproducible from
// (config file, seed) alone; reports embed both.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "leafnet/checkpoint.hpp"
#include "leafnet/config.hpp"
#include "leafnet/ensemble.hpp"
#include "leafnet/imageio.hpp"
#include "leafnet/report.hpp"
#include "leafnet/selftrain.hpp"

namespace fs = std::filesystem;
using namespace leafnet;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::int64_t seed_override = -1;
};

RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw UsageError("--config is required");
  RunConfig cfg = parse_run_config(args.config_path);
  if (args.seed_override >= 0) {
    cfg.seed = static_cast<std::uint64_t>(args.seed_override);
    cfg.train.seed = cfg.seed;
    cfg.selftrain.train_cfg.seed = cfg.seed;
    cfg.synthetic.seed = cfg.seed;
  }
  return cfg;
}

void ensure_out_dir(const std::string& out) { fs::create_directories(out); }

ModelSpec resolve_model_spec(const RunConfig& cfg) {
  ModelSpec spec = cfg.model;
  if (cfg.scaling_apply) {
    spec = scale_model_spec(spec, apply_scaling(cfg.scaling));
  }
  spec.validate();
  return spec;
}

LabeledSet load_dataset_or_die(const RunConfig& cfg) {
  if (cfg.labels_csv.empty() || cfg.images_dir.empty()) {
    throw UsageError("config must set data.labels_csv and data.images_dir");
  }
  return load_labeled({cfg.labels_csv, cfg.images_dir, cfg.train_fraction, cfg.seed});
}

std::vector<std::pair<std::string, std::string>> base_report(const RunConfig& cfg,
                                                             const std::string& command) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("command", command);
  for (auto& entry : run_config_echo(cfg)) kv.push_back(std::move(entry));
  return kv;
}

int cmd_make_synthetic(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(args.out_dir);
  write_synthetic_dataset(cfg.synthetic, args.out_dir);
  auto kv = base_report(cfg, "make-synthetic");
  kv.emplace_back("written.labels_csv", (fs::path(args.out_dir) / "labels.csv").string());
  kv.emplace_back("written.images", std::to_string(cfg.synthetic.count));
  kv.emplace_back("written.unlabeled", std::to_string(cfg.synthetic.unlabeled_count));
  write_report_kv((fs::path(args.out_dir) / "report.kv").string(), kv);
  std::printf("wrote %d labeled and %d unlabeled images under %s\n", cfg.synthetic.count,
              cfg.synthetic.unlabeled_count, args.out_dir.c_str());
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(args.out_dir);
  const ModelSpec spec = resolve_model_spec(cfg);
  const LabeledSet data = load_dataset_or_die(cfg);
  auto [train_set, val_set] = split_stratified(data, cfg.train_fraction, cfg.seed);
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw EmptyDataset("train/validation split produced an empty side");
  }

  Rng init_rng = Rng(cfg.seed).split(0x1717);
  Model model = build_model(spec, init_rng);
  std::printf("training %lld-parameter model on %zu examples (%zu held out)\n",
              static_cast<long long>(parameter_count(spec)), train_set.size(), val_set.size());

  Rng train_rng(cfg.seed);
  const TrainResult result =
      train_supervised(model, train_set, val_set, cfg.train, cfg.augment, train_rng);

  save_checkpoint((fs::path(args.out_dir) / "checkpoint.ckpt").string(),
                  make_checkpoint(model, cfg.train, train_rng));

  auto kv = base_report(cfg, "train");
  kv.emplace_back("best_epoch", std::to_string(result.best_epoch));
  for (auto& entry : metrics_to_kv(result.val_report, "val.")) kv.push_back(std::move(entry));
  write_report_kv((fs::path(args.out_dir) / "report.kv").string(), kv);
  write_report_text((fs::path(args.out_dir) / "report.txt").string(), "supervised training run",
                    result.val_report, {{"best_epoch", std::to_string(result.best_epoch)}});
  std::printf("best validation mean AUC %.6f at epoch %d\n", result.best_val_auc,
              result.best_epoch);
  return 0;
}

int cmd_selftrain(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(args.out_dir);
  const ModelSpec spec = resolve_model_spec(cfg);
  const LabeledSet labeled = load_dataset_or_die(cfg);
  if (cfg.unlabeled_dir.empty()) {
    throw UsageError("config must set data.unlabeled_dir for selftrain");
  }
  const UnlabeledSet unlabeled = load_unlabeled_dir(cfg.unlabeled_dir);

  Rng rng(cfg.seed);
  const SelfTrainResult result =
      noisy_student_loop(labeled, unlabeled, spec, cfg.selftrain, cfg.augment, rng);

  auto kv = base_report(cfg, "selftrain");
  for (const IterationReport& it : result.reports) {
    const std::string p = "iteration." + std::to_string(it.iteration) + ".";
    kv.emplace_back(p + "params", std::to_string(it.params));
    kv.emplace_back(p + "val_mean_auc", std::to_string(it.val_mean_auc));
    kv.emplace_back(p + "pseudo_total", std::to_string(it.pseudo_total));
    kv.emplace_back(p + "pseudo_kept", std::to_string(it.pseudo_kept));
    kv.emplace_back(p + "pseudo_empty_warning", it.pseudo_empty_warning ? "true" : "false");
    kv.emplace_back(p + "noise_draws", std::to_string(it.noise_draws));
    for (auto& entry : metrics_to_kv(it.train.val_report, p)) kv.push_back(std::move(entry));
    if (it.pseudo_empty_warning) {
      std::fprintf(stderr,
                   "warning: iteration %d kept no pseudo-labels; trained on labeled data only\n",
                   it.iteration);
    }
    std::printf("iteration %d: params %lld, val mean AUC %.6f\n", it.iteration,
                static_cast<long long>(it.params), it.val_mean_auc);
  }
  write_report_kv((fs::path(args.out_dir) / "report.kv").string(), kv);

  Rng save_rng(cfg.seed);
  save_checkpoint((fs::path(args.out_dir) / "student.ckpt").string(),
                  make_checkpoint(result.final_model, cfg.selftrain.train_cfg, save_rng));
  write_report_text((fs::path(args.out_dir) / "report.txt").string(), "noisy student run",
                    result.reports.back().train.val_report, {});
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& checkpoint_path) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(args.out_dir);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Model model = model_from_checkpoint(ckpt);
  const LabeledSet data = load_dataset_or_die(cfg);
  auto [train_set, val_set] = split_stratified(data, cfg.train_fraction, cfg.seed);
  const LabeledSet& eval_set = val_set.size() > 0 ? val_set : data;

  const PredictionMatrix preds = predict_probabilities(model, eval_set.images, cfg.augment);
  const MetricsReport report = evaluate_predictions(preds, eval_set.labels);

  auto kv = base_report(cfg, "evaluate");
  kv.emplace_back("checkpoint", checkpoint_path);
  kv.emplace_back("examples", std::to_string(eval_set.size()));
  for (auto& entry : metrics_to_kv(report, "eval.")) kv.push_back(std::move(entry));
  write_report_kv((fs::path(args.out_dir) / "report.kv").string(), kv);
  write_report_text((fs::path(args.out_dir) / "report.txt").string(), "evaluation", report,
                    {{"checkpoint", checkpoint_path}});
  std::printf("mean column-wise ROC AUC over %zu examples: %.6f\n", eval_set.size(),
              report.mean_auc);
  return 0;
}

int cmd_predict(const CommonArgs& args, const std::string& checkpoint_path) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(args.out_dir);
  if (cfg.unlabeled_dir.empty()) {
    throw UsageError("config must set data.unlabeled_dir for predict");
  }
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Model model = model_from_checkpoint(ckpt);
  const UnlabeledSet pool = load_unlabeled_dir(cfg.unlabeled_dir);
  if (pool.size() == 0) throw EmptyUnlabeledSet("no images under " + cfg.unlabeled_dir);

  const PredictionMatrix preds = predict_probabilities(model, pool.images, cfg.augment);
  const std::string csv_path = (fs::path(args.out_dir) / "predictions.csv").string();
  write_predictions_csv(csv_path, pool.ids, preds);
  std::printf("wrote %d prediction rows to %s\n", preds.rows, csv_path.c_str());
  return 0;
}

int cmd_ensemble(const CommonArgs& args, const std::vector<std::string>& checkpoint_paths) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(args.out_dir);
  if (checkpoint_paths.empty()) throw UsageError("ensemble needs at least one --checkpoints path");

  std::vector<Model> models;
  models.reserve(checkpoint_paths.size());
  for (const std::string& path : checkpoint_paths) {
    models.push_back(model_from_checkpoint(load_checkpoint(path)));
  }
  Ensemble ensemble;
  for (const Model& m : models) ensemble.members.push_back(&m);
  ensemble.weights = cfg.ensemble_weights;
  ensemble.validate();

  const LabeledSet data = load_dataset_or_die(cfg);
  auto [train_set, val_set] = split_stratified(data, cfg.train_fraction, cfg.seed);
  const LabeledSet& eval_set = val_set.size() > 0 ? val_set : data;

  const PredictionMatrix preds = ensemble_predict(ensemble, eval_set.images, cfg.augment);
  const MetricsReport report = evaluate_predictions(preds, eval_set.labels);

  auto kv = base_report(cfg, "ensemble");
  kv.emplace_back("members", std::to_string(models.size()));
  for (std::size_t i = 0; i < checkpoint_paths.size(); ++i) {
    kv.emplace_back("member." + std::to_string(i), checkpoint_paths[i]);
    const PredictionMatrix solo = predict_probabilities(models[i], eval_set.images, cfg.augment);
    kv.emplace_back("member." + std::to_string(i) + ".mean_auc",
                    std::to_string(mean_columnwise_auc(solo, eval_set.labels).mean));
  }
  for (auto& entry : metrics_to_kv(report, "ensemble.")) kv.push_back(std::move(entry));
  write_report_kv((fs::path(args.out_dir) / "report.kv").string(), kv);
  write_report_text((fs::path(args.out_dir) / "report.txt").string(), "ensemble evaluation",
                    report, {});
  std::printf("ensemble of %zu models: mean AUC %.6f\n", models.size(), report.mean_auc);
  return 0;
}

int cmd_augment_preview(const CommonArgs& args, int count) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(args.out_dir);
  const LabeledSet data = load_dataset_or_die(cfg);
  // Identity normalization: previews should stay displayable images.
  AugmentConfig preview_cfg = cfg.augment;
  preview_cfg.channel_mean = {0, 0, 0};
  preview_cfg.channel_std = {1, 1, 1};

  const int n = std::min<int>(count, static_cast<int>(data.size()));
  Rng root(cfg.seed);
  for (int i = 0; i < n; ++i) {
    const Image before = resize(data.images[i], preview_cfg.target_size);
    Rng stream = root.split(i);
    const Image after = apply_train_pipeline(data.images[i], preview_cfg, stream);
    Image clamped = after;
    for (double& v : clamped.pixels) v = std::clamp(v, 0.0, 1.0);
    write_ppm((fs::path(args.out_dir) / ("before_" + std::to_string(i) + ".ppm")).string(),
              before);
    write_ppm((fs::path(args.out_dir) / ("after_" + std::to_string(i) + ".ppm")).string(),
              clamped);
  }
  std::printf("wrote %d before/after pairs under %s\n", n, args.out_dir.c_str());
  return 0;
}

int cmd_scale_search(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(args.out_dir);

  ScaleObjective objective;  // default: rank by |constraint - 2|
  if (cfg.search.objective == "val_auc") {
    // deliberately small: per-candidate training at the configured budget
    const LabeledSet data = load_dataset_or_die(cfg);
    auto split = split_stratified(data, cfg.train_fraction, cfg.seed);
    auto train_set = std::make_shared<LabeledSet>(std::move(split.first));
    auto val_set = std::make_shared<LabeledSet>(std::move(split.second));
    const RunConfig cfg_copy = cfg;
    objective = [train_set, val_set, cfg_copy](const ScalingCoefficients& c) {
      ModelSpec spec = scale_model_spec(cfg_copy.model, apply_scaling(c));
      Rng init(cfg_copy.seed);
      Model model = build_model(spec, init);
      TrainConfig tc = cfg_copy.train;
      tc.epochs = cfg_copy.search.epochs;
      Rng rng(cfg_copy.seed);
      return train_supervised(model, *train_set, *val_set, tc, cfg_copy.augment, rng).best_val_auc;
    };
  }

  std::vector<ScalingCoefficients> found =
      grid_search_coefficients(cfg.search.grid_step, cfg.search.tolerance, nullptr);
  if (objective) {
    // score only the closest-to-constraint candidates, then re-rank
    if (static_cast<int>(found.size()) > cfg.search.max_candidates) {
      found.resize(cfg.search.max_candidates);
    }
    std::vector<std::pair<double, ScalingCoefficients>> scored;
    for (const ScalingCoefficients& c : found) scored.emplace_back(objective(c), c);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    auto kv = base_report(cfg, "scale-search");
    for (std::size_t i = 0; i < scored.size(); ++i) {
      char line[160];
      std::snprintf(line, sizeof(line), "alpha=%.4f beta=%.4f gamma=%.4f constraint=%.6f score=%.6f",
                    scored[i].second.alpha, scored[i].second.beta, scored[i].second.gamma,
                    constraint_value(scored[i].second), scored[i].first);
      kv.emplace_back("candidate." + std::to_string(i), line);
      std::printf("%s\n", line);
    }
    write_report_kv((fs::path(args.out_dir) / "report.kv").string(), kv);
    return 0;
  }

  auto kv = base_report(cfg, "scale-search");
  const std::size_t shown = std::min<std::size_t>(found.size(), 32);
  for (std::size_t i = 0; i < shown; ++i) {
    char line[160];
    std::snprintf(line, sizeof(line), "alpha=%.4f beta=%.4f gamma=%.4f constraint=%.6f",
                  found[i].alpha, found[i].beta, found[i].gamma, constraint_value(found[i]));
    kv.emplace_back("candidate." + std::to_string(i), line);
    std::printf("%s\n", line);
  }
  kv.emplace_back("candidates_total", std::to_string(found.size()));
  write_report_kv((fs::path(args.out_dir) / "report.kv").string(), kv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leaftrain: desk-scale plant-pathology training pipeline"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string checkpoint_path;
  std::vector<std::string> checkpoint_paths;
  int preview_count = 4;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "run configuration file");
    cmd->add_option("--out", common.out_dir, "output directory (default: out)");
    cmd->add_option("--seed", common.seed_override, "override the config seed");
  };

  CLI::App* c_synth = app.add_subcommand("make-synthetic", "generate the synthetic leaf dataset");
  add_common(c_synth);
  CLI::App* c_train = app.add_subcommand("train", "supervised training");
  add_common(c_train);
  CLI::App* c_self = app.add_subcommand("selftrain", "noisy student self-training");
  add_common(c_self);
  CLI::App* c_eval = app.add_subcommand("evaluate", "evaluate a checkpoint");
  add_common(c_eval);
  c_eval->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
  CLI::App* c_pred = app.add_subcommand("predict", "write a predictions csv");
  add_common(c_pred);
  c_pred->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
  CLI::App* c_ens = app.add_subcommand("ensemble", "evaluate a probability-averaging ensemble");
  add_common(c_ens);
  c_ens->add_option("--checkpoints", checkpoint_paths, "checkpoint paths")->required();
  CLI::App* c_prev = app.add_subcommand("augment-preview", "write before/after augmentations");
  add_common(c_prev);
  c_prev->add_option("--count", preview_count, "number of images to preview");
  CLI::App* c_search = app.add_subcommand("scale-search", "constrained coefficient grid search");
  add_common(c_search);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(c_synth)) return cmd_make_synthetic(common);
    if (app.got_subcommand(c_train)) return cmd_train(common);
    if (app.got_subcommand(c_self)) return cmd_selftrain(common);
    if (app.got_subcommand(c_eval)) return cmd_evaluate(common, checkpoint_path);
    if (app.got_subcommand(c_pred)) return cmd_predict(common, checkpoint_path);
    if (app.got_subcommand(c_ens)) return cmd_ensemble(common, checkpoint_paths);
    if (app.got_subcommand(c_prev)) return cmd_augment_preview(common, preview_count);
    if (app.got_subcommand(c_search)) return cmd_scale_search(common);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
