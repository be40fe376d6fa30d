// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Plain `key = value` run configuration ('#' comments, blank lines ok).
// Unknown keys are rejected so typos fail loudly.  Every key has a
// documented default; `leaftrain print-config` emits the resolved set.

#ifndef LEAFNET_CONFIG_HPP_
#define LEAFNET_CONFIG_HPP_

#include <string>
#include <utility>
#include <vector>

#include "leafnet/augment.hpp"
#include "leafnet/dataset.hpp"
#include "leafnet/scaling.hpp"
#include "leafnet/selftrain.hpp"

namespace leafnet {

struct SearchConfig {
  double grid_step = 0.25;
  double tolerance = 0.1;
  std::string objective = "none";  // none | val_auc
  int epochs = 3;                  // per-candidate budget for val_auc
  int max_candidates = 5;          // candidates scored under val_auc
};

struct RunConfig {
  std::uint64_t seed = 0;

  std::string labels_csv;
  std::string images_dir;
  std::string unlabeled_dir;
  double train_fraction = 0.8;

  ModelSpec model;  // built from model.* keys

  TrainConfig train;
  AugmentConfig augment;
  SelfTrainConfig selftrain;  // selftrain.train_cfg mirrors `train`
  ScalingCoefficients scaling;
  bool scaling_apply = false;
  SearchConfig search;
  SyntheticConfig synthetic;
  std::vector<double> ensemble_weights;
};

/// Parses a config file.  Throws ConfigError naming the offending key/line.
RunConfig parse_run_config(const std::string& path);

/// Same, from text (origin only names the source in error messages).
RunConfig parse_run_config_text(const std::string& text, const std::string& origin);

/// The fully resolved key set (defaults included), for embedding in reports.
std::vector<std::pair<std::string, std::string>> run_config_echo(const RunConfig& cfg);

}  // namespace leafnet

#endif  // LEAFNET_CONFIG_HPP_
