// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// SGD (momentum) and Adam plus the supervised training loop: seeded
// shuffling, per-image augmentation streams, cross-entropy, time-based
// learning-rate decay and best-validation-epoch checkpointing.

#ifndef LEAFNET_OPTIM_HPP_
#define LEAFNET_OPTIM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "leafnet/augment.hpp"
#include "leafnet/dataset.hpp"
#include "leafnet/metrics.hpp"
#include "leafnet/nn.hpp"

namespace leafnet {

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
  int batch_size = 4;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double lr0 = 1e-3;
  double lr_decay = 1e-3;  // time-based: lr0 / (1 + lr_decay * epoch)
  int epochs = 30;
  double momentum = 0.9;  // sgd
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;   // adam
  double eps = 1e-8;      // adam
  std::uint64_t seed = 0;

  void validate() const;
};

/// lr0 / (1 + lr_decay * epoch); the decay constant pairs with per-epoch
/// measurement, so it is applied per epoch, not per step.
double lr_at(int epoch, const TrainConfig& cfg);

/// Per-parameter velocity buffers, lazily sized on the first step.
struct SgdState {
  std::vector<std::vector<double>> velocity;
  std::int64_t step_count = 0;
};

/// v <- momentum * v + g;  theta <- theta - lr * v.
void sgd_step(std::vector<Tensor>& params, SgdState& state, double lr, double momentum);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step_count = 0;
};

/// Standard bias-corrected Adam update.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps);

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_auc = 0.0;
  double final_train_loss = 0.0;
  MetricsReport val_report;  // metrics of the restored best weights
};

/// Converts images to a [N,3,R,R] batch tensor (channel-last to CHW).
Tensor images_to_batch(const std::vector<const Image*>& images);

/// Eval-pipeline predictions (softmax probabilities) for a whole set.
PredictionMatrix predict_probabilities(const Model& model, const std::vector<Image>& images,
                                       AugmentConfig aug);

/// Trains on `train` and evaluates mean column-wise ROC AUC on `val` after
/// each epoch; the weights of the best-validation epoch are restored into
/// the model on return.  The augment target size always follows the model's
/// input resolution.  Per-image augmentation streams are derived from
/// (seed, epoch, example index), so in-epoch order never affects results.
/// Throws EmptyDataset and NonFinite (with epoch/step diagnostics).
TrainResult train_supervised(Model& model, const LabeledSet& train, const LabeledSet& val,
                             const TrainConfig& cfg, AugmentConfig aug, Rng& rng);

/// Spec-level convenience: stratified 80/20 split of `labeled`, then the
/// explicit-validation overload above.
TrainResult train_supervised(Model& model, const LabeledSet& labeled, const TrainConfig& cfg,
                             const AugmentConfig& aug, Rng& rng);

}  // namespace leafnet

#endif  // LEAFNET_OPTIM_HPP_
