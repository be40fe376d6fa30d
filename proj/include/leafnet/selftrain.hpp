// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Noisy Student self-training: a teacher trained on labeled data
// pseudo-labels the unlabeled pool, then a (usually grown) student is
// trained on the union with noise enabled -- dropout, stochastic depth and
// train-pipeline augmentation -- and becomes the next teacher.
// Pseudo-labeling always runs the teacher in Eval mode with eval
// preprocessing: label generation is deterministic, only student training
// is noised.

#ifndef LEAFNET_SELFTRAIN_HPP_
#define LEAFNET_SELFTRAIN_HPP_

#include <cstdint>
#include <vector>

#include "leafnet/optim.hpp"
#include "leafnet/scaling.hpp"

namespace leafnet {

enum class LabelMode { Soft, Hard };

struct NoiseConfig {
  double dropout_prob = 0.15;
  double survival_prob = 0.8;
  bool augment = true;  // train-pipeline augmentation for the student
};

struct SelfTrainConfig {
  int iterations = 2;
  LabelMode label_mode = LabelMode::Soft;
  double confidence_threshold = 0.0;  // in [0,1); 0 keeps everything
  std::vector<ScaledDims> student_growth;  // one per iteration, or a single
                                           // rule applied repeatedly
  NoiseConfig noise;
  TrainConfig train_cfg;

  void validate() const;
  ScaledDims growth_for(int iteration) const;  // 1-based student iteration
};

/// Teacher Eval-mode predictions over the unlabeled pool.  Soft rows are the
/// softmax outputs; Hard rows one-hot the argmax (ties to the lowest index).
/// Confidences record the per-row max probability.  The teacher is never
/// mutated.  Throws EmptyUnlabeledSet.
PseudoLabeledSet pseudo_label(const Model& teacher, const UnlabeledSet& unlabeled, LabelMode mode,
                              const AugmentConfig& aug);

/// Keeps rows with confidence >= threshold, preserving order.
PseudoLabeledSet filter_pseudo(const PseudoLabeledSet& ps, double threshold);

/// Concatenation; pseudo rows are tagged Origin::Pseudo.
LabeledSet combine(const LabeledSet& labeled, const PseudoLabeledSet& pseudo);

/// scale_model_spec applied to the teacher's architecture; the student is
/// freshly initialized later (no weight copying).  Guarantees the parameter
/// count does not shrink.
ModelSpec grow_student(const ModelSpec& teacher_spec, const ScaledDims& growth);

struct IterationReport {
  int iteration = 0;  // 0 = teacher
  ModelSpec spec;
  std::int64_t params = 0;
  double val_mean_auc = 0.0;
  TrainResult train;
  int pseudo_total = 0;  // rows labeled this iteration (students only)
  int pseudo_kept = 0;   // rows surviving the confidence filter
  bool pseudo_empty_warning = false;
  std::uint64_t noise_draws = 0;  // stochastic draws during this training
};

struct SelfTrainResult {
  Model final_model;
  std::vector<IterationReport> reports;  // iterations + 1 entries
};

/// Iteration 0 trains the teacher (noise off: dropout 0, survival 1) on the
/// labeled data with baseline augmentation; each following iteration
/// pseudo-labels with the current model, filters, combines, grows the spec
/// and trains a noised student.  Validation is a stratified 20% hold-out of
/// the labeled set -- or `external_val` when given -- shared by every
/// iteration so AUCs are comparable.  If a filter empties the pseudo set
/// the iteration trains on labeled data only and flags a warning.
SelfTrainResult noisy_student_loop(const LabeledSet& labeled, const UnlabeledSet& unlabeled,
                                   const ModelSpec& base_spec, const SelfTrainConfig& cfg,
                                   const AugmentConfig& aug, Rng& rng,
                                   const LabeledSet* external_val = nullptr);

}  // namespace leafnet

#endif  // LEAFNET_SELFTRAIN_HPP_
