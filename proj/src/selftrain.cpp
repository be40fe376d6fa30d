// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/selftrain.hpp"

#include <algorithm>
#include <tuple>

namespace leafnet {

void SelfTrainConfig::validate() const {
  if (iterations < 0) throw InvalidSpec("SelfTrainConfig: iterations must be >= 0");
  if (!(confidence_threshold >= 0.0 && confidence_threshold < 1.0)) {
    throw InvalidSpec("SelfTrainConfig: confidence_threshold must be in [0,1)");
  }
  if (iterations > 0 && student_growth.size() != 1 &&
      static_cast<int>(student_growth.size()) < iterations) {
    throw InvalidSpec(
        "SelfTrainConfig: student_growth needs one rule per iteration or a single rule");
  }
  if (!(noise.dropout_prob >= 0.0 && noise.dropout_prob < 1.0)) {
    throw InvalidSpec("SelfTrainConfig: noise.dropout_prob must be in [0,1)");
  }
  if (!(noise.survival_prob >= 0.0 && noise.survival_prob <= 1.0)) {
    throw InvalidSpec("SelfTrainConfig: noise.survival_prob must be in [0,1]");
  }
  train_cfg.validate();
}

ScaledDims SelfTrainConfig::growth_for(int iteration) const {
  if (student_growth.empty()) return ScaledDims{1.0, 1.0, 1.0};
  if (student_growth.size() == 1) return student_growth[0];
  return student_growth[static_cast<std::size_t>(iteration - 1)];
}

PseudoLabeledSet pseudo_label(const Model& teacher, const UnlabeledSet& unlabeled, LabelMode mode,
                              const AugmentConfig& aug) {
  if (unlabeled.size() == 0) throw EmptyUnlabeledSet("pseudo_label: empty unlabeled set");
  const PredictionMatrix probs = predict_probabilities(teacher, unlabeled.images, aug);

  PseudoLabeledSet out;
  out.images = unlabeled.images;
  out.ids = unlabeled.ids;
  out.soft_labels.rows = probs.rows;
  out.soft_labels.values.reserve(probs.values.size());
  out.confidences.reserve(unlabeled.size());
  for (int i = 0; i < probs.rows; ++i) {
    const std::span<const double> row = probs.row(i);
    int best = 0;
    for (int j = 1; j < kNumClasses; ++j) {
      if (row[j] > row[best]) best = j;  // ties keep the lowest index
    }
    if (mode == LabelMode::Soft) {
      for (int j = 0; j < kNumClasses; ++j) out.soft_labels.values.push_back(row[j]);
      out.confidences.push_back(row[best]);
    } else {
      for (int j = 0; j < kNumClasses; ++j) out.soft_labels.values.push_back(j == best ? 1.0 : 0.0);
      out.confidences.push_back(row[best]);
    }
  }
  return out;
}

PseudoLabeledSet filter_pseudo(const PseudoLabeledSet& ps, double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw InvalidProbability("filter_pseudo: threshold must be in [0,1)");
  }
  PseudoLabeledSet out;
  out.soft_labels.rows = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps.confidences[i] < threshold) continue;
    out.images.push_back(ps.images[i]);
    out.ids.push_back(ps.ids[i]);
    out.confidences.push_back(ps.confidences[i]);
    for (int j = 0; j < kNumClasses; ++j) {
      out.soft_labels.values.push_back(ps.soft_labels.values[i * kNumClasses + j]);
    }
    ++out.soft_labels.rows;
  }
  return out;
}

LabeledSet combine(const LabeledSet& labeled, const PseudoLabeledSet& pseudo) {
  if (pseudo.size() > 0 &&
      pseudo.soft_labels.values.size() != pseudo.size() * static_cast<std::size_t>(kNumClasses)) {
    throw ColumnOrderMismatch("combine: pseudo label columns do not match the fixed 4-class order");
  }
  LabeledSet out = labeled;
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    out.images.push_back(pseudo.images[i]);
    out.ids.push_back(pseudo.ids[i]);
    out.origin.push_back(Origin::Pseudo);
    for (int j = 0; j < kNumClasses; ++j) {
      out.labels.values.push_back(pseudo.soft_labels.values[i * kNumClasses + j]);
    }
    ++out.labels.rows;
  }
  return out;
}

ModelSpec grow_student(const ModelSpec& teacher_spec, const ScaledDims& growth) {
  if (growth.d < 1.0 || growth.w < 1.0 || growth.r < 1.0) {
    throw InvalidSpec("grow_student: growth dims must all be >= 1");
  }
  const ModelSpec student = scale_model_spec(teacher_spec, growth);
  if (parameter_count(student) < parameter_count(teacher_spec)) {
    throw InvalidSpec("grow_student: scaled student has fewer parameters than the teacher");
  }
  return student;
}

namespace {

ModelSpec with_noise(ModelSpec spec, double dropout_prob, double survival_prob) {
  spec.dropout_prob = dropout_prob;
  for (BlockConfig& b : spec.blocks) b.survival_prob = survival_prob;
  return spec;
}

AugmentConfig without_stochastic_stages(AugmentConfig aug) {
  aug.p_hflip = 0.0;
  aug.p_vflip = 0.0;
  aug.p_ssr = 0.0;
  aug.p_oneof_filter = 0.0;
  aug.p_piecewise = 0.0;
  return aug;
}

}  // namespace

SelfTrainResult noisy_student_loop(const LabeledSet& labeled, const UnlabeledSet& unlabeled,
                                   const ModelSpec& base_spec, const SelfTrainConfig& cfg,
                                   const AugmentConfig& aug, Rng& rng,
                                   const LabeledSet* external_val) {
  cfg.validate();
  base_spec.validate();
  if (labeled.size() == 0) throw EmptyDataset("noisy_student_loop: empty labeled set");
  if (cfg.iterations > 0 && unlabeled.size() == 0) {
    throw EmptyUnlabeledSet("noisy_student_loop: iterations requested without unlabeled data");
  }

  // One shared validation hold-out keeps per-iteration AUCs comparable.
  LabeledSet train_part, val_part;
  if (external_val != nullptr) {
    train_part = labeled;
    val_part = *external_val;
  } else {
    std::tie(train_part, val_part) = split_stratified(labeled, 0.8, rng.split(0xDA7A).seed());
  }

  SelfTrainResult result;

  // Iteration 0: teacher, no student noise beyond baseline augmentation.
  ModelSpec core = base_spec;
  ModelSpec teacher_spec = with_noise(core, 0.0, 1.0);
  Rng init_rng = rng.split(0x100);
  Model current = build_model(teacher_spec, init_rng);
  {
    Rng train_rng = rng.split(0x200);
    current.noise_draws = 0;
    IterationReport report;
    report.iteration = 0;
    report.spec = teacher_spec;
    report.params = parameter_count(teacher_spec);
    report.train = train_supervised(current, train_part, val_part, cfg.train_cfg, aug, train_rng);
    report.val_mean_auc = report.train.best_val_auc;
    report.noise_draws = current.noise_draws;
    result.reports.push_back(std::move(report));
  }

  for (int it = 1; it <= cfg.iterations; ++it) {
    PseudoLabeledSet pseudo = pseudo_label(current, unlabeled, cfg.label_mode, aug);
    const int total = static_cast<int>(pseudo.size());
    pseudo = filter_pseudo(pseudo, cfg.confidence_threshold);
    const int kept = static_cast<int>(pseudo.size());

    LabeledSet combined = kept > 0 ? combine(train_part, pseudo) : train_part;

    core = grow_student(core, cfg.growth_for(it));
    const ModelSpec student_spec = with_noise(core, cfg.noise.dropout_prob, cfg.noise.survival_prob);
    Rng student_init = rng.split(0x100 + static_cast<std::uint64_t>(it));
    Model student = build_model(student_spec, student_init);
    student.noise_draws = 0;

    const AugmentConfig student_aug = cfg.noise.augment ? aug : without_stochastic_stages(aug);
    Rng train_rng = rng.split(0x200 + static_cast<std::uint64_t>(it));

    IterationReport report;
    report.iteration = it;
    report.spec = student_spec;
    report.params = parameter_count(student_spec);
    report.pseudo_total = total;
    report.pseudo_kept = kept;
    report.pseudo_empty_warning = kept == 0;
    report.train =
        train_supervised(student, combined, val_part, cfg.train_cfg, student_aug, train_rng);
    report.val_mean_auc = report.train.best_val_auc;
    report.noise_draws = student.noise_draws;
    result.reports.push_back(std::move(report));

    current = std::move(student);
  }

  result.final_model = std::move(current);
  return result;
}

}  // namespace leafnet
