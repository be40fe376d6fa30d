// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cross-entropy loss, mean column-wise ROC AUC and confusion matrices over
// the fixed 4-class column order (healthy, multiple_diseases, rust, scab).

#ifndef LEAFNET_METRICS_HPP_
#define LEAFNET_METRICS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leafnet/errors.hpp"
#include "leafnet/tensor.hpp"

namespace leafnet {

inline constexpr int kNumClasses = 4;
inline constexpr std::array<const char*, kNumClasses> kClassNames = {
    "healthy", "multiple_diseases", "rust", "scab"};

/// Probability targets, one row per example over the 4 class columns.
/// Each row sums to 1 within 1e-9.
struct LabelMatrix {
  int rows = 0;
  std::vector<double> values;  // rows x 4, row-major

  std::span<const double> row(int i) const { return {values.data() + i * kNumClasses, kNumClasses}; }
  std::span<double> row(int i) { return {values.data() + i * kNumClasses, kNumClasses}; }
  void validate() const;  // throws ShapeMismatch on violated invariants
};

/// Predicted probabilities, same layout and invariants as LabelMatrix.
struct PredictionMatrix {
  int rows = 0;
  std::vector<double> values;

  std::span<const double> row(int i) const { return {values.data() + i * kNumClasses, kNumClasses}; }
  std::span<double> row(int i) { return {values.data() + i * kNumClasses, kNumClasses}; }
  void validate() const;
};

using ConfusionMatrix = std::array<std::array<std::int64_t, kNumClasses>, kNumClasses>;

struct RocPoint {
  double threshold;
  double tpr;
  double fpr;
};

struct EpochRecord {
  int epoch;
  double train_loss;
  double val_mean_auc;
};

struct MetricsReport {
  std::array<double, kNumClasses> per_column_auc{};
  std::array<bool, kNumClasses> column_degenerate{};
  double mean_auc = 0.0;
  ConfusionMatrix confusion{};
  std::vector<EpochRecord> loss_history;
  std::array<std::vector<RocPoint>, kNumClasses> tpr_fpr_curves;
};

/// -sum_i p_i ln(y_i) for one row pair; y is clamped to [1e-12, 1] before the
/// log so confident wrong predictions stay finite.
double cross_entropy_row(std::span<const double> p, std::span<const double> y);

/// Mean row cross-entropy over a batch.
double cross_entropy(const LabelMatrix& p, const PredictionMatrix& y);

/// Differentiable mean cross-entropy of softmax(logits) against constant
/// targets [N,C]; gradient wrt logits is (softmax(logits) - targets)/N.
Tensor cross_entropy_loss(Tape& tape, const Tensor& logits, const Tensor& targets);

/// ROC AUC of one score column against binary ground truth, computed with
/// average ranks so tied scores earn 0.5 per tied pair (the Mann-Whitney
/// statistic).  Throws DegenerateColumn when positives or negatives are
/// missing.
double roc_auc_column(const std::vector<double>& scores, const std::vector<bool>& positives);

/// ROC curve points ordered by descending threshold (ascending FPR), with a
/// leading (+inf, 0, 0) anchor.  Trapezoidal area under the returned curve
/// equals roc_auc_column within 1e-12.
std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                const std::vector<bool>& positives);

struct AucSummary {
  std::array<double, kNumClasses> per_column{};
  std::array<bool, kNumClasses> degenerate{};
  double mean = 0.0;
  int valid_columns = 0;
};

/// Per-column AUC with labels binarized at 0.5 (>= 0.5 counts positive);
/// degenerate columns are excluded from the mean and flagged.  Throws
/// AllColumnsDegenerate when nothing remains.
AucSummary mean_columnwise_auc(const PredictionMatrix& preds, const LabelMatrix& labels);

/// Entry (i,j) counts examples with argmax(label)==i and argmax(pred)==j;
/// argmax ties break toward the lowest column index.
ConfusionMatrix confusion_matrix(const PredictionMatrix& preds, const LabelMatrix& labels);

/// Full evaluation bundle: AUC summary, curves and confusion matrix.
MetricsReport evaluate_predictions(const PredictionMatrix& preds, const LabelMatrix& labels);

}  // namespace leafnet

#endif  // LEAFNET_METRICS_HPP_
