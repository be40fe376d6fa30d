// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace leafnet {

namespace {

void validate_prob_rows(int rows, const std::vector<double>& values, const char* what) {
  if (rows < 0 || values.size() != static_cast<std::size_t>(rows) * kNumClasses) {
    throw ShapeMismatch(std::string(what) + ": values length does not match rows x 4");
  }
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < kNumClasses; ++j) {
      const double v = values[static_cast<std::size_t>(i) * kNumClasses + j];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ShapeMismatch(std::string(what) + ": row " + std::to_string(i) +
                            " has a value outside [0,1]");
      }
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw ShapeMismatch(std::string(what) + ": row " + std::to_string(i) +
                          " sums to " + std::to_string(s) + ", expected 1");
    }
  }
}

int argmax_row(std::span<const double> row) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(row.size()); ++j) {
    if (row[j] > row[best]) best = j;  // ties keep the lowest index
  }
  return best;
}

}  // namespace

void LabelMatrix::validate() const { validate_prob_rows(rows, values, "LabelMatrix"); }
void PredictionMatrix::validate() const { validate_prob_rows(rows, values, "PredictionMatrix"); }

double cross_entropy_row(std::span<const double> p, std::span<const double> y) {
  if (p.size() != y.size()) throw ShapeMismatch("cross_entropy_row: row lengths differ");
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double yc = std::min(std::max(y[i], 1e-12), 1.0);
    loss -= p[i] * std::log(yc);
  }
  return loss;
}

double cross_entropy(const LabelMatrix& p, const PredictionMatrix& y) {
  if (p.rows != y.rows) throw ShapeMismatch("cross_entropy: row counts differ");
  if (p.rows == 0) throw ShapeMismatch("cross_entropy: empty batch");
  double total = 0.0;
  for (int i = 0; i < p.rows; ++i) total += cross_entropy_row(p.row(i), y.row(i));
  return total / p.rows;
}

Tensor cross_entropy_loss(Tape& tape, const Tensor& logits, const Tensor& targets) {
  if (logits.shape() != targets.shape()) {
    throw ShapeMismatch("cross_entropy_loss: logits " + shape_str(logits.shape()) +
                        " vs targets " + shape_str(targets.shape()));
  }
  const int n = logits.shape()[0];
  Tensor lsm = log_softmax(tape, logits);
  Tensor weighted = mul(tape, lsm, targets);
  Tensor total = sum(tape, weighted);
  return scale(tape, total, -1.0 / static_cast<double>(n));
}

double roc_auc_column(const std::vector<double>& scores, const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) {
    throw ShapeMismatch("roc_auc_column: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (bool b : positives) n_pos += b ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DegenerateColumn("roc_auc_column: column has no " +
                           std::string(n_pos == 0 ? "positives" : "negatives"));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tied runs, 1-based.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) {
      if (positives[order[k]]) pos_rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) {
    throw ShapeMismatch("roc_curve: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (bool b : positives) n_pos += b ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DegenerateColumn("roc_curve: column has no " +
                           std::string(n_pos == 0 ? "positives" : "negatives"));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> curve;
  curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    const double t = scores[order[i]];
    while (i < n && scores[order[i]] == t) {
      if (positives[order[i]]) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    curve.push_back({t, static_cast<double>(tp) / static_cast<double>(n_pos),
                     static_cast<double>(fp) / static_cast<double>(n_neg)});
  }
  return curve;
}

AucSummary mean_columnwise_auc(const PredictionMatrix& preds, const LabelMatrix& labels) {
  if (preds.rows != labels.rows) throw ShapeMismatch("mean_columnwise_auc: row counts differ");
  AucSummary out;
  double total = 0.0;
  for (int col = 0; col < kNumClasses; ++col) {
    std::vector<double> scores(preds.rows);
    std::vector<bool> pos(labels.rows);
    for (int i = 0; i < preds.rows; ++i) {
      scores[i] = preds.values[static_cast<std::size_t>(i) * kNumClasses + col];
      pos[i] = labels.values[static_cast<std::size_t>(i) * kNumClasses + col] >= 0.5;
    }
    try {
      out.per_column[col] = roc_auc_column(scores, pos);
      total += out.per_column[col];
      ++out.valid_columns;
    } catch (const DegenerateColumn&) {
      out.per_column[col] = std::numeric_limits<double>::quiet_NaN();
      out.degenerate[col] = true;
    }
  }
  if (out.valid_columns == 0) {
    throw AllColumnsDegenerate("mean_columnwise_auc: every column lacks positives or negatives");
  }
  out.mean = total / out.valid_columns;
  return out;
}

ConfusionMatrix confusion_matrix(const PredictionMatrix& preds, const LabelMatrix& labels) {
  if (preds.rows != labels.rows) throw ShapeMismatch("confusion_matrix: row counts differ");
  ConfusionMatrix cm{};
  for (int i = 0; i < preds.rows; ++i) {
    cm[argmax_row(labels.row(i))][argmax_row(preds.row(i))] += 1;
  }
  return cm;
}

MetricsReport evaluate_predictions(const PredictionMatrix& preds, const LabelMatrix& labels) {
  MetricsReport report;
  const AucSummary auc = mean_columnwise_auc(preds, labels);
  report.per_column_auc = auc.per_column;
  report.column_degenerate = auc.degenerate;
  report.mean_auc = auc.mean;
  report.confusion = confusion_matrix(preds, labels);
  for (int col = 0; col < kNumClasses; ++col) {
    if (auc.degenerate[col]) continue;
    std::vector<double> scores(preds.rows);
    std::vector<bool> pos(labels.rows);
    for (int i = 0; i < preds.rows; ++i) {
      scores[i] = preds.values[static_cast<std::size_t>(i) * kNumClasses + col];
      pos[i] = labels.values[static_cast<std::size_t>(i) * kNumClasses + col] >= 0.5;
    }
    report.tpr_fpr_curves[col] = roc_curve(scores, pos);
  }
  return report;
}

}  // namespace leafnet
