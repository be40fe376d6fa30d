// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/report.hpp"

#include <cstdio>
#include <fstream>

namespace leafnet {

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_predictions_csv(const std::string& path, const std::vector<std::string>& ids,
                           const PredictionMatrix& preds) {
  if (static_cast<int>(ids.size()) != preds.rows) {
    throw ShapeMismatch("write_predictions_csv: ids do not align with prediction rows");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "image_id,healthy,multiple_diseases,rust,scab\n";
  for (int i = 0; i < preds.rows; ++i) {
    out << ids[i];
    for (int j = 0; j < kNumClasses; ++j) {
      out << ',' << fmt6(preds.values[static_cast<std::size_t>(i) * kNumClasses + j]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_report_kv(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::pair<std::string, std::string>> metrics_to_kv(const MetricsReport& report,
                                                               const std::string& prefix) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back(prefix + "mean_auc", fmt_full(report.mean_auc));
  for (int j = 0; j < kNumClasses; ++j) {
    const std::string name = prefix + "auc." + kClassNames[j];
    kv.emplace_back(name, report.column_degenerate[j] ? "degenerate"
                                                      : fmt_full(report.per_column_auc[j]));
  }
  for (int i = 0; i < kNumClasses; ++i) {
    std::string row;
    for (int j = 0; j < kNumClasses; ++j) {
      if (j) row += ' ';
      row += std::to_string(report.confusion[i][j]);
    }
    kv.emplace_back(prefix + "confusion." + kClassNames[i], row);
  }
  for (const EpochRecord& rec : report.loss_history) {
    const std::string base = prefix + "history." + std::to_string(rec.epoch) + ".";
    kv.emplace_back(base + "train_loss", fmt_full(rec.train_loss));
    kv.emplace_back(base + "val_mean_auc", fmt_full(rec.val_mean_auc));
  }
  for (int j = 0; j < kNumClasses; ++j) {
    const std::vector<RocPoint>& curve = report.tpr_fpr_curves[j];
    for (std::size_t k = 0; k < curve.size(); ++k) {
      kv.emplace_back(prefix + "roc." + kClassNames[j] + "." + std::to_string(k),
                      fmt_full(curve[k].threshold) + "," + fmt_full(curve[k].tpr) + "," +
                          fmt_full(curve[k].fpr));
    }
  }
  return kv;
}

void write_report_text(const std::string& path, const std::string& title,
                       const MetricsReport& report,
                       const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << title << '\n' << std::string(title.size(), '=') << "\n\n";
  out << "mean column-wise ROC AUC: " << fmt6(report.mean_auc) << '\n';
  for (int j = 0; j < kNumClasses; ++j) {
    out << "  " << kClassNames[j] << ": ";
    if (report.column_degenerate[j]) {
      out << "degenerate (excluded from mean)\n";
    } else {
      out << fmt6(report.per_column_auc[j]) << '\n';
    }
  }
  out << "\nconfusion matrix (rows true, cols predicted):\n";
  for (int i = 0; i < kNumClasses; ++i) {
    out << "  ";
    for (int j = 0; j < kNumClasses; ++j) out << report.confusion[i][j] << '\t';
    out << "<- " << kClassNames[i] << '\n';
  }
  if (!report.loss_history.empty()) {
    out << "\nepoch\ttrain_loss\tval_mean_auc\n";
    for (const EpochRecord& rec : report.loss_history) {
      out << rec.epoch << '\t' << fmt6(rec.train_loss) << '\t' << fmt6(rec.val_mean_auc) << '\n';
    }
  }
  if (!extra.empty()) {
    out << '\n';
    for (const auto& [k, v] : extra) out << k << " = " << v << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace leafnet
