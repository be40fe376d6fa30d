// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFNET_REPORT_HPP_
#define LEAFNET_REPORT_HPP_

#include <string>
#include <utility>
#include <vector>

#include "leafnet/metrics.hpp"

namespace leafnet {

/// Kaggle-style submission CSV:
/// `image_id,healthy,multiple_diseases,rust,scab`, 6 decimal places.
void write_predictions_csv(const std::string& path, const std::vector<std::string>& ids,
                           const PredictionMatrix& preds);

/// One `key = value` per line; machine-readable run record.
void write_report_kv(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& entries);

/// Flattens a metrics report (per-column AUC, mean, confusion, history).
std::vector<std::pair<std::string, std::string>> metrics_to_kv(const MetricsReport& report,
                                                               const std::string& prefix);

/// Human-readable summary of the same content.
void write_report_text(const std::string& path, const std::string& title,
                       const MetricsReport& report,
                       const std::vector<std::pair<std::string, std::string>>& extra);

}  // namespace leafnet

#endif  // LEAFNET_REPORT_HPP_
