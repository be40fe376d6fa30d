// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/ensemble.hpp"

#include <cmath>

namespace leafnet {

void Ensemble::validate() const {
  if (members.empty()) throw EmptyEnsemble("ensemble has no members");
  for (const Model* m : members) {
    if (m == nullptr) throw EmptyEnsemble("ensemble member is null");
    if (m->spec.num_classes != members[0]->spec.num_classes) {
      throw ClassCountMismatch("ensemble members disagree on num_classes");
    }
  }
  if (!weights.empty()) {
    if (weights.size() != members.size()) {
      throw ShapeMismatch("ensemble weights count does not match member count");
    }
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw Error("ensemble weights must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error("ensemble weights must sum to 1");
  }
}

namespace {

/// Pairwise sum of weighted member prediction matrices over [lo, hi).
std::vector<double> pairwise_accumulate(const std::vector<std::vector<double>>& weighted,
                                        std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return weighted[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> left = pairwise_accumulate(weighted, lo, mid);
  const std::vector<double> right = pairwise_accumulate(weighted, mid, hi);
  for (std::size_t i = 0; i < left.size(); ++i) left[i] += right[i];
  return left;
}

}  // namespace

PredictionMatrix ensemble_predict(const Ensemble& ensemble, const std::vector<Image>& batch,
                                  const AugmentConfig& aug) {
  ensemble.validate();
  if (batch.empty()) throw EmptyDataset("ensemble_predict: empty batch");

  const std::size_t k = ensemble.members.size();
  const double uniform = 1.0 / static_cast<double>(k);
  std::vector<std::vector<double>> weighted(k);
  for (std::size_t m = 0; m < k; ++m) {
    const double w = ensemble.weights.empty() ? uniform : ensemble.weights[m];
    PredictionMatrix p = predict_probabilities(*ensemble.members[m], batch, aug);
    for (double& v : p.values) v *= w;
    weighted[m] = std::move(p.values);
  }

  PredictionMatrix out;
  out.rows = static_cast<int>(batch.size());
  out.values = pairwise_accumulate(weighted, 0, k);
  return out;
}

}  // namespace leafnet
