// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFNET_ENSEMBLE_HPP_
#define LEAFNET_ENSEMBLE_HPP_

#include <vector>

#include "leafnet/augment.hpp"
#include "leafnet/nn.hpp"
#include "leafnet/optim.hpp"

namespace leafnet {

/// Probability-averaging ensemble.  Members may have different specs (each
/// gets its own eval preprocessing at its own resolution); weights default
/// to uniform and must otherwise be nonnegative and sum to 1.
struct Ensemble {
  std::vector<const Model*> members;
  std::vector<double> weights;  // empty -> uniform

  void validate() const;  // EmptyEnsemble / ClassCountMismatch / weight checks
};

/// Weighted arithmetic mean of member softmax outputs; member contributions
/// are combined with pairwise summation so member order is irrelevant to
/// within 1e-12.  Rows stay normalized (convex combination).
PredictionMatrix ensemble_predict(const Ensemble& ensemble, const std::vector<Image>& batch,
                                  const AugmentConfig& aug);

}  // namespace leafnet

#endif  // LEAFNET_ENSEMBLE_HPP_
