// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Compound-scaling algebra: coefficients (alpha, beta, gamma, phi) map to
// depth/width/resolution multipliers d = alpha^phi, w = beta^phi,
// r = gamma^phi under the constraint alpha * beta^2 * gamma^2 ~= 2, so that
// raising phi by one approximately doubles estimated FLOPS
// (proportional to d * w^2 * r^2).

#ifndef LEAFNET_SCALING_HPP_
#define LEAFNET_SCALING_HPP_

#include <functional>
#include <vector>

#include "leafnet/errors.hpp"
#include "leafnet/nn.hpp"

namespace leafnet {

struct ScalingCoefficients {
  double alpha = 1.0;  // >= 1
  double beta = 1.0;   // >= 1
  double gamma = 1.0;  // >= 1
  double phi = 0.0;    // >= 0

  friend bool operator==(const ScalingCoefficients&, const ScalingCoefficients&) = default;
};

struct ScaledDims {
  double d = 1.0;  // depth multiplier
  double w = 1.0;  // width multiplier
  double r = 1.0;  // resolution multiplier

  friend bool operator==(const ScaledDims&, const ScaledDims&) = default;
};

/// d = alpha^phi, w = beta^phi, r = gamma^phi.
/// Throws InvalidCoefficient when any base < 1 or phi < 0.
ScaledDims apply_scaling(const ScalingCoefficients& c);

/// alpha * beta^2 * gamma^2.
double constraint_value(const ScalingCoefficients& c);

/// base_flops * d * w^2 * r^2.  Throws InvalidBase for base_flops <= 0.
double flops_estimate(const ScaledDims& dims, double base_flops);

/// Optional scoring function for ranking candidates (higher is better).
using ScaleObjective = std::function<double(const ScalingCoefficients&)>;

/// Enumerates (alpha, beta, gamma) on the regular grid over [1,2]^3 at
/// phi = 1 and keeps candidates with |constraint_value - 2| <= tolerance.
/// With an objective, results sort by descending score; otherwise by
/// ascending |constraint_value - 2|.  Ties break lexicographically on
/// (alpha, beta, gamma).  Throws EmptyResult when nothing qualifies.
std::vector<ScalingCoefficients> grid_search_coefficients(double grid_step, double tolerance,
                                                          const ScaleObjective& objective = nullptr);

/// Applies scaled dims to a base spec:
///   - per-stage block count -> ceil(count * d), where a stage is a maximal
///     run of repeat-compatible blocks (stride 1, in == out, same ratios);
///   - channels -> nearest multiple of 4 of (channels * w), floor 4;
///   - input resolution -> round(resolution * r).
ModelSpec scale_model_spec(const ModelSpec& base, const ScaledDims& dims);

}  // namespace leafnet

#endif  // LEAFNET_SCALING_HPP_
