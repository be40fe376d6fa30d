// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace leafnet {

ScaledDims apply_scaling(const ScalingCoefficients& c) {
  if (c.alpha < 1.0 || c.beta < 1.0 || c.gamma < 1.0) {
    throw InvalidCoefficient("apply_scaling: alpha, beta, gamma must all be >= 1");
  }
  if (c.phi < 0.0) throw InvalidCoefficient("apply_scaling: phi must be >= 0");
  return ScaledDims{std::pow(c.alpha, c.phi), std::pow(c.beta, c.phi), std::pow(c.gamma, c.phi)};
}

double constraint_value(const ScalingCoefficients& c) {
  return c.alpha * c.beta * c.beta * c.gamma * c.gamma;
}

double flops_estimate(const ScaledDims& dims, double base_flops) {
  if (!(base_flops > 0.0)) {
    throw InvalidBase("flops_estimate: base_flops must be > 0, got " + std::to_string(base_flops));
  }
  return base_flops * dims.d * dims.w * dims.w * dims.r * dims.r;
}

std::vector<ScalingCoefficients> grid_search_coefficients(double grid_step, double tolerance,
                                                          const ScaleObjective& objective) {
  if (!(grid_step > 0.0)) throw Error("grid_search_coefficients: grid_step must be > 0");
  if (!(tolerance > 0.0)) throw Error("grid_search_coefficients: tolerance must be > 0");

  // Grid points 1 + i*grid_step over [1, 2]; index arithmetic avoids
  // accumulated floating drift.
  std::vector<double> points;
  for (int i = 0;; ++i) {
    const double v = 1.0 + i * grid_step;
    if (v > 2.0 + 1e-12) break;
    points.push_back(std::min(v, 2.0));
  }

  std::vector<ScalingCoefficients> keep;
  for (double a : points) {
    for (double b : points) {
      for (double g : points) {
        const ScalingCoefficients c{a, b, g, 1.0};
        if (std::abs(constraint_value(c) - 2.0) <= tolerance) keep.push_back(c);
      }
    }
  }
  if (keep.empty()) {
    throw EmptyResult("grid_search_coefficients: no grid point satisfies the tolerance");
  }

  if (objective) {
    std::vector<std::pair<double, ScalingCoefficients>> scored;
    scored.reserve(keep.size());
    for (const ScalingCoefficients& c : keep) scored.emplace_back(objective(c), c);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first > y.first;  // higher score first
      return std::tie(x.second.alpha, x.second.beta, x.second.gamma) <
             std::tie(y.second.alpha, y.second.beta, y.second.gamma);
    });
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = scored[i].second;
  } else {
    std::stable_sort(keep.begin(), keep.end(),
                     [](const ScalingCoefficients& x, const ScalingCoefficients& y) {
                       const double dx = std::abs(constraint_value(x) - 2.0);
                       const double dy = std::abs(constraint_value(y) - 2.0);
                       if (dx != dy) return dx < dy;
                       return std::tie(x.alpha, x.beta, x.gamma) <
                              std::tie(y.alpha, y.beta, y.gamma);
                     });
  }
  return keep;
}

namespace {

/// Channels scale to the nearest multiple of 4, never below 4.
int scale_channels_to_multiple(int channels, double w) {
  const long rounded = std::lround(channels * w / 4.0) * 4;
  return static_cast<int>(std::max(4L, rounded));
}

struct Stage {
  BlockConfig first;
  int count = 1;
};

bool repeat_compatible(const BlockConfig& b, const BlockConfig& prev) {
  return b.stride == 1 && b.in_channels == b.out_channels && b.in_channels == prev.out_channels &&
         b.expansion_ratio == prev.expansion_ratio && b.se_ratio == prev.se_ratio &&
         b.survival_prob == prev.survival_prob;
}

}  // namespace

ModelSpec scale_model_spec(const ModelSpec& base, const ScaledDims& dims) {
  base.validate();

  std::vector<Stage> stages;
  for (const BlockConfig& b : base.blocks) {
    if (!stages.empty() && repeat_compatible(b, stages.back().first)) {
      ++stages.back().count;
    } else {
      stages.push_back(Stage{b, 1});
    }
  }

  ModelSpec scaled;
  scaled.stem_channels = scale_channels_to_multiple(base.stem_channels, dims.w);
  scaled.dropout_prob = base.dropout_prob;
  scaled.num_classes = base.num_classes;
  scaled.input_resolution =
      std::max(1, static_cast<int>(std::lround(base.input_resolution * dims.r)));

  int prev_out = scaled.stem_channels;
  for (const Stage& stage : stages) {
    const int count = static_cast<int>(std::ceil(stage.count * dims.d));
    const int out_ch = scale_channels_to_multiple(stage.first.out_channels, dims.w);
    BlockConfig lead = stage.first;
    lead.in_channels = prev_out;
    lead.out_channels = out_ch;
    scaled.blocks.push_back(lead);
    BlockConfig repeat = lead;
    repeat.stride = 1;
    repeat.in_channels = out_ch;
    repeat.out_channels = out_ch;
    for (int i = 1; i < count; ++i) scaled.blocks.push_back(repeat);
    prev_out = out_ch;
  }

  scaled.validate();
  return scaled;
}

}  // namespace leafnet
