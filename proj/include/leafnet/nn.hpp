// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Composable layers and the scaled-CNN building blocks: inverted residual
// (MBConv) blocks with squeeze-and-excitation gating, stochastic depth and
// dropout, plus the model builder that turns a ModelSpec into initialized
// weights.
//
// Architectural notes, fixed for the whole project:
//   - stem is a 3x3 stride-2 convolution on 3-channel input, swish activated;
//   - depthwise kernels are 3x3, padding 1;
//   - no batch normalization (batch size 4 makes batch statistics unstable);
//     blocks rely on He initialization plus SE gating at desk scale;
//   - He-normal weights, zero biases.

#ifndef LEAFNET_NN_HPP_
#define LEAFNET_NN_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leafnet/rng.hpp"
#include "leafnet/tensor.hpp"

namespace leafnet {

/// Stochastic elements (dropout, stochastic depth, train augmentation) fire
/// only in Train; Eval is deterministic.
enum class Mode { Train, Eval };

struct BlockConfig {
  int in_channels = 0;
  int out_channels = 0;
  double expansion_ratio = 1.0;  // >= 1
  double se_ratio = 0.25;        // in (0, 1]
  double survival_prob = 0.8;    // in [0, 1]
  int stride = 1;                // 1 or 2

  int expansion_channels() const;  // round(in * expansion_ratio), >= 1
  int se_hidden() const;           // max(1, round(in * se_ratio))
  bool has_skip() const { return stride == 1 && in_channels == out_channels; }

  friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

struct ModelSpec {
  int stem_channels = 8;
  std::vector<BlockConfig> blocks;
  double dropout_prob = 0.0;  // in [0, 1)
  int num_classes = 4;
  int input_resolution = 32;

  /// Throws InvalidSpec naming the violated invariant.
  void validate() const;

  /// Channel count entering the classifier head.
  int feature_channels() const {
    return blocks.empty() ? stem_channels : blocks.back().out_channels;
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct DenseParams {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

struct ConvParams {
  Tensor kernel;
  Tensor bias;
};

struct SeParams {
  DenseParams reduce;
  DenseParams expand;
};

struct BlockParams {
  std::optional<ConvParams> expand;  // absent when expansion == in_channels
  ConvParams depthwise;
  SeParams se;
  ConvParams project;
};

class Model {
 public:
  ModelSpec spec;
  ConvParams stem;
  std::vector<BlockParams> blocks;
  DenseParams head;

  /// Count of stochastic decisions (dropout masks, stochastic-depth coins)
  /// taken in Train-mode forwards since last reset.  Eval never bumps it.
  mutable std::uint64_t noise_draws = 0;

  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::int64_t parameter_count() const;
};

/// Parameter names and shapes implied by a spec, in allocation order.
std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelSpec& spec);

/// Total trainable parameter count implied by a spec (no allocation).
std::int64_t parameter_count(const ModelSpec& spec);

/// Allocates and He-initializes all weights.  Same seed, same weights.
Model build_model(const ModelSpec& spec, Rng& rng);

/// Detached deep copy (fresh weight storage, same values).
Model deep_copy(const Model& model);

std::vector<std::vector<double>> snapshot_weights(const Model& model);
void restore_weights(Model& model, const std::vector<std::vector<double>>& snapshot);

/// Squeeze-and-excitation: global average pool -> dense -> swish -> dense ->
/// sigmoid, then per-channel rescale of x by the resulting gates in (0,1).
Tensor se_block(Tape& tape, const Tensor& x, const SeParams& se);

/// Keeps the residual with probability survival_prob in Train (no scaling),
/// else replaces it with zeros; in Eval deterministically scales the
/// residual by survival_prob.  One coin per call; survival 0 and 1 take no
/// draw.
Tensor stochastic_depth(Tape& tape, const Tensor& residual, double survival_prob, Mode mode,
                        Rng* rng, std::uint64_t* noise_draws = nullptr);

/// Inverted dropout: zeroes each element with probability p and scales
/// survivors by 1/(1-p) in Train; identity in Eval or at p == 0.
Tensor dropout(Tape& tape, const Tensor& x, double p, Mode mode, Rng* rng,
               std::uint64_t* noise_draws = nullptr);

/// Expand (1x1) -> depthwise 3x3 -> SE -> project (1x1); skip connection
/// with stochastic depth when stride == 1 and in == out channels.
Tensor inverted_residual(Tape& tape, const Tensor& x, const BlockConfig& cfg,
                         const BlockParams& params, Mode mode, Rng* rng,
                         std::uint64_t* noise_draws = nullptr);

/// Full model forward; returns logits [N, num_classes].  Eval mode is a pure
/// function of (weights, input).  Throws NonFinite if logits overflow and
/// ShapeMismatch when the batch resolution differs from the spec.
Tensor forward(Tape& tape, const Model& model, const Tensor& batch, Mode mode,
               Rng* rng = nullptr);

}  // namespace leafnet

#endif  // LEAFNET_NN_HPP_
