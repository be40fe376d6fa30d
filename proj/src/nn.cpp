// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/nn.hpp"

#include <cmath>

namespace leafnet {

namespace {

int round_positive(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

int BlockConfig::expansion_channels() const {
  return std::max(1, round_positive(in_channels * expansion_ratio));
}

int BlockConfig::se_hidden() const {
  return std::max(1, round_positive(in_channels * se_ratio));
}

void ModelSpec::validate() const {
  if (stem_channels < 1) throw InvalidSpec("stem_channels must be >= 1");
  if (num_classes < 2) throw InvalidSpec("num_classes must be >= 2");
  if (input_resolution < 1) throw InvalidSpec("input_resolution must be >= 1");
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
    throw InvalidSpec("dropout_prob must be in [0,1)");
  }
  int prev_out = stem_channels;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const BlockConfig& b = blocks[i];
    const std::string at = "block " + std::to_string(i) + ": ";
    if (b.in_channels < 1 || b.out_channels < 1) throw InvalidSpec(at + "channels must be >= 1");
    if (b.in_channels != prev_out) {
      throw InvalidSpec(at + "in_channels " + std::to_string(b.in_channels) +
                        " does not match preceding channel count " + std::to_string(prev_out));
    }
    if (b.stride != 1 && b.stride != 2) throw InvalidSpec(at + "stride must be 1 or 2");
    if (b.expansion_ratio < 1.0) throw InvalidSpec(at + "expansion_ratio must be >= 1");
    if (!(b.se_ratio > 0.0 && b.se_ratio <= 1.0)) throw InvalidSpec(at + "se_ratio must be in (0,1]");
    if (!(b.survival_prob >= 0.0 && b.survival_prob <= 1.0)) {
      throw InvalidSpec(at + "survival_prob must be in [0,1]");
    }
    prev_out = b.out_channels;
  }
}

std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelSpec& spec) {
  std::vector<std::pair<std::string, Shape>> out;
  out.emplace_back("stem.kernel", Shape{spec.stem_channels, 3, 3, 3});
  out.emplace_back("stem.bias", Shape{spec.stem_channels});
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const BlockConfig& b = spec.blocks[i];
    const std::string p = "block" + std::to_string(i) + ".";
    const int e = b.expansion_channels();
    const int h = b.se_hidden();
    if (e != b.in_channels) {
      out.emplace_back(p + "expand.kernel", Shape{e, b.in_channels, 1, 1});
      out.emplace_back(p + "expand.bias", Shape{e});
    }
    out.emplace_back(p + "dw.kernel", Shape{e, 1, 3, 3});
    out.emplace_back(p + "dw.bias", Shape{e});
    out.emplace_back(p + "se.reduce.weight", Shape{e, h});
    out.emplace_back(p + "se.reduce.bias", Shape{h});
    out.emplace_back(p + "se.expand.weight", Shape{h, e});
    out.emplace_back(p + "se.expand.bias", Shape{e});
    out.emplace_back(p + "project.kernel", Shape{b.out_channels, e, 1, 1});
    out.emplace_back(p + "project.bias", Shape{b.out_channels});
  }
  out.emplace_back("head.weight", Shape{spec.feature_channels(), spec.num_classes});
  out.emplace_back("head.bias", Shape{spec.num_classes});
  return out;
}

std::int64_t parameter_count(const ModelSpec& spec) {
  spec.validate();
  std::int64_t total = 0;
  for (const auto& [name, shape] : parameter_shapes(spec)) total += shape_numel(shape);
  return total;
}

namespace {

Tensor he_conv(Shape shape, Rng& rng) {
  const double fan_in = static_cast<double>(shape[1]) * shape[2] * shape[3];
  return randn(std::move(shape), std::sqrt(2.0 / fan_in), rng, /*requires_grad=*/true);
}

Tensor he_dense(Shape shape, Rng& rng) {
  const double fan_in = static_cast<double>(shape[0]);
  return randn(std::move(shape), std::sqrt(2.0 / fan_in), rng, /*requires_grad=*/true);
}

Tensor zero_bias(int n) { return Tensor::zeros({n}, /*requires_grad=*/true); }

}  // namespace

Model build_model(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  Model m;
  m.spec = spec;
  m.stem.kernel = he_conv({spec.stem_channels, 3, 3, 3}, rng);
  m.stem.bias = zero_bias(spec.stem_channels);
  for (const BlockConfig& b : spec.blocks) {
    BlockParams p;
    const int e = b.expansion_channels();
    const int h = b.se_hidden();
    if (e != b.in_channels) {
      p.expand = ConvParams{he_conv({e, b.in_channels, 1, 1}, rng), zero_bias(e)};
    }
    p.depthwise.kernel = he_conv({e, 1, 3, 3}, rng);
    p.depthwise.bias = zero_bias(e);
    p.se.reduce.weight = he_dense({e, h}, rng);
    p.se.reduce.bias = zero_bias(h);
    p.se.expand.weight = he_dense({h, e}, rng);
    p.se.expand.bias = zero_bias(e);
    p.project.kernel = he_conv({b.out_channels, e, 1, 1}, rng);
    p.project.bias = zero_bias(b.out_channels);
    m.blocks.push_back(std::move(p));
  }
  m.head.weight = he_dense({spec.feature_channels(), spec.num_classes}, rng);
  m.head.bias = zero_bias(spec.num_classes);
  return m;
}

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("stem.kernel", stem.kernel);
  out.emplace_back("stem.bias", stem.bias);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    const BlockParams& b = blocks[i];
    if (b.expand) {
      out.emplace_back(p + "expand.kernel", b.expand->kernel);
      out.emplace_back(p + "expand.bias", b.expand->bias);
    }
    out.emplace_back(p + "dw.kernel", b.depthwise.kernel);
    out.emplace_back(p + "dw.bias", b.depthwise.bias);
    out.emplace_back(p + "se.reduce.weight", b.se.reduce.weight);
    out.emplace_back(p + "se.reduce.bias", b.se.reduce.bias);
    out.emplace_back(p + "se.expand.weight", b.se.expand.weight);
    out.emplace_back(p + "se.expand.bias", b.se.expand.bias);
    out.emplace_back(p + "project.kernel", b.project.kernel);
    out.emplace_back(p + "project.bias", b.project.bias);
  }
  out.emplace_back("head.weight", head.weight);
  out.emplace_back("head.bias", head.bias);
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::int64_t Model::parameter_count() const {
  std::int64_t total = 0;
  for (const Tensor& t : parameters()) total += t.size();
  return total;
}

Model deep_copy(const Model& model) {
  Rng dummy(0);
  Model copy = build_model(model.spec, dummy);
  restore_weights(copy, snapshot_weights(model));
  return copy;
}

std::vector<std::vector<double>> snapshot_weights(const Model& model) {
  std::vector<std::vector<double>> snap;
  for (const Tensor& t : model.parameters()) snap.push_back(t.data());
  return snap;
}

void restore_weights(Model& model, const std::vector<std::vector<double>>& snapshot) {
  std::vector<Tensor> params = model.parameters();
  if (params.size() != snapshot.size()) {
    throw ShapeMismatch("restore_weights: snapshot has wrong parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].data().size() != snapshot[i].size()) {
      throw ShapeMismatch("restore_weights: parameter " + std::to_string(i) + " size differs");
    }
    params[i].data() = snapshot[i];
  }
}

Tensor se_block(Tape& tape, const Tensor& x, const SeParams& se) {
  if (x.shape().size() != 4) throw ShapeMismatch("se_block: input must be [N,C,H,W]");
  Tensor squeezed = pool(tape, PoolKind::GlobalAvg, x);
  Tensor flat = reshape(tape, squeezed, {x.shape()[0], x.shape()[1]});
  Tensor hidden = activation(
      tape, Activation::Swish,
      add(tape, matmul(tape, flat, se.reduce.weight), se.reduce.bias));
  Tensor gates = activation(
      tape, Activation::Sigmoid,
      add(tape, matmul(tape, hidden, se.expand.weight), se.expand.bias));
  return scale_channels(tape, x, gates);
}

Tensor stochastic_depth(Tape& tape, const Tensor& residual, double survival_prob, Mode mode,
                        Rng* rng, std::uint64_t* noise_draws) {
  if (!(survival_prob >= 0.0 && survival_prob <= 1.0)) {
    throw InvalidProbability("stochastic_depth: survival_prob must be in [0,1], got " +
                             std::to_string(survival_prob));
  }
  if (mode == Mode::Eval) return scale(tape, residual, survival_prob);
  if (survival_prob == 1.0) return residual;
  if (survival_prob == 0.0) return Tensor::zeros(residual.shape());
  if (rng == nullptr) throw Error("stochastic_depth: Train mode needs an rng");
  if (noise_draws) ++*noise_draws;
  return rng->bernoulli(survival_prob) ? residual : Tensor::zeros(residual.shape());
}

Tensor dropout(Tape& tape, const Tensor& x, double p, Mode mode, Rng* rng,
               std::uint64_t* noise_draws) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw InvalidProbability("dropout: p must be in [0,1), got " + std::to_string(p));
  }
  if (mode == Mode::Eval || p == 0.0) return x;
  if (rng == nullptr) throw Error("dropout: Train mode needs an rng");
  if (noise_draws) ++*noise_draws;
  Tensor mask = Tensor::zeros(x.shape());
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& v : mask.data()) v = rng->bernoulli(p) ? 0.0 : keep_scale;
  return mul(tape, x, mask);
}

Tensor inverted_residual(Tape& tape, const Tensor& x, const BlockConfig& cfg,
                         const BlockParams& params, Mode mode, Rng* rng,
                         std::uint64_t* noise_draws) {
  if (x.shape().size() != 4 || x.shape()[1] != cfg.in_channels) {
    throw ShapeMismatch("inverted_residual: input channels do not match block config");
  }
  Tensor h = x;
  if (params.expand) {
    h = conv2d(tape, h, params.expand->kernel, 1, 0, false);
    h = add_channel_bias(tape, h, params.expand->bias);
    h = activation(tape, Activation::Swish, h);
  }
  h = conv2d(tape, h, params.depthwise.kernel, cfg.stride, 1, true);
  h = add_channel_bias(tape, h, params.depthwise.bias);
  h = activation(tape, Activation::Swish, h);
  h = se_block(tape, h, params.se);
  h = conv2d(tape, h, params.project.kernel, 1, 0, false);
  h = add_channel_bias(tape, h, params.project.bias);
  if (!cfg.has_skip()) return h;
  Tensor residual = stochastic_depth(tape, h, cfg.survival_prob, mode, rng, noise_draws);
  return add(tape, x, residual);
}

Tensor forward(Tape& tape, const Model& model, const Tensor& batch, Mode mode, Rng* rng) {
  if (batch.shape().size() != 4 || batch.shape()[1] != 3) {
    throw ShapeMismatch("forward: batch must be [N,3,H,W], got " + shape_str(batch.shape()));
  }
  if (batch.shape()[2] != model.spec.input_resolution ||
      batch.shape()[3] != model.spec.input_resolution) {
    throw ShapeMismatch("forward: batch resolution " + std::to_string(batch.shape()[2]) + "x" +
                        std::to_string(batch.shape()[3]) + " does not match spec resolution " +
                        std::to_string(model.spec.input_resolution));
  }
  Tensor x = conv2d(tape, batch, model.stem.kernel, 2, 1, false);
  x = add_channel_bias(tape, x, model.stem.bias);
  x = activation(tape, Activation::Swish, x);
  for (std::size_t i = 0; i < model.blocks.size(); ++i) {
    x = inverted_residual(tape, x, model.spec.blocks[i], model.blocks[i], mode, rng,
                          &model.noise_draws);
  }
  x = pool(tape, PoolKind::GlobalAvg, x);
  x = reshape(tape, x, {x.shape()[0], x.shape()[1]});
  x = dropout(tape, x, model.spec.dropout_prob, mode, rng, &model.noise_draws);
  Tensor logits = add(tape, matmul(tape, x, model.head.weight), model.head.bias);
  if (!logits.all_finite()) throw NonFinite("forward: non-finite logits");
  return logits;
}

}  // namespace leafnet
