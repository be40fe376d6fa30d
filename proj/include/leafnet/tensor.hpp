// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense tensor with reverse-mode automatic differentiation.
//
// Tensors are cheap shared handles onto a node holding shape, 64-bit float
// data (row-major) and an optional gradient buffer.  Every differentiable
// operation takes a Tape; the tape records one entry per executed op in
// execution order (which is a topological order by construction) and
// backward() replays the entries in reverse, accumulating gradients with +=
// so fan-out points sum rather than overwrite.  The tape is rebuilt for each
// forward pass (define-by-run) and must only ever be driven from one thread.

#ifndef LEAFNET_TENSOR_HPP_
#define LEAFNET_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "leafnet/errors.hpp"
#include "leafnet/rng.hpp"

namespace leafnet {

using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until backward touches it
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t size() const { return static_cast<std::int64_t>(node_->value.size()); }

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient buffer, allocated to zeros on first access.  Tensors are
  /// shared handles; grad state lives on the shared node, so these work
  /// through const handles too.
  std::vector<double>& mutable_grad() const;
  const std::vector<double>& grad() const;
  void zero_grad() const { node_->grad.clear(); }

  /// Value of a single-element tensor.
  double item() const;

  bool all_finite() const;

  /// Same handle (aliasing), not a deep copy.
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  /// Detached deep copy (no grad, no requires_grad).
  Tensor clone_detached() const;

 private:
  std::shared_ptr<TensorData> node_;
};

class Tape {
 public:
  struct Entry {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void(const std::vector<Tensor>&, const Tensor&)> rule;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// When recording is off, ops compute values only (no entries, no grads).
  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  void record(std::vector<Tensor> inputs, Tensor output,
              std::function<void(const std::vector<Tensor>&, const Tensor&)> rule);

  /// Reverse sweep from a scalar loss.  Populates grad on every
  /// requires_grad tensor reachable from the loss; gradients accumulate at
  /// fan-out points.  Each recorded entry is visited exactly once.
  void backward(const Tensor& loss);

 private:
  std::vector<Entry> entries_;
  bool recording_ = true;
};

enum class Elementwise { Add, Sub, Mul };
enum class Activation { Relu, Sigmoid, Swish };
enum class PoolKind { GlobalAvg, Max2x2 };

/// Elementwise add/sub/mul.  b must have the same shape as a, or be
/// broadcastable: shape [1] or a suffix of a's shape (trailing dims).
/// Broadcast gradients sum over the broadcast (leading) dims.
Tensor elementwise(Tape& tape, Elementwise op, const Tensor& a, const Tensor& b);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

/// Matrix product of [m,k] x [k,n].  Backward: dA = dC.B^T, dB = A^T.dC.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// 2-D convolution in the cross-correlation convention (no kernel flip),
/// zero padding.  input [N,C,H,W]; kernel [F,C,kh,kw], or [C,1,kh,kw] when
/// depthwise.  Output spatial dims: floor((H + 2p - kh)/stride) + 1.
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernel, int stride,
              int padding, bool depthwise);

Tensor activation(Tape& tape, Activation kind, const Tensor& x);

/// GlobalAvg: [N,C,H,W] -> [N,C,1,1] channel means.
/// Max2x2: halves spatial dims; H and W must be even.
Tensor pool(Tape& tape, PoolKind kind, const Tensor& x);

/// Row softmax of [N,C], max-subtracted for stability; rows sum to 1.
Tensor softmax(Tape& tape, const Tensor& x);

/// Row log-softmax of [N,C]; the numerically safe path for cross-entropy.
Tensor log_softmax(Tape& tape, const Tensor& x);

/// Same data, new shape (element count must match); gradient passes through.
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

/// x * c for a scalar constant c.
Tensor scale(Tape& tape, const Tensor& x, double c);

/// Sum of all elements -> scalar tensor of shape [1].
Tensor sum(Tape& tape, const Tensor& x);

/// Mean of all elements -> scalar tensor of shape [1].
Tensor mean(Tape& tape, const Tensor& x);

/// Natural log with values clamped to >= eps before the log (the clamp
/// keeps confident-wrong losses finite; gradient is 0 where clamped).
Tensor log_clamped(Tape& tape, const Tensor& x, double eps = 1e-12);

/// Per-channel scaling: x [N,C,H,W] scaled by gates [N,C].
Tensor scale_channels(Tape& tape, const Tensor& x, const Tensor& gates);

/// Per-channel bias: x [N,C,H,W] plus bias [C].
Tensor add_channel_bias(Tape& tape, const Tensor& x, const Tensor& bias);

/// Central-difference gradient check for a scalar-valued tensor function.
/// Returns max over coordinates of |analytic - numeric| /
/// max(|analytic|, |numeric|, 1e-8).  Throws NonFinite if f produces
/// NaN/Inf anywhere.
double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x,
                  double step);

/// Fills a tensor with N(0, stddev) draws.
Tensor randn(Shape shape, double stddev, Rng& rng, bool requires_grad = false);

}  // namespace leafnet

#endif  // LEAFNET_TENSOR_HPP_
