// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace leafnet {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

static void check_shape_valid(const Shape& shape) {
  if (shape.empty()) throw ShapeMismatch("tensor shape must have at least one dim");
  for (int d : shape) {
    if (d < 1) throw ShapeMismatch("tensor shape entries must be >= 1, got " + shape_str(shape));
  }
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_shape_valid(shape);
  Tensor t;
  t.node_ = std::make_shared<TensorData>();
  t.node_->value.assign(static_cast<std::size_t>(shape_numel(shape)), 0.0);
  t.node_->shape = std::move(shape);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.data().begin(), t.data().end(), v);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape_valid(shape);
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeMismatch("data length " + std::to_string(data.size()) + " does not match shape " +
                        shape_str(shape));
  }
  Tensor t;
  t.node_ = std::make_shared<TensorData>();
  t.node_->shape = std::move(shape);
  t.node_->value = std::move(data);
  t.node_->requires_grad = requires_grad;
  return t;
}

std::vector<double>& Tensor::mutable_grad() const {
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (node_->grad.empty()) throw Error("tensor has no gradient; run backward first");
  return node_->grad;
}

double Tensor::item() const {
  if (size() != 1) throw NotScalar("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

bool Tensor::all_finite() const {
  for (double v : node_->value) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::clone_detached() const {
  return Tensor::from(shape(), data(), false);
}

void Tape::record(std::vector<Tensor> inputs, Tensor output,
                  std::function<void(const std::vector<Tensor>&, const Tensor&)> rule) {
  entries_.push_back(Entry{std::move(inputs), std::move(output), std::move(rule)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw NotScalar("backward requires a scalar loss, got " +
                    (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  if (entries_.empty()) throw Error("backward on an empty tape");
  loss.mutable_grad()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output.has_grad()) it->rule(it->inputs, it->output);
  }
}

// ---------------------------------------------------------------------------
// op helpers

namespace {

bool want_grad(const Tape& tape, std::initializer_list<const Tensor*> ins) {
  if (!tape.recording()) return false;
  for (const Tensor* t : ins) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw Error(std::string(op) + ": undefined tensor");
}

// b broadcastable onto a: identical shape, [1], or a suffix of a's dims.
bool broadcast_ok(const Shape& a, const Shape& b) {
  if (b.size() == 1 && b[0] == 1) return true;
  if (b.size() > a.size()) return false;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[b.size() - 1 - i] != a[a.size() - 1 - i]) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// elementwise

Tensor elementwise(Tape& tape, Elementwise op, const Tensor& a, const Tensor& b) {
  require_defined(a, "elementwise");
  require_defined(b, "elementwise");
  if (!broadcast_ok(a.shape(), b.shape())) {
    throw ShapeMismatch("elementwise: " + shape_str(b.shape()) + " does not broadcast onto " +
                        shape_str(a.shape()));
  }
  const std::size_t n = a.data().size();
  const std::size_t bn = b.data().size();
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  switch (op) {
    case Elementwise::Add:
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i % bn];
      break;
    case Elementwise::Sub:
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i % bn];
      break;
    case Elementwise::Mul:
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i % bn];
      break;
  }
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape.record({a, b}, out, [op](const std::vector<Tensor>& in, const Tensor& o) {
      const std::vector<double>& g = o.grad();
      Tensor a_in = in[0];
      Tensor b_in = in[1];
      const std::size_t n = g.size();
      const std::size_t bn = b_in.data().size();
      if (a_in.requires_grad()) {
        double* ga = a_in.mutable_grad().data();
        const double* pb = b_in.data().data();
        switch (op) {
          case Elementwise::Add:
          case Elementwise::Sub:
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
            break;
          case Elementwise::Mul:
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * pb[i % bn];
            break;
        }
      }
      if (b_in.requires_grad()) {
        double* gb = b_in.mutable_grad().data();
        const double* pa = a_in.data().data();
        switch (op) {
          case Elementwise::Add:
            for (std::size_t i = 0; i < n; ++i) gb[i % bn] += g[i];
            break;
          case Elementwise::Sub:
            for (std::size_t i = 0; i < n; ++i) gb[i % bn] -= g[i];
            break;
          case Elementwise::Mul:
            for (std::size_t i = 0; i < n; ++i) gb[i % bn] += g[i] * pa[i];
            break;
        }
      }
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return elementwise(tape, Elementwise::Add, a, b);
}
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return elementwise(tape, Elementwise::Sub, a, b);
}
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return elementwise(tape, Elementwise::Mul, a, b);
}

// ---------------------------------------------------------------------------
// matmul

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeMismatch("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                        shape_str(b.shape()));
  }
  const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out = Tensor::zeros({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (int i = 0; i < m; ++i) {
    double* orow = po + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double aik = pa[static_cast<std::size_t>(i) * k + kk];
      const double* brow = pb + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  if (want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape.record({a, b}, out, [m, k, n](const std::vector<Tensor>& in, const Tensor& o) {
      const double* g = o.grad().data();
      Tensor a_in = in[0];
      Tensor b_in = in[1];
      if (a_in.requires_grad()) {
        double* ga = a_in.mutable_grad().data();
        const double* pb = b_in.data().data();
        for (int i = 0; i < m; ++i) {
          const double* grow = g + static_cast<std::size_t>(i) * n;
          double* garow = ga + static_cast<std::size_t>(i) * k;
          for (int kk = 0; kk < k; ++kk) {
            const double* brow = pb + static_cast<std::size_t>(kk) * n;
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            garow[kk] += acc;
          }
        }
      }
      if (b_in.requires_grad()) {
        double* gb = b_in.mutable_grad().data();
        const double* pa = a_in.data().data();
        for (int i = 0; i < m; ++i) {
          const double* grow = g + static_cast<std::size_t>(i) * n;
          const double* arow = pa + static_cast<std::size_t>(i) * k;
          for (int kk = 0; kk < k; ++kk) {
            double* gbrow = gb + static_cast<std::size_t>(kk) * n;
            const double aik = arow[kk];
            for (int j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// conv2d

namespace {

struct ConvDims {
  int n, c, h, w;        // input
  int f, kc, kh, kw;     // kernel
  int oh, ow;            // output
  int stride, padding;
  bool depthwise;
};

ConvDims conv_check(const Tensor& input, const Tensor& kernel, int stride, int padding,
                    bool depthwise) {
  if (stride < 1) throw InvalidStride("conv2d: stride must be >= 1, got " + std::to_string(stride));
  if (padding < 0) throw ShapeMismatch("conv2d: padding must be >= 0");
  if (input.shape().size() != 4 || kernel.shape().size() != 4) {
    throw ShapeMismatch("conv2d: input and kernel must be 4-D, got " + shape_str(input.shape()) +
                        " and " + shape_str(kernel.shape()));
  }
  ConvDims d{};
  d.n = input.shape()[0];
  d.c = input.shape()[1];
  d.h = input.shape()[2];
  d.w = input.shape()[3];
  d.f = kernel.shape()[0];
  d.kc = kernel.shape()[1];
  d.kh = kernel.shape()[2];
  d.kw = kernel.shape()[3];
  d.stride = stride;
  d.padding = padding;
  d.depthwise = depthwise;
  if (depthwise) {
    if (d.f != d.c || d.kc != 1) {
      throw ShapeMismatch("conv2d depthwise: kernel must be [C,1,kh,kw] with C == input channels");
    }
  } else if (d.kc != d.c) {
    throw ShapeMismatch("conv2d: kernel channels " + std::to_string(d.kc) +
                        " != input channels " + std::to_string(d.c));
  }
  if (d.kh > d.h + 2 * padding || d.kw > d.w + 2 * padding) {
    throw ShapeMismatch("conv2d: kernel larger than padded input");
  }
  d.oh = (d.h + 2 * padding - d.kh) / stride + 1;
  d.ow = (d.w + 2 * padding - d.kw) / stride + 1;
  return d;
}

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernel, int stride, int padding,
              bool depthwise) {
  require_defined(input, "conv2d");
  require_defined(kernel, "conv2d");
  const ConvDims d = conv_check(input, kernel, stride, padding, depthwise);
  Tensor out = Tensor::zeros({d.n, d.f, d.oh, d.ow});
  const double* in = input.data().data();
  const double* ker = kernel.data().data();
  double* po = out.data().data();

  // Channel-outer loop streams one input plane against one kernel plane.
  // Each output element still receives its terms in (c, kh, kw) order, so
  // results are bit-identical to the naive six-loop form.
  for (int n = 0; n < d.n; ++n) {
    for (int f = 0; f < d.f; ++f) {
      const int c_begin = d.depthwise ? f : 0;
      const int c_end = d.depthwise ? f + 1 : d.c;
      double* out_plane = po + (static_cast<std::size_t>(n) * d.f + f) * d.oh * d.ow;
      for (int c = c_begin; c < c_end; ++c) {
        const double* in_plane = in + (static_cast<std::size_t>(n) * d.c + c) * d.h * d.w;
        const double* k_plane =
            ker + (static_cast<std::size_t>(f) * d.kc + (d.depthwise ? 0 : c)) * d.kh * d.kw;
        for (int kh = 0; kh < d.kh; ++kh) {
          const double* k_row = k_plane + static_cast<std::size_t>(kh) * d.kw;
          for (int oh = 0; oh < d.oh; ++oh) {
            const int ih = oh * d.stride - d.padding + kh;
            if (ih < 0 || ih >= d.h) continue;
            const double* in_row = in_plane + static_cast<std::size_t>(ih) * d.w;
            double* out_row = out_plane + static_cast<std::size_t>(oh) * d.ow;
            for (int kw = 0; kw < d.kw; ++kw) {
              const int iw0 = -d.padding + kw;
              const double kv = k_row[kw];
              // valid ow range for this (kh, kw)
              int ow_lo = 0, ow_hi = d.ow;
              while (ow_lo < d.ow && ow_lo * d.stride + iw0 < 0) ++ow_lo;
              while (ow_hi > ow_lo && (ow_hi - 1) * d.stride + iw0 >= d.w) --ow_hi;
              for (int ow = ow_lo; ow < ow_hi; ++ow) {
                out_row[ow] += in_row[ow * d.stride + iw0] * kv;
              }
            }
          }
        }
      }
    }
  }

  if (want_grad(tape, {&input, &kernel})) {
    out.set_requires_grad(true);
    tape.record({input, kernel}, out, [d](const std::vector<Tensor>& in_t, const Tensor& o) {
      const double* g = o.grad().data();
      Tensor input_t = in_t[0];
      Tensor kernel_t = in_t[1];
      const double* in = input_t.data().data();
      const double* ker = kernel_t.data().data();
      double* gi = input_t.requires_grad() ? input_t.mutable_grad().data() : nullptr;
      double* gk = kernel_t.requires_grad() ? kernel_t.mutable_grad().data() : nullptr;
      for (int n = 0; n < d.n; ++n) {
        for (int f = 0; f < d.f; ++f) {
          const int c_begin = d.depthwise ? f : 0;
          const int c_end = d.depthwise ? f + 1 : d.c;
          const double* g_plane = g + (static_cast<std::size_t>(n) * d.f + f) * d.oh * d.ow;
          for (int c = c_begin; c < c_end; ++c) {
            const double* in_plane = in + (static_cast<std::size_t>(n) * d.c + c) * d.h * d.w;
            double* gi_plane =
                gi ? gi + (static_cast<std::size_t>(n) * d.c + c) * d.h * d.w : nullptr;
            const std::size_t k_base =
                (static_cast<std::size_t>(f) * d.kc + (d.depthwise ? 0 : c)) * d.kh * d.kw;
            for (int kh = 0; kh < d.kh; ++kh) {
              for (int kw = 0; kw < d.kw; ++kw) {
                const double kv = ker[k_base + static_cast<std::size_t>(kh) * d.kw + kw];
                const int iw0 = -d.padding + kw;
                double gk_acc = 0.0;
                for (int oh = 0; oh < d.oh; ++oh) {
                  const int ih = oh * d.stride - d.padding + kh;
                  if (ih < 0 || ih >= d.h) continue;
                  const double* g_row = g_plane + static_cast<std::size_t>(oh) * d.ow;
                  const double* in_row = in_plane + static_cast<std::size_t>(ih) * d.w;
                  double* gi_row = gi_plane ? gi_plane + static_cast<std::size_t>(ih) * d.w : nullptr;
                  int ow_lo = 0, ow_hi = d.ow;
                  while (ow_lo < d.ow && ow_lo * d.stride + iw0 < 0) ++ow_lo;
                  while (ow_hi > ow_lo && (ow_hi - 1) * d.stride + iw0 >= d.w) --ow_hi;
                  if (gi_row) {
                    for (int ow = ow_lo; ow < ow_hi; ++ow) {
                      gi_row[ow * d.stride + iw0] += g_row[ow] * kv;
                    }
                  }
                  if (gk) {
                    for (int ow = ow_lo; ow < ow_hi; ++ow) {
                      gk_acc += g_row[ow] * in_row[ow * d.stride + iw0];
                    }
                  }
                }
                if (gk) gk[k_base + static_cast<std::size_t>(kh) * d.kw + kw] += gk_acc;
              }
            }
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// activations

namespace {

double sigmoid_stable(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor activation(Tape& tape, Activation kind, const Tensor& x) {
  require_defined(x, "activation");
  const std::size_t n = x.data().size();
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  double* po = out.data().data();
  switch (kind) {
    case Activation::Relu:
      for (std::size_t i = 0; i < n; ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) po[i] = sigmoid_stable(px[i]);
      break;
    case Activation::Swish:
      for (std::size_t i = 0; i < n; ++i) po[i] = px[i] * sigmoid_stable(px[i]);
      break;
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record({x}, out, [kind](const std::vector<Tensor>& in, const Tensor& o) {
      Tensor x_in = in[0];
      if (!x_in.requires_grad()) return;
      const std::vector<double>& g = o.grad();
      const double* px = x_in.data().data();
      const double* py = o.data().data();
      double* gx = x_in.mutable_grad().data();
      const std::size_t n = g.size();
      switch (kind) {
        case Activation::Relu:
          for (std::size_t i = 0; i < n; ++i) gx[i] += px[i] > 0.0 ? g[i] : 0.0;
          break;
        case Activation::Sigmoid:
          for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * py[i] * (1.0 - py[i]);
          break;
        case Activation::Swish:
          for (std::size_t i = 0; i < n; ++i) {
            const double s = sigmoid_stable(px[i]);
            gx[i] += g[i] * (s + px[i] * s * (1.0 - s));
          }
          break;
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// pooling

Tensor pool(Tape& tape, PoolKind kind, const Tensor& x) {
  require_defined(x, "pool");
  if (x.shape().size() != 4) {
    throw ShapeMismatch("pool: input must be [N,C,H,W], got " + shape_str(x.shape()));
  }
  const int n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  const double* px = x.data().data();

  if (kind == PoolKind::GlobalAvg) {
    Tensor out = Tensor::zeros({n, c, 1, 1});
    double* po = out.data().data();
    const double inv = 1.0 / (static_cast<double>(h) * w);
    for (int i = 0; i < n * c; ++i) {
      const double* plane = px + static_cast<std::size_t>(i) * h * w;
      double acc = 0.0;
      for (int j = 0; j < h * w; ++j) acc += plane[j];
      po[i] = acc * inv;
    }
    if (want_grad(tape, {&x})) {
      out.set_requires_grad(true);
      tape.record({x}, out, [n, c, h, w, inv](const std::vector<Tensor>& in, const Tensor& o) {
        Tensor x_in = in[0];
        if (!x_in.requires_grad()) return;
        const double* g = o.grad().data();
        double* gx = x_in.mutable_grad().data();
        for (int i = 0; i < n * c; ++i) {
          const double gshare = g[i] * inv;
          double* plane = gx + static_cast<std::size_t>(i) * h * w;
          for (int j = 0; j < h * w; ++j) plane[j] += gshare;
        }
      });
    }
    return out;
  }

  // Max2x2
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeMismatch("pool max2x2: H and W must be even, got " + shape_str(x.shape()));
  }
  const int oh = h / 2, ow = w / 2;
  Tensor out = Tensor::zeros({n, c, oh, ow});
  double* po = out.data().data();
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(n) * c * oh * ow);
  std::size_t oi = 0;
  for (int i = 0; i < n * c; ++i) {
    const double* plane = px + static_cast<std::size_t>(i) * h * w;
    const std::size_t plane_base = static_cast<std::size_t>(i) * h * w;
    for (int y = 0; y < oh; ++y) {
      for (int xq = 0; xq < ow; ++xq) {
        double best = plane[static_cast<std::size_t>(2 * y) * w + 2 * xq];
        std::int64_t besti = static_cast<std::int64_t>(plane_base + static_cast<std::size_t>(2 * y) * w + 2 * xq);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t idx = static_cast<std::size_t>(2 * y + dy) * w + (2 * xq + dx);
            if (plane[idx] > best) {
              best = plane[idx];
              besti = static_cast<std::int64_t>(plane_base + idx);
            }
          }
        }
        po[oi] = best;
        argmax[oi] = besti;
        ++oi;
      }
    }
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record({x}, out,
                [argmax = std::move(argmax)](const std::vector<Tensor>& in, const Tensor& o) {
                  Tensor x_in = in[0];
                  if (!x_in.requires_grad()) return;
                  const double* g = o.grad().data();
                  double* gx = x_in.mutable_grad().data();
                  for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += g[i];
                });
  }
  return out;
}

// ---------------------------------------------------------------------------
// softmax / log_softmax

namespace {

void check_rows(const Tensor& x, const char* op) {
  if (x.shape().size() != 2 || x.shape()[1] < 1) {
    throw ShapeMismatch(std::string(op) + ": input must be [N,C] with C >= 1, got " +
                        shape_str(x.shape()));
  }
}

}  // namespace

Tensor softmax(Tape& tape, const Tensor& x) {
  require_defined(x, "softmax");
  check_rows(x, "softmax");
  const int n = x.shape()[0], c = x.shape()[1];
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  double* po = out.data().data();
  for (int i = 0; i < n; ++i) {
    const double* row = px + static_cast<std::size_t>(i) * c;
    double* orow = po + static_cast<std::size_t>(i) * c;
    double m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double s = 0.0;
    for (int j = 0; j < c; ++j) {
      orow[j] = std::exp(row[j] - m);
      s += orow[j];
    }
    const double inv = 1.0 / s;
    for (int j = 0; j < c; ++j) orow[j] *= inv;
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record({x}, out, [n, c](const std::vector<Tensor>& in, const Tensor& o) {
      Tensor x_in = in[0];
      if (!x_in.requires_grad()) return;
      const double* g = o.grad().data();
      const double* y = o.data().data();
      double* gx = x_in.mutable_grad().data();
      for (int i = 0; i < n; ++i) {
        const double* grow = g + static_cast<std::size_t>(i) * c;
        const double* yrow = y + static_cast<std::size_t>(i) * c;
        double* gxrow = gx + static_cast<std::size_t>(i) * c;
        double dot = 0.0;
        for (int j = 0; j < c; ++j) dot += grow[j] * yrow[j];
        for (int j = 0; j < c; ++j) gxrow[j] += yrow[j] * (grow[j] - dot);
      }
    });
  }
  return out;
}

Tensor log_softmax(Tape& tape, const Tensor& x) {
  require_defined(x, "log_softmax");
  check_rows(x, "log_softmax");
  const int n = x.shape()[0], c = x.shape()[1];
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  double* po = out.data().data();
  for (int i = 0; i < n; ++i) {
    const double* row = px + static_cast<std::size_t>(i) * c;
    double* orow = po + static_cast<std::size_t>(i) * c;
    double m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += std::exp(row[j] - m);
    const double lse = m + std::log(s);
    for (int j = 0; j < c; ++j) orow[j] = row[j] - lse;
  }
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record({x}, out, [n, c](const std::vector<Tensor>& in, const Tensor& o) {
      Tensor x_in = in[0];
      if (!x_in.requires_grad()) return;
      const double* g = o.grad().data();
      const double* lsm = o.data().data();
      double* gx = x_in.mutable_grad().data();
      for (int i = 0; i < n; ++i) {
        const double* grow = g + static_cast<std::size_t>(i) * c;
        const double* lrow = lsm + static_cast<std::size_t>(i) * c;
        double* gxrow = gx + static_cast<std::size_t>(i) * c;
        double gsum = 0.0;
        for (int j = 0; j < c; ++j) gsum += grow[j];
        for (int j = 0; j < c; ++j) gxrow[j] += grow[j] - std::exp(lrow[j]) * gsum;
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// shape / scalar ops

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  require_defined(x, "reshape");
  if (shape_numel(shape) != x.size()) {
    throw ShapeMismatch("reshape: cannot view " + shape_str(x.shape()) + " as " +
                        shape_str(shape));
  }
  Tensor out = Tensor::from(std::move(shape), x.data());
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record({x}, out, [](const std::vector<Tensor>& in, const Tensor& o) {
      Tensor x_in = in[0];
      if (!x_in.requires_grad()) return;
      const std::vector<double>& g = o.grad();
      double* gx = x_in.mutable_grad().data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& x, double c) {
  require_defined(x, "scale");
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < x.data().size(); ++i) po[i] = px[i] * c;
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record({x}, out, [c](const std::vector<Tensor>& in, const Tensor& o) {
      Tensor x_in = in[0];
      if (!x_in.requires_grad()) return;
      const std::vector<double>& g = o.grad();
      double* gx = x_in.mutable_grad().data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * c;
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
  require_defined(x, "sum");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::from({1}, {acc});
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record({x}, out, [](const std::vector<Tensor>& in, const Tensor& o) {
      Tensor x_in = in[0];
      if (!x_in.requires_grad()) return;
      const double g = o.grad()[0];
      double* gx = x_in.mutable_grad().data();
      for (std::size_t i = 0; i < x_in.data().size(); ++i) gx[i] += g;
    });
  }
  return out;
}

Tensor mean(Tape& tape, const Tensor& x) {
  require_defined(x, "mean");
  return scale(tape, sum(tape, x), 1.0 / static_cast<double>(x.size()));
}

Tensor log_clamped(Tape& tape, const Tensor& x, double eps) {
  require_defined(x, "log_clamped");
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < x.data().size(); ++i) po[i] = std::log(std::max(px[i], eps));
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape.record({x}, out, [eps](const std::vector<Tensor>& in, const Tensor& o) {
      Tensor x_in = in[0];
      if (!x_in.requires_grad()) return;
      const std::vector<double>& g = o.grad();
      const double* px = x_in.data().data();
      double* gx = x_in.mutable_grad().data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (px[i] > eps) gx[i] += g[i] / px[i];
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// channel ops

Tensor scale_channels(Tape& tape, const Tensor& x, const Tensor& gates) {
  require_defined(x, "scale_channels");
  require_defined(gates, "scale_channels");
  if (x.shape().size() != 4 || gates.shape().size() != 2 || gates.shape()[0] != x.shape()[0] ||
      gates.shape()[1] != x.shape()[1]) {
    throw ShapeMismatch("scale_channels: x " + shape_str(x.shape()) + " vs gates " +
                        shape_str(gates.shape()));
  }
  const int n = x.shape()[0], c = x.shape()[1];
  const int hw = x.shape()[2] * x.shape()[3];
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  const double* pg = gates.data().data();
  double* po = out.data().data();
  for (int i = 0; i < n * c; ++i) {
    const double gate = pg[i];
    const double* plane = px + static_cast<std::size_t>(i) * hw;
    double* oplane = po + static_cast<std::size_t>(i) * hw;
    for (int j = 0; j < hw; ++j) oplane[j] = plane[j] * gate;
  }
  if (want_grad(tape, {&x, &gates})) {
    out.set_requires_grad(true);
    tape.record({x, gates}, out, [n, c, hw](const std::vector<Tensor>& in, const Tensor& o) {
      const double* g = o.grad().data();
      Tensor x_in = in[0];
      Tensor gate_in = in[1];
      if (x_in.requires_grad()) {
        double* gx = x_in.mutable_grad().data();
        const double* pg = gate_in.data().data();
        for (int i = 0; i < n * c; ++i) {
          const double gate = pg[i];
          const double* gplane = g + static_cast<std::size_t>(i) * hw;
          double* gxplane = gx + static_cast<std::size_t>(i) * hw;
          for (int j = 0; j < hw; ++j) gxplane[j] += gplane[j] * gate;
        }
      }
      if (gate_in.requires_grad()) {
        double* gg = gate_in.mutable_grad().data();
        const double* px = x_in.data().data();
        for (int i = 0; i < n * c; ++i) {
          const double* gplane = g + static_cast<std::size_t>(i) * hw;
          const double* xplane = px + static_cast<std::size_t>(i) * hw;
          double acc = 0.0;
          for (int j = 0; j < hw; ++j) acc += gplane[j] * xplane[j];
          gg[i] += acc;
        }
      }
    });
  }
  return out;
}

Tensor add_channel_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
  require_defined(x, "add_channel_bias");
  require_defined(bias, "add_channel_bias");
  if (x.shape().size() != 4 || bias.shape().size() != 1 || bias.shape()[0] != x.shape()[1]) {
    throw ShapeMismatch("add_channel_bias: x " + shape_str(x.shape()) + " vs bias " +
                        shape_str(bias.shape()));
  }
  const int n = x.shape()[0], c = x.shape()[1];
  const int hw = x.shape()[2] * x.shape()[3];
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  const double* pb = bias.data().data();
  double* po = out.data().data();
  for (int i = 0; i < n * c; ++i) {
    const double b = pb[i % c];
    const double* plane = px + static_cast<std::size_t>(i) * hw;
    double* oplane = po + static_cast<std::size_t>(i) * hw;
    for (int j = 0; j < hw; ++j) oplane[j] = plane[j] + b;
  }
  if (want_grad(tape, {&x, &bias})) {
    out.set_requires_grad(true);
    tape.record({x, bias}, out, [n, c, hw](const std::vector<Tensor>& in, const Tensor& o) {
      const double* g = o.grad().data();
      Tensor x_in = in[0];
      Tensor bias_in = in[1];
      if (x_in.requires_grad()) {
        double* gx = x_in.mutable_grad().data();
        for (std::size_t i = 0; i < o.data().size(); ++i) gx[i] += g[i];
      }
      if (bias_in.requires_grad()) {
        double* gb = bias_in.mutable_grad().data();
        for (int i = 0; i < n * c; ++i) {
          const double* gplane = g + static_cast<std::size_t>(i) * hw;
          double acc = 0.0;
          for (int j = 0; j < hw; ++j) acc += gplane[j];
          gb[i % c] += acc;
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// grad_check

double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x,
                  double step) {
  if (step <= 0.0) throw Error("grad_check: step must be > 0");
  Tensor probe = Tensor::from(x.shape(), x.data(), /*requires_grad=*/true);

  Tape tape;
  Tensor y = f(tape, probe);
  if (y.size() != 1) throw NotScalar("grad_check: f must return a scalar");
  if (!std::isfinite(y.item())) throw NonFinite("grad_check: f produced a non-finite value");
  tape.backward(y);
  std::vector<double> analytic(probe.data().size(), 0.0);
  if (probe.has_grad()) analytic = probe.grad();

  auto eval = [&](const std::vector<double>& values) {
    Tensor p = Tensor::from(x.shape(), values, false);
    Tape t;
    t.set_recording(false);
    Tensor out = f(t, p);
    if (out.size() != 1) throw NotScalar("grad_check: f must return a scalar");
    const double v = out.item();
    if (!std::isfinite(v)) throw NonFinite("grad_check: f produced a non-finite value");
    return v;
  };

  double max_rel = 0.0;
  std::vector<double> values = x.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + step;
    const double up = eval(values);
    values[i] = keep - step;
    const double down = eval(values);
    values[i] = keep;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
  }
  return max_rel;
}

Tensor randn(Shape shape, double stddev, Rng& rng, bool requires_grad) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.data()) v = rng.normal() * stddev;
  return t;
}

}  // namespace leafnet
