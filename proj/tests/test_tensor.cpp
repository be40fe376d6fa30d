// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "leafnet/rng.hpp"
#include "leafnet/tensor.hpp"
#include "oracle_helpers.hpp"

using namespace leafnet;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("elementwise add/sub/mul basics") {
  Tape tape;
  Tensor a = Tensor::from({2}, {1, 2});
  Tensor b = Tensor::from({2}, {3, 4});
  CHECK(add(tape, a, b).data() == std::vector<double>{4, 6});
  CHECK(sub(tape, a, b).data() == std::vector<double>{-2, -2});

  Tensor x = Tensor::from({2, 2}, {1, -2, 3, 0.5});
  Tensor ones = Tensor::full({2, 2}, 1.0);
  CHECK(mul(tape, x, ones).data() == x.data());
}

TEST_CASE("elementwise broadcasting: scalar and trailing dims") {
  Tape tape;
  Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor scalar = Tensor::from({1}, {10});
  CHECK(add(tape, a, scalar).data() == std::vector<double>{11, 12, 13, 14, 15, 16});

  Tensor bias = Tensor::from({3}, {10, 20, 30});
  CHECK(add(tape, a, bias).data() == std::vector<double>{11, 22, 33, 14, 25, 36});

  Tensor bad = Tensor::from({2}, {1, 2});
  CHECK_THROWS_AS(add(tape, a, bad), ShapeMismatch);
}

TEST_CASE("broadcast gradients sum over broadcast dims") {
  Tape tape;
  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
  Tensor b = Tensor::from({2}, {5, 7}, true);
  Tensor loss = sum(tape, mul(tape, a, b));
  tape.backward(loss);
  CHECK(a.grad() == std::vector<double>{5, 7, 5, 7});
  CHECK(b.grad() == std::vector<double>{1 + 3, 2 + 4});
}

TEST_CASE("d/da of sum(mul(a,b)) equals b, and matches finite differences") {
  Tape tape;
  Tensor a = Tensor::from({2}, {1, 2}, true);
  Tensor b = Tensor::from({2}, {3, 5});
  Tensor loss = sum(tape, mul(tape, a, b));
  tape.backward(loss);
  CHECK(a.grad() == std::vector<double>{3, 5});

  const double err = grad_check(
      [&](Tape& t, const Tensor& x) { return sum(t, mul(t, x, b)); }, a, 1e-5);
  CHECK(err < 1e-8);
}

TEST_CASE("matmul identity and direct product") {
  Tape tape;
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(matmul(tape, eye, m).data() == m.data());

  Tensor row = Tensor::from({1, 2}, {1, 2});
  Tensor col = Tensor::from({2, 1}, {3, 4});
  CHECK(matmul(tape, row, col).data() == std::vector<double>{11});

  CHECK_THROWS_AS(matmul(tape, row, row), ShapeMismatch);
}

TEST_CASE("matmul gradient matches finite differences within 1e-6") {
  Rng rng(7);
  Tensor a = randn({3, 4}, 1.0, rng);
  Tensor b = randn({4, 2}, 1.0, rng);
  const double err_a = grad_check(
      [&](Tape& t, const Tensor& x) { return sum(t, matmul(t, x, b)); }, a, 1e-5);
  CHECK(err_a < 1e-6);
  const double err_b = grad_check(
      [&](Tape& t, const Tensor& x) { return sum(t, matmul(t, a, x)); }, b, 1e-5);
  CHECK(err_b < 1e-6);
}

TEST_CASE("conv2d: 1x1 scaling kernel") {
  Tape tape;
  Tensor img = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor k = Tensor::from({1, 1, 1, 1}, {2});
  CHECK(conv2d(tape, img, k, 1, 0, false).data() == std::vector<double>{2, 4, 6, 8});
}

TEST_CASE("conv2d: kernel summing to 1 preserves constants in the valid region") {
  Tape tape;
  Tensor img = Tensor::full({1, 1, 5, 5}, 3.25);
  std::vector<double> kd(9, 1.0 / 9.0);
  Tensor k = Tensor::from({1, 1, 3, 3}, kd);
  Tensor out = conv2d(tape, img, k, 1, 0, false);
  CHECK(out.shape() == Shape{1, 1, 3, 3});
  for (double v : out.data()) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
}

TEST_CASE("conv2d matches the six-loop oracle bit-for-bit") {
  Rng rng(11);
  SUBCASE("spec instance: 1x1x4x4 input, 1x1x3x3 kernel") {
    Tensor img = randn({1, 1, 4, 4}, 1.0, rng);
    Tensor k = randn({1, 1, 3, 3}, 1.0, rng);
    Tape tape;
    Tensor out = conv2d(tape, img, k, 1, 0, false);
    int oh = 0, ow = 0;
    const std::vector<double> expect = leafnet::testing::naive_conv2d(
        img.data(), 1, 1, 4, 4, k.data(), 1, 3, 3, 1, 0, false, oh, ow);
    CHECK(out.data() == expect);
  }
  SUBCASE("randomized dims <= 8, strides and padding, both modes") {
    for (int trial = 0; trial < 25; ++trial) {
      Rng r = rng.split(trial);
      const int n = 1 + r.uniform_int(2);
      const int c = 1 + r.uniform_int(3);
      const int h = 3 + r.uniform_int(6);
      const int w = 3 + r.uniform_int(6);
      const int kh = 1 + 2 * r.uniform_int(2);
      const int kw = 1 + 2 * r.uniform_int(2);
      const int stride = 1 + r.uniform_int(2);
      const int pad = r.uniform_int(2);
      const bool depthwise = r.bernoulli(0.5);
      const int f = depthwise ? c : 1 + r.uniform_int(4);
      if (h + 2 * pad < kh || w + 2 * pad < kw) continue;
      Tensor img = randn({n, c, h, w}, 1.0, r);
      Tensor k = depthwise ? randn({c, 1, kh, kw}, 1.0, r) : randn({f, c, kh, kw}, 1.0, r);
      Tape tape;
      Tensor out = conv2d(tape, img, k, stride, pad, depthwise);
      int oh = 0, ow = 0;
      const std::vector<double> expect = leafnet::testing::naive_conv2d(
          img.data(), n, c, h, w, k.data(), f, kh, kw, stride, pad, depthwise, oh, ow);
      REQUIRE(out.shape() == Shape{n, f, oh, ow});
      CHECK(out.data() == expect);
    }
  }
}

TEST_CASE("conv2d error contracts") {
  Tape tape;
  Tensor img = Tensor::full({1, 2, 4, 4}, 1.0);
  Tensor k = Tensor::full({3, 2, 3, 3}, 1.0);
  CHECK_THROWS_AS(conv2d(tape, img, k, 0, 1, false), InvalidStride);
  Tensor wrong_c = Tensor::full({3, 4, 3, 3}, 1.0);
  CHECK_THROWS_AS(conv2d(tape, img, wrong_c, 1, 1, false), ShapeMismatch);
  // depthwise needs F == C and per-channel kernels
  Tensor dw_bad = Tensor::full({3, 1, 3, 3}, 1.0);
  CHECK_THROWS_AS(conv2d(tape, img, dw_bad, 1, 1, true), ShapeMismatch);
  Tensor huge = Tensor::full({1, 2, 9, 9}, 1.0);
  CHECK_THROWS_AS(conv2d(tape, img, huge, 1, 0, false), ShapeMismatch);
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(17);
  Tensor img = randn({2, 2, 5, 5}, 1.0, rng);
  Tensor k = randn({3, 2, 3, 3}, 0.5, rng);
  const double err_in = grad_check(
      [&](Tape& t, const Tensor& x) { return sum(t, conv2d(t, x, k, 2, 1, false)); }, img, 1e-5);
  CHECK(err_in < 1e-6);
  const double err_k = grad_check(
      [&](Tape& t, const Tensor& x) { return sum(t, conv2d(t, img, x, 2, 1, false)); }, k, 1e-5);
  CHECK(err_k < 1e-6);

  Tensor dwk = randn({2, 1, 3, 3}, 0.5, rng);
  const double err_dw = grad_check(
      [&](Tape& t, const Tensor& x) { return sum(t, conv2d(t, img, x, 1, 1, true)); }, dwk, 1e-5);
  CHECK(err_dw < 1e-6);
}

TEST_CASE("activations") {
  Tape tape;
  Tensor x = Tensor::from({3}, {-1, 0, 2});
  CHECK(activation(tape, Activation::Relu, x).data() == std::vector<double>{0, 0, 2});

  Tensor zero = Tensor::from({1}, {0});
  CHECK(activation(tape, Activation::Sigmoid, zero).item() == 0.5);

  // swish(x) = x * sigmoid(x)
  Tensor one = Tensor::from({1}, {1});
  CHECK(activation(tape, Activation::Swish, one).item() ==
        doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));

  const double err = grad_check(
      [&](Tape& t, const Tensor& v) { return sum(t, activation(t, Activation::Swish, v)); }, one,
      1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("pooling") {
  Tape tape;
  SUBCASE("global average of a constant channel") {
    Tensor x = Tensor::full({1, 1, 3, 5}, 7.0);
    Tensor out = pool(tape, PoolKind::GlobalAvg, x);
    CHECK(out.shape() == Shape{1, 1, 1, 1});
    CHECK(out.item() == doctest::Approx(7.0).epsilon(1e-15));
  }
  SUBCASE("max2x2 definition") {
    Tensor x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
    CHECK(pool(tape, PoolKind::Max2x2, x).data() == std::vector<double>{4});
  }
  SUBCASE("max2x2 rejects odd dims") {
    Tensor x = Tensor::full({1, 1, 3, 4}, 0.0);
    CHECK_THROWS_AS(pool(tape, PoolKind::Max2x2, x), ShapeMismatch);
  }
  SUBCASE("global average backward distributes 1/(H*W)") {
    Rng rng(3);
    Tensor x = randn({2, 3, 4, 4}, 1.0, rng);
    const double err = grad_check(
        [&](Tape& t, const Tensor& v) { return sum(t, pool(t, PoolKind::GlobalAvg, v)); }, x, 1e-5);
    CHECK(err < 1e-8);
  }
  SUBCASE("max2x2 backward") {
    Rng rng(4);
    Tensor x = randn({1, 2, 4, 4}, 1.0, rng);
    const double err = grad_check(
        [&](Tape& t, const Tensor& v) { return sum(t, pool(t, PoolKind::Max2x2, v)); }, x, 1e-6);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("softmax values and stability") {
  Tape tape;
  Tensor flat = Tensor::from({1, 4}, {0, 0, 0, 0});
  Tensor uniform = softmax(tape, flat);
  for (double v : uniform.data()) CHECK(v == 0.25);

  Tensor extreme = Tensor::from({1, 2}, {1000, 0});
  Tensor out = softmax(tape, extreme);
  CHECK(out.data()[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(out.data()[1] < 1e-300);
  CHECK(out.all_finite());
}

TEST_CASE("softmax rows sum to 1 within 1e-12 for |x| <= 1e4") {
  Rng rng(23);
  Tape tape;
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = Tensor::zeros({4, 6});
    for (double& v : x.data()) v = rng.uniform(-1e4, 1e4);
    Tensor y = softmax(tape, x);
    for (int i = 0; i < 4; ++i) {
      double s = 0.0;
      for (int j = 0; j < 6; ++j) s += y.data()[i * 6 + j];
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("softmax gradient vs finite differences on random 1x4 input") {
  Rng rng(29);
  Tensor x = randn({1, 4}, 2.0, rng);
  Tensor w = randn({1, 4}, 1.0, rng);  // random linear functional of the output
  const double err = grad_check(
      [&](Tape& t, const Tensor& v) { return sum(t, mul(t, softmax(t, v), w)); }, x, 1e-5);
  CHECK(err < 1e-5);
}

TEST_CASE("log_softmax gradient and agreement with log(softmax)") {
  Rng rng(31);
  Tensor x = randn({3, 4}, 3.0, rng);
  Tape tape;
  Tensor a = log_softmax(tape, x);
  Tensor b = log_clamped(tape, softmax(tape, x), 1e-300);
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-12));
  }
  Tensor w = randn({3, 4}, 1.0, rng);
  const double err = grad_check(
      [&](Tape& t, const Tensor& v) { return sum(t, mul(t, log_softmax(t, v), w)); }, x, 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("backward basics") {
  SUBCASE("loss = sum(x) gives all-ones gradient") {
    Tape tape;
    Tensor x = Tensor::from({3}, {5, -1, 2}, true);
    tape.backward(sum(tape, x));
    CHECK(x.grad() == std::vector<double>{1, 1, 1});
  }
  SUBCASE("loss = sum(x*x) gives 2x") {
    Tape tape;
    Tensor x = Tensor::from({3}, {1, 2, 3}, true);
    tape.backward(sum(tape, mul(tape, x, x)));
    CHECK(x.grad() == std::vector<double>{2, 4, 6});
  }
  SUBCASE("fan-out accumulates, never overwrites") {
    Tape tape;
    Tensor x = Tensor::from({3}, {1, 2, 3}, true);
    tape.backward(sum(tape, add(tape, x, x)));
    CHECK(x.grad() == std::vector<double>{2, 2, 2});
  }
  SUBCASE("NotScalar on vector loss") {
    Tape tape;
    Tensor x = Tensor::from({2}, {1, 2}, true);
    Tensor y = add(tape, x, x);
    CHECK_THROWS_AS(tape.backward(y), NotScalar);
  }
}

TEST_CASE("3-layer composite gradient matches finite differences") {
  Rng rng(37);
  Tensor w1 = randn({5, 8}, 0.6, rng);
  Tensor w2 = randn({8, 8}, 0.6, rng);
  Tensor w3 = randn({8, 4}, 0.6, rng);
  Tensor x = randn({2, 5}, 1.0, rng);
  Tensor target = Tensor::from({2, 4}, {1, 0, 0, 0, 0, 0, 1, 0});
  auto f = [&](Tape& t, const Tensor& input) {
    Tensor h1 = activation(t, Activation::Swish, matmul(t, input, w1));
    Tensor h2 = activation(t, Activation::Relu, matmul(t, h1, w2));
    Tensor logits = matmul(t, h2, w3);
    return scale(t, sum(t, mul(t, log_softmax(t, logits), target)), -0.5);
  };
  CHECK(grad_check(f, x, 1e-5) < 1e-4);
}

TEST_CASE("grad_check contract") {
  SUBCASE("f = sum is exactly linear") {
    Tensor x = Tensor::from({4}, {0.5, -2, 3, 1});
    CHECK(grad_check([](Tape& t, const Tensor& v) { return sum(t, v); }, x, 1e-5) < 1e-10);
  }
  SUBCASE("f = sum(x^2) at [1,2,3] with step 1e-5") {
    Tensor x = Tensor::from({3}, {1, 2, 3});
    CHECK(grad_check([](Tape& t, const Tensor& v) { return sum(t, mul(t, v, v)); }, x, 1e-5) <
          1e-8);
  }
  SUBCASE("f = cross_entropy(softmax) on random logits") {
    Rng rng(41);
    Tensor x = randn({1, 4}, 2.0, rng);
    Tensor p = Tensor::from({1, 4}, {0.1, 0.2, 0.3, 0.4});
    auto f = [&](Tape& t, const Tensor& v) {
      return scale(t, sum(t, mul(t, log_softmax(t, v), p)), -1.0);
    };
    CHECK(grad_check(f, x, 1e-5) < 1e-4);
  }
  SUBCASE("NonFinite when f produces NaN") {
    Tensor x = Tensor::from({1}, {-1.0});
    auto f = [](Tape& t, const Tensor& v) {
      Tensor y = Tensor::from({1}, {std::nan("")});
      return mul(t, v, y);
    };
    CHECK_THROWS_AS(grad_check(f, x, 1e-5), NonFinite);
  }
}

TEST_CASE("every differentiable op passes grad_check over 10 seeds") {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(1000 + seed);
    Tensor x22 = randn({2, 2}, 1.0, rng);
    Tensor y22 = randn({2, 2}, 1.0, rng);
    Tensor nchw = randn({2, 3, 4, 4}, 1.0, rng);
    Tensor gates = randn({2, 3}, 1.0, rng);
    Tensor cbias = randn({3}, 1.0, rng);

    auto check = [&](const char* name, auto f, const Tensor& at, double tol = 1e-4) {
      const double err = grad_check(f, at, 1e-5);
      INFO(name);
      CHECK(err < tol);
    };

    check("add", [&](Tape& t, const Tensor& v) { return sum(t, add(t, v, y22)); }, x22);
    check("sub", [&](Tape& t, const Tensor& v) { return sum(t, sub(t, y22, v)); }, x22);
    check("mul", [&](Tape& t, const Tensor& v) { return sum(t, mul(t, v, y22)); }, x22);
    check("matmul", [&](Tape& t, const Tensor& v) { return sum(t, matmul(t, v, y22)); }, x22);
    check("sigmoid",
          [&](Tape& t, const Tensor& v) { return sum(t, activation(t, Activation::Sigmoid, v)); },
          nchw);
    check("swish",
          [&](Tape& t, const Tensor& v) { return sum(t, activation(t, Activation::Swish, v)); },
          nchw);
    check("global_avg",
          [&](Tape& t, const Tensor& v) { return sum(t, pool(t, PoolKind::GlobalAvg, v)); }, nchw);
    check("max2x2",
          [&](Tape& t, const Tensor& v) { return sum(t, pool(t, PoolKind::Max2x2, v)); }, nchw);
    check("softmax",
          [&](Tape& t, const Tensor& v) { return sum(t, mul(t, softmax(t, v), y22)); }, x22);
    check("log_softmax",
          [&](Tape& t, const Tensor& v) { return sum(t, mul(t, log_softmax(t, v), y22)); }, x22);
    check("reshape",
          [&](Tape& t, const Tensor& v) { return sum(t, mul(t, reshape(t, v, {4}), reshape(t, y22, {4}))); },
          x22);
    check("scale", [&](Tape& t, const Tensor& v) { return scale(t, sum(t, v), -2.5); }, nchw);
    check("mean", [&](Tape& t, const Tensor& v) { return mean(t, v); }, nchw);
    check("scale_channels (x)",
          [&](Tape& t, const Tensor& v) { return sum(t, scale_channels(t, v, gates)); }, nchw);
    check("scale_channels (gates)",
          [&](Tape& t, const Tensor& v) { return sum(t, scale_channels(t, nchw, v)); }, gates);
    check("add_channel_bias (bias)",
          [&](Tape& t, const Tensor& v) { return sum(t, add_channel_bias(t, nchw, v)); }, cbias);
    // relu needs inputs away from the kink
    Tensor away = Tensor::zeros({3, 3});
    for (double& v : away.data()) v = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.2, 2.0);
    check("relu",
          [&](Tape& t, const Tensor& v) { return sum(t, activation(t, Activation::Relu, v)); },
          away);
  }
}

TEST_CASE("eval-mode tapes record nothing") {
  Tape tape;
  tape.set_recording(false);
  Tensor a = Tensor::from({2}, {1, 2}, true);
  Tensor b = add(tape, a, a);
  CHECK(tape.size() == 0);
  CHECK_FALSE(b.requires_grad());
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ShapeMismatch);
  CHECK_THROWS_AS(Tensor::zeros({0, 2}), ShapeMismatch);
  CHECK_THROWS_AS(Tensor::from({2}, {1, 2}).item(), NotScalar);
}

TEST_SUITE_END();
