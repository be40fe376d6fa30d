// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "leafnet/ensemble.hpp"
#include "leafnet/dataset.hpp"

using namespace leafnet;

namespace {

ModelSpec micro_spec(int resolution = 8) {
  ModelSpec spec;
  spec.stem_channels = 4;
  BlockConfig b;
  b.in_channels = 4;
  b.out_channels = 4;
  b.expansion_ratio = 2.0;
  b.se_ratio = 0.5;
  spec.blocks = {b};
  spec.input_resolution = resolution;
  return spec;
}

AugmentConfig quiet_aug() {
  AugmentConfig aug;
  aug.p_hflip = aug.p_vflip = aug.p_ssr = aug.p_oneof_filter = aug.p_piecewise = 0.0;
  return aug;
}

std::vector<Image> sample_batch(int n, int size, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.count = n;
  cfg.size = size;
  cfg.seed = seed;
  return make_synthetic_set(cfg).images;
}

/// Zeroes every weight and pins the head bias, so softmax output is a
/// constant row decided by the bias logits.
Model constant_model(const ModelSpec& spec, const std::array<double, 4>& logits) {
  Rng rng(0);
  Model m = build_model(spec, rng);
  for (Tensor& p : m.parameters()) {
    for (double& v : p.data()) v = 0.0;
  }
  for (int j = 0; j < 4; ++j) m.head.bias.data()[j] = logits[j];
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("ensemble");

TEST_CASE("validation") {
  Ensemble empty;
  CHECK_THROWS_AS(empty.validate(), EmptyEnsemble);

  Rng rng(1);
  Model a = build_model(micro_spec(), rng);
  ModelSpec five = micro_spec();
  five.num_classes = 5;
  Model b = build_model(five, rng);
  Ensemble mixed{{&a, &b}, {}};
  CHECK_THROWS_AS(mixed.validate(), ClassCountMismatch);

  Ensemble bad_weights{{&a}, {0.7}};
  CHECK_THROWS_AS(bad_weights.validate(), Error);
}

TEST_CASE("singleton ensembles are exactly the member") {
  Rng rng(2);
  Model m = build_model(micro_spec(), rng);
  const std::vector<Image> batch = sample_batch(6, 8, 3);
  const AugmentConfig aug = quiet_aug();
  const PredictionMatrix solo = ensemble_predict(Ensemble{{&m}, {}}, batch, aug);
  const PredictionMatrix direct = predict_probabilities(m, batch, aug);
  CHECK(solo.values == direct.values);
}

TEST_CASE("duplicated members change nothing") {
  Rng rng(4);
  Model m = build_model(micro_spec(), rng);
  const std::vector<Image> batch = sample_batch(5, 8, 5);
  const AugmentConfig aug = quiet_aug();
  const PredictionMatrix twice = ensemble_predict(Ensemble{{&m, &m}, {}}, batch, aug);
  const PredictionMatrix direct = predict_probabilities(m, batch, aug);
  REQUIRE(twice.values.size() == direct.values.size());
  for (std::size_t i = 0; i < twice.values.size(); ++i) {
    CHECK(twice.values[i] == doctest::Approx(direct.values[i]).epsilon(1e-15));
  }
}

TEST_CASE("uniform mean of one-hot voters") {
  const Model a = constant_model(micro_spec(), {60, 0, 0, 0});
  const Model b = constant_model(micro_spec(), {0, 60, 0, 0});
  const std::vector<Image> batch = sample_batch(3, 8, 6);
  const PredictionMatrix preds = ensemble_predict(Ensemble{{&a, &b}, {}}, batch, quiet_aug());
  for (int i = 0; i < preds.rows; ++i) {
    CHECK(preds.values[i * 4 + 0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(preds.values[i * 4 + 1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(preds.values[i * 4 + 2] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(preds.values[i * 4 + 3] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("rows remain normalized and member order is irrelevant") {
  Rng rng(7);
  Model a = build_model(micro_spec(), rng);
  Model b = build_model(micro_spec(), rng);
  Model c = build_model(micro_spec(), rng);
  const std::vector<Image> batch = sample_batch(8, 8, 8);
  const AugmentConfig aug = quiet_aug();

  const PredictionMatrix abc = ensemble_predict(Ensemble{{&a, &b, &c}, {}}, batch, aug);
  const PredictionMatrix cab = ensemble_predict(Ensemble{{&c, &a, &b}, {}}, batch, aug);
  REQUIRE(abc.values.size() == cab.values.size());
  for (std::size_t i = 0; i < abc.values.size(); ++i) {
    CHECK(std::abs(abc.values[i] - cab.values[i]) <= 1e-12);
  }
  for (int i = 0; i < abc.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < kNumClasses; ++j) s += abc.values[static_cast<std::size_t>(i) * 4 + j];
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("members may run at different resolutions") {
  Rng rng(9);
  Model small = build_model(micro_spec(8), rng);
  Model large = build_model(micro_spec(12), rng);
  const std::vector<Image> batch = sample_batch(4, 10, 10);
  const PredictionMatrix preds =
      ensemble_predict(Ensemble{{&small, &large}, {0.25, 0.75}}, batch, quiet_aug());
  CHECK(preds.rows == 4);
  for (double v : preds.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_SUITE_END();
