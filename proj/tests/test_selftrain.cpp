// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "leafnet/selftrain.hpp"

using namespace leafnet;

namespace {

ModelSpec micro_spec() {
  ModelSpec spec;
  spec.stem_channels = 4;
  BlockConfig b;
  b.in_channels = 4;
  b.out_channels = 4;
  b.expansion_ratio = 2.0;
  b.se_ratio = 0.5;
  b.survival_prob = 1.0;
  spec.blocks = {b};
  spec.input_resolution = 8;
  return spec;
}

AugmentConfig quiet_aug() {
  AugmentConfig aug;
  aug.p_hflip = aug.p_vflip = aug.p_ssr = aug.p_oneof_filter = aug.p_piecewise = 0.0;
  aug.channel_mean = {0.5, 0.5, 0.5};
  aug.channel_std = {0.5, 0.5, 0.5};
  return aug;
}

LabeledSet tiny_synthetic(int count, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.count = count;
  cfg.size = 8;
  cfg.noise = 0.02;
  cfg.contrast = 0.9;
  cfg.seed = seed;
  return make_synthetic_set(cfg);
}

UnlabeledSet strip_labels(const LabeledSet& set) {
  UnlabeledSet out;
  out.images = set.images;
  out.ids = set.ids;
  return out;
}

PseudoLabeledSet fake_pseudo(std::vector<double> confidences) {
  PseudoLabeledSet ps;
  ps.soft_labels.rows = static_cast<int>(confidences.size());
  for (double c : confidences) {
    ps.images.push_back(Image::filled(2, 2, 0.5));
    ps.ids.push_back("p" + std::to_string(ps.confidences.size()));
    ps.confidences.push_back(c);
    const double rest = (1.0 - c) / 3.0;
    ps.soft_labels.values.insert(ps.soft_labels.values.end(), {c, rest, rest, rest});
  }
  return ps;
}

}  // namespace

TEST_SUITE_BEGIN("selftrain");

TEST_CASE("pseudo_label") {
  const ModelSpec spec = micro_spec();
  Rng init(1);
  Model teacher = build_model(spec, init);
  const LabeledSet data = tiny_synthetic(8, 3);
  const UnlabeledSet pool = strip_labels(data);
  const AugmentConfig aug = quiet_aug();

  SUBCASE("soft labels equal the teacher's Eval outputs bit for bit") {
    const PseudoLabeledSet ps = pseudo_label(teacher, pool, LabelMode::Soft, aug);
    const PredictionMatrix direct = predict_probabilities(teacher, pool.images, aug);
    CHECK(ps.soft_labels.values == direct.values);
    for (int i = 0; i < ps.soft_labels.rows; ++i) {
      double mx = 0.0;
      for (int j = 0; j < kNumClasses; ++j) {
        mx = std::max(mx, ps.soft_labels.values[static_cast<std::size_t>(i) * kNumClasses + j]);
      }
      CHECK(ps.confidences[i] == mx);
    }
  }
  SUBCASE("hard mode one-hots the argmax") {
    const PseudoLabeledSet soft = pseudo_label(teacher, pool, LabelMode::Soft, aug);
    const PseudoLabeledSet hard = pseudo_label(teacher, pool, LabelMode::Hard, aug);
    for (int i = 0; i < hard.soft_labels.rows; ++i) {
      int argmax = 0;
      double ones = 0.0;
      for (int j = 0; j < kNumClasses; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * kNumClasses + j;
        if (soft.soft_labels.values[k] >
            soft.soft_labels.values[static_cast<std::size_t>(i) * kNumClasses + argmax]) {
          argmax = j;
        }
        ones += hard.soft_labels.values[k];
      }
      CHECK(ones == 1.0);
      CHECK(hard.soft_labels.values[static_cast<std::size_t>(i) * kNumClasses + argmax] == 1.0);
      // confidences still record the soft maximum
      CHECK(hard.confidences[i] == soft.confidences[i]);
    }
  }
  SUBCASE("a uniform teacher yields uniform soft labels with confidence 0.25") {
    Model uniform = teacher;
    for (Tensor& p : uniform.parameters()) {
      for (double& v : p.data()) v = 0.0;
    }
    const PseudoLabeledSet ps = pseudo_label(uniform, pool, LabelMode::Soft, aug);
    for (double v : ps.soft_labels.values) CHECK(v == 0.25);
    for (double c : ps.confidences) CHECK(c == 0.25);
  }
  SUBCASE("pseudo-labeling never mutates the teacher") {
    const auto before = snapshot_weights(teacher);
    teacher.noise_draws = 0;
    (void)pseudo_label(teacher, pool, LabelMode::Soft, aug);
    CHECK(snapshot_weights(teacher) == before);
    CHECK(teacher.noise_draws == 0);  // Eval path takes no stochastic draws
  }
  SUBCASE("empty pool throws") {
    CHECK_THROWS_AS(pseudo_label(teacher, UnlabeledSet{}, LabelMode::Soft, aug),
                    EmptyUnlabeledSet);
  }
}

TEST_CASE("filter_pseudo") {
  SUBCASE("threshold 0 is the identity") {
    const PseudoLabeledSet ps = fake_pseudo({0.9, 0.4, 0.7});
    const PseudoLabeledSet kept = filter_pseudo(ps, 0.0);
    CHECK(kept.size() == 3);
    CHECK(kept.confidences == ps.confidences);
  }
  SUBCASE("uniform-confidence rows all drop below 0.6") {
    const PseudoLabeledSet kept = filter_pseudo(fake_pseudo({0.25, 0.25, 0.25}), 0.6);
    CHECK(kept.size() == 0);
  }
  SUBCASE("mixed confidences keep qualifying rows in order") {
    const PseudoLabeledSet kept = filter_pseudo(fake_pseudo({0.9, 0.5, 0.7}), 0.6);
    REQUIRE(kept.size() == 2);
    CHECK(kept.confidences[0] == 0.9);
    CHECK(kept.confidences[1] == 0.7);
    CHECK(kept.ids[0] == "p0");
    CHECK(kept.ids[1] == "p2");
  }
}

TEST_CASE("combine") {
  const LabeledSet labeled = tiny_synthetic(10, 6);
  SUBCASE("empty pseudo set returns the original") {
    const LabeledSet out = combine(labeled, PseudoLabeledSet{});
    CHECK(out.size() == labeled.size());
    CHECK(out.labels.values == labeled.labels.values);
  }
  SUBCASE("sizes add and origin tags are bookkept") {
    const LabeledSet out = combine(labeled, fake_pseudo({0.8, 0.6, 0.9, 0.7, 0.5}));
    CHECK(out.size() == 15);
    int real = 0, pseudo = 0;
    for (Origin o : out.origin) (o == Origin::Real ? real : pseudo) += 1;
    CHECK(real == 10);
    CHECK(pseudo == 5);
  }
  SUBCASE("soft pseudo rows keep the rows-sum-to-1 invariant") {
    const LabeledSet out = combine(labeled, fake_pseudo({0.6, 0.85}));
    CHECK_NOTHROW(out.labels.validate());
  }
}

TEST_CASE("grow_student") {
  const ModelSpec teacher = micro_spec();
  SUBCASE("no growth keeps the spec") {
    CHECK(grow_student(teacher, {1, 1, 1}) == teacher);
  }
  SUBCASE("depth growth doubles per-stage blocks") {
    const ModelSpec grown = grow_student(teacher, {2, 1, 1});
    CHECK(grown.blocks.size() == 2);
  }
  SUBCASE("compound growth increases the parameter count") {
    const ModelSpec grown = grow_student(teacher, {1.44, 1.21, 1.3225});
    CHECK(parameter_count(grown) > parameter_count(teacher));
  }
  SUBCASE("shrinkage is rejected") {
    CHECK_THROWS_AS(grow_student(teacher, {0.5, 1, 1}), InvalidSpec);
  }
}

TEST_CASE("noisy_student_loop") {
  const LabeledSet labeled = tiny_synthetic(16, 10);
  const UnlabeledSet pool = strip_labels(tiny_synthetic(8, 11));
  const AugmentConfig aug = quiet_aug();

  SelfTrainConfig cfg;
  cfg.iterations = 2;
  cfg.student_growth = {ScaledDims{1, 1, 1}};
  cfg.noise.dropout_prob = 0.2;
  cfg.noise.survival_prob = 0.7;
  cfg.train_cfg.epochs = 2;
  cfg.train_cfg.seed = 3;

  SUBCASE("iterations = 0 trains the teacher only") {
    SelfTrainConfig solo = cfg;
    solo.iterations = 0;
    Rng rng(12);
    const SelfTrainResult r = noisy_student_loop(labeled, pool, micro_spec(), solo, aug, rng);
    CHECK(r.reports.size() == 1);
    CHECK(r.reports[0].iteration == 0);
    CHECK(r.reports[0].pseudo_total == 0);
  }
  SUBCASE("k iterations produce k+1 models and k pseudo passes") {
    Rng rng(13);
    const SelfTrainResult r = noisy_student_loop(labeled, pool, micro_spec(), cfg, aug, rng);
    REQUIRE(r.reports.size() == 3);
    CHECK(r.reports[1].pseudo_total == 8);
    CHECK(r.reports[2].pseudo_total == 8);
    // noise asymmetry: teacher training takes no stochastic draws, noised
    // student training does
    CHECK(r.reports[0].noise_draws == 0);
    CHECK(r.reports[1].noise_draws > 0);
    CHECK(r.reports[2].noise_draws > 0);
  }
  SUBCASE("confidence filter emptying the pool degrades to supervised training") {
    SelfTrainConfig strict = cfg;
    strict.iterations = 1;
    strict.confidence_threshold = 0.999999;
    Rng rng(14);
    const SelfTrainResult r = noisy_student_loop(labeled, pool, micro_spec(), strict, aug, rng);
    REQUIRE(r.reports.size() == 2);
    CHECK(r.reports[1].pseudo_empty_warning);
    CHECK(r.reports[1].pseudo_kept == 0);
  }
  SUBCASE("iterations without unlabeled data are rejected") {
    Rng rng(15);
    CHECK_THROWS_AS(noisy_student_loop(labeled, UnlabeledSet{}, micro_spec(), cfg, aug, rng),
                    EmptyUnlabeledSet);
  }
  SUBCASE("bad growth list is rejected") {
    SelfTrainConfig bad = cfg;
    bad.student_growth = {ScaledDims{1, 1, 1}, ScaledDims{1, 1, 1}};
    bad.iterations = 3;
    CHECK_THROWS_AS(bad.validate(), InvalidSpec);
  }
}

TEST_SUITE_END();
