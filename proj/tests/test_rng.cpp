// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "leafnet/rng.hpp"

using namespace leafnet;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed, same sequence") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  for (int i = 0; i < 100; ++i) CHECK(a.uniform_int(10) == b.uniform_int(10));
}

TEST_CASE("splits are independent of parent draws") {
  Rng parent(7);
  Rng child_before = parent.split(3);
  parent.uniform();
  parent.uniform();
  Rng child_after = parent.split(3);
  CHECK(child_before.uniform() == child_after.uniform());
  CHECK(parent.split(3).seed() != parent.split(4).seed());
}

TEST_CASE("uniform stays in [0,1) and has a sane mean") {
  Rng rng(11);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("normal moments") {
  Rng rng(13);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("uniform_int bounds and frequencies") {
  Rng rng(17);
  int counts[5] = {0, 0, 0, 0, 0};
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const int k = rng.uniform_int(5);
    REQUIRE(k >= 0);
    REQUIRE(k < 5);
    ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(static_cast<double>(c) / n - 0.2) < 0.01);
  CHECK_THROWS_AS(rng.uniform_int(0), Error);
}

TEST_CASE("state round-trips through text") {
  Rng rng(23);
  for (int i = 0; i < 37; ++i) rng.uniform();
  rng.normal();
  const Rng restored = Rng::from_state(rng.state_string());
  CHECK(restored == rng);
  Rng a = restored, b = rng;
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
  CHECK_THROWS_AS(Rng::from_state("garbage"), Error);
}

TEST_CASE("draw counter tracks raw engine draws") {
  Rng rng(29);
  CHECK(rng.draws() == 0);
  rng.uniform();
  CHECK(rng.draws() == 1);
  rng.normal();  // two uniforms
  CHECK(rng.draws() == 3);
}

TEST_SUITE_END();
