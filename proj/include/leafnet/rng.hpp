// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFNET_RNG_HPP_
#define LEAFNET_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "leafnet/errors.hpp"

namespace leafnet {

/// SplitMix64 finalizer, used to derive child stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic pseudo-random stream.
///
/// The raw generator is std::mt19937_64, whose output sequence is fixed by
/// the standard, and every distribution here is hand-rolled on top of it so
/// the same seed yields the same draw sequence on every platform.  Streams
/// are splittable: `split(k)` derives an independent child stream from
/// (seed, k) without consuming draws from the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Lemire multiply-shift; n must be >= 1.
  int uniform_int(int n) {
    if (n < 1) throw Error("uniform_int: n must be >= 1");
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) * static_cast<std::uint64_t>(n);
    return static_cast<int>(wide >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (two uniform draws per call, no caching).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Independent child stream derived from (seed, stream index).
  /// Does not consume draws from this stream.
  Rng split(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x51AFDE6BD57DE663ULL)));
  }

  /// Serializes seed, raw engine state and draw count (text, whitespace
  /// separated; the mt19937_64 textual format is standard-specified).
  std::string state_string() const {
    std::ostringstream os;
    os << seed_ << ' ' << draws_ << ' ' << engine_;
    return os.str();
  }

  static Rng from_state(const std::string& state) {
    std::istringstream is(state);
    std::uint64_t seed = 0;
    std::uint64_t draws = 0;
    if (!(is >> seed >> draws)) throw Error("Rng::from_state: malformed state string");
    Rng rng(seed);
    if (!(is >> rng.engine_)) throw Error("Rng::from_state: malformed engine state");
    rng.draws_ = draws;
    return rng;
  }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.seed_ == b.seed_ && a.draws_ == b.draws_ && a.engine_ == b.engine_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace leafnet

#endif  // LEAFNET_RNG_HPP_
