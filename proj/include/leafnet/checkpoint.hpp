// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Versioned, checksummed binary checkpoints.  Layout:
//   "LFCK" | u32 version | u64 header_len | header JSON |
//   weight payload (f64 little-endian, manifest order) |
//   optimizer payload (optional) | u32 CRC-32 of everything before it.
// Round-trips are bit-exact: load(save(c)) reproduces every weight bit and
// the rng state.

#ifndef LEAFNET_CHECKPOINT_HPP_
#define LEAFNET_CHECKPOINT_HPP_

#include <optional>
#include <string>
#include <vector>

#include "leafnet/nn.hpp"
#include "leafnet/optim.hpp"
#include "leafnet/rng.hpp"

namespace leafnet {

inline constexpr int kCheckpointVersion = 1;

struct OptimizerSnapshot {
  OptimizerKind kind = OptimizerKind::Adam;
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> buf_a;  // adam m / sgd velocity
  std::vector<std::vector<double>> buf_b;  // adam v (empty for sgd)
};

struct Checkpoint {
  int format_version = kCheckpointVersion;
  ModelSpec spec;
  std::vector<std::vector<double>> weights;  // named_parameters order
  std::optional<OptimizerSnapshot> optimizer;
  TrainConfig train_cfg;  // training-config echo
  std::string rng_state;
};

Checkpoint make_checkpoint(const Model& model, const TrainConfig& cfg, const Rng& rng);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Throws ChecksumMismatch on any corrupted byte, VersionUnsupported for
/// unknown versions or foreign files, Truncated when data ends early.
Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds the model and restores its weights.
Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace leafnet

#endif  // LEAFNET_CHECKPOINT_HPP_
