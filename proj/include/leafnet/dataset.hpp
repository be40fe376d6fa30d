// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset containers, CSV/label ingestion, stratified splitting and the
// synthetic 4-class dataset generator used by the desk-scale experiments.

#ifndef LEAFNET_DATASET_HPP_
#define LEAFNET_DATASET_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "leafnet/image.hpp"
#include "leafnet/metrics.hpp"
#include "leafnet/rng.hpp"

namespace leafnet {

enum class Origin : std::uint8_t { Real = 0, Pseudo = 1 };

struct LabeledSet {
  std::vector<Image> images;
  LabelMatrix labels;
  std::vector<std::string> ids;
  std::vector<Origin> origin;  // parallel to images

  std::size_t size() const { return images.size(); }
};

struct UnlabeledSet {
  std::vector<Image> images;
  std::vector<std::string> ids;

  std::size_t size() const { return images.size(); }
};

struct PseudoLabeledSet {
  std::vector<Image> images;
  LabelMatrix soft_labels;
  std::vector<double> confidences;  // per-row max probability
  std::vector<std::string> ids;

  std::size_t size() const { return images.size(); }
};

struct DatasetManifest {
  std::string labels_csv;
  std::string images_dir;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
};

/// Header must be exactly `image_id,healthy,multiple_diseases,rust,scab`;
/// every image_id must resolve to <images_dir>/<id>.ppm or .png.  Rows are
/// returned in CSV order.  Throws MalformedCsv (naming the line) and
/// MissingImage (naming the id).
LabeledSet load_labeled(const DatasetManifest& manifest);

/// All .ppm/.png files in a directory, sorted by filename.
UnlabeledSet load_unlabeled_dir(const std::string& dir);

LabeledSet subset(const LabeledSet& set, const std::vector<int>& indices);

/// Stratified split by argmax label; deterministic in the seed.  Returns
/// (train, val) with round(fraction * count) examples per class in train.
std::pair<LabeledSet, LabeledSet> split_stratified(const LabeledSet& set, double fraction,
                                                   std::uint64_t seed);

/// Synthetic leaf-disease dataset: green leaf-like backgrounds where class
/// decides the overlay -- healthy none, rust bright round spots, scab dark
/// streaks, multiple_diseases both.  Faint nuisance blotches and Gaussian
/// pixel noise keep the task non-trivial.
struct SyntheticConfig {
  int count = 1000;
  int size = 32;
  double noise = 0.06;     // pixel noise std
  double contrast = 0.5;   // overlay blend strength in (0,1]
  int unlabeled_count = 0;
  std::uint64_t seed = 0;
};

Image synthetic_image(int class_index, const SyntheticConfig& cfg, Rng& rng);

/// Balanced over the 4 classes (round-robin); per-image rng streams derived
/// from (seed, index) so generation order never matters.
LabeledSet make_synthetic_set(const SyntheticConfig& cfg);

/// Writes <out_dir>/images/*.ppm, <out_dir>/labels.csv and, when
/// unlabeled_count > 0, <out_dir>/unlabeled/*.ppm.
void write_synthetic_dataset(const SyntheticConfig& cfg, const std::string& out_dir);

}  // namespace leafnet

#endif  // LEAFNET_DATASET_HPP_
