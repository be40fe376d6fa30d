// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "leafnet/imageio.hpp"

namespace leafnet {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCsvHeader = "image_id,healthy,multiple_diseases,rust,scab";

std::string find_image_file(const std::string& images_dir, const std::string& id) {
  for (const char* ext : {".ppm", ".png"}) {
    const fs::path candidate = fs::path(images_dir) / (id + ext);
    if (fs::exists(candidate)) return candidate.string();
  }
  throw MissingImage("no image file for id '" + id + "' under " + images_dir);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

LabeledSet load_labeled(const DatasetManifest& manifest) {
  std::ifstream in(manifest.labels_csv);
  if (!in) throw IoError("cannot open labels csv: " + manifest.labels_csv);

  std::string line;
  if (!std::getline(in, line)) throw MalformedCsv("empty labels csv: " + manifest.labels_csv);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw MalformedCsv("line 1: expected header '" + std::string(kCsvHeader) + "', got '" + line +
                       "'");
  }

  LabeledSet set;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 1 + kNumClasses) {
      throw MalformedCsv("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                         std::to_string(fields.size()));
    }
    const std::string& id = fields[0];
    double row_sum = 0.0;
    std::array<double, kNumClasses> row{};
    for (int j = 0; j < kNumClasses; ++j) {
      std::size_t consumed = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[j + 1], &consumed);
      } catch (const std::exception&) {
        throw MalformedCsv("line " + std::to_string(line_no) + ": bad label value '" +
                           fields[j + 1] + "'");
      }
      if (consumed != fields[j + 1].size() || !(v >= 0.0 && v <= 1.0)) {
        throw MalformedCsv("line " + std::to_string(line_no) + ": label value '" + fields[j + 1] +
                           "' outside [0,1]");
      }
      row[j] = v;
      row_sum += v;
    }
    if (std::abs(row_sum - 1.0) > 1e-6) {
      throw MalformedCsv("line " + std::to_string(line_no) + ": labels sum to " +
                         std::to_string(row_sum) + " (no single class assigned)");
    }
    set.images.push_back(read_image(find_image_file(manifest.images_dir, id)));
    set.ids.push_back(id);
    set.origin.push_back(Origin::Real);
    for (double v : row) set.labels.values.push_back(v);
    ++set.labels.rows;
  }
  set.labels.validate();
  return set;
}

UnlabeledSet load_unlabeled_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".png") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  UnlabeledSet set;
  for (const std::string& f : files) {
    set.images.push_back(read_image(f));
    set.ids.push_back(fs::path(f).stem().string());
  }
  return set;
}

LabeledSet subset(const LabeledSet& set, const std::vector<int>& indices) {
  LabeledSet out;
  for (int i : indices) {
    out.images.push_back(set.images[i]);
    out.ids.push_back(set.ids[i]);
    out.origin.push_back(set.origin[i]);
    for (int j = 0; j < kNumClasses; ++j) {
      out.labels.values.push_back(set.labels.values[static_cast<std::size_t>(i) * kNumClasses + j]);
    }
    ++out.labels.rows;
  }
  return out;
}

std::pair<LabeledSet, LabeledSet> split_stratified(const LabeledSet& set, double fraction,
                                                   std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error("split_stratified: fraction must be in [0,1]");
  }
  std::array<std::vector<int>, kNumClasses> by_class;
  for (int i = 0; i < static_cast<int>(set.size()); ++i) {
    int best = 0;
    for (int j = 1; j < kNumClasses; ++j) {
      if (set.labels.values[static_cast<std::size_t>(i) * kNumClasses + j] >
          set.labels.values[static_cast<std::size_t>(i) * kNumClasses + best]) {
        best = j;
      }
    }
    by_class[best].push_back(i);
  }

  std::vector<int> train_idx, val_idx;
  Rng rng(seed);
  for (int cls = 0; cls < kNumClasses; ++cls) {
    std::vector<int>& members = by_class[cls];
    Rng stream = rng.split(cls);
    for (int i = static_cast<int>(members.size()) - 1; i > 0; --i) {
      std::swap(members[i], members[stream.uniform_int(i + 1)]);
    }
    const int take = static_cast<int>(std::lround(fraction * members.size()));
    for (int i = 0; i < static_cast<int>(members.size()); ++i) {
      (i < take ? train_idx : val_idx).push_back(members[i]);
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  return {subset(set, train_idx), subset(set, val_idx)};
}

// ---------------------------------------------------------------------------
// synthetic data

namespace {

struct Rgb {
  double r, g, b;
};

void blend_disc(Image& img, double cx, double cy, double radius, const Rgb& color, double alpha) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (radius * radius);
      const double a = alpha * std::exp(-2.0 * d2);
      if (a < 1e-3) continue;
      img.at(y, x, 0) = (1.0 - a) * img.at(y, x, 0) + a * color.r;
      img.at(y, x, 1) = (1.0 - a) * img.at(y, x, 1) + a * color.g;
      img.at(y, x, 2) = (1.0 - a) * img.at(y, x, 2) + a * color.b;
    }
  }
}

void blend_stripe(Image& img, double px, double py, double angle, double width, const Rgb& color,
                  double alpha) {
  const double nx = -std::sin(angle);
  const double ny = std::cos(angle);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dist = (x - px) * nx + (y - py) * ny;
      const double a = alpha * std::exp(-2.0 * (dist * dist) / (width * width));
      if (a < 1e-3) continue;
      img.at(y, x, 0) = (1.0 - a) * img.at(y, x, 0) + a * color.r;
      img.at(y, x, 1) = (1.0 - a) * img.at(y, x, 1) + a * color.g;
      img.at(y, x, 2) = (1.0 - a) * img.at(y, x, 2) + a * color.b;
    }
  }
}

}  // namespace

Image synthetic_image(int class_index, const SyntheticConfig& cfg, Rng& rng) {
  const int s = cfg.size;
  Image img = Image::filled(s, s, 0.0, 3);

  // Leaf-like background: greenish base with a smooth directional gradient.
  const double g0 = rng.uniform(0.45, 0.72);
  const Rgb base{g0 * rng.uniform(0.40, 0.72), g0, rng.uniform(0.06, 0.22)};
  const double grad_dir = rng.uniform(0.0, 6.283185307179586);
  const double grad_amp = rng.uniform(0.05, 0.20);
  const double gx = std::cos(grad_dir), gy = std::sin(grad_dir);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const double t = ((x - s * 0.5) * gx + (y - s * 0.5) * gy) / s;
      const double f = 1.0 + grad_amp * t;
      img.at(y, x, 0) = base.r * f;
      img.at(y, x, 1) = base.g * f;
      img.at(y, x, 2) = base.b * f;
    }
  }

  // Nuisance blotches on every class: low-contrast smudges near the base
  // color, so "something is on the leaf" alone does not separate classes.
  const int n_blotch = 2 + rng.uniform_int(3);
  for (int i = 0; i < n_blotch; ++i) {
    const Rgb smudge{base.r + rng.uniform(-0.08, 0.08), base.g + rng.uniform(-0.08, 0.08),
                     base.b + rng.uniform(-0.05, 0.05)};
    blend_disc(img, rng.uniform(2.0, s - 2.0), rng.uniform(2.0, s - 2.0),
               rng.uniform(0.08, 0.16) * s, smudge, 0.5);
  }

  const bool with_spots = class_index == 1 || class_index == 2;
  const bool with_stripes = class_index == 1 || class_index == 3;

  if (with_spots) {
    const int n = (class_index == 1 ? 1 : 2) + rng.uniform_int(3);
    for (int i = 0; i < n; ++i) {
      const Rgb rust{rng.uniform(0.65, 0.85), rng.uniform(0.35, 0.55), rng.uniform(0.05, 0.18)};
      blend_disc(img, rng.uniform(3.0, s - 3.0), rng.uniform(3.0, s - 3.0),
                 rng.uniform(0.07, 0.13) * s, rust, cfg.contrast * rng.uniform(0.75, 1.0));
    }
  }
  if (with_stripes) {
    const int n = 1 + rng.uniform_int(2);
    for (int i = 0; i < n; ++i) {
      const Rgb scab{rng.uniform(0.16, 0.30), rng.uniform(0.12, 0.24), rng.uniform(0.04, 0.12)};
      blend_stripe(img, rng.uniform(0.2, 0.8) * s, rng.uniform(0.2, 0.8) * s,
                   rng.uniform(0.0, 3.141592653589793), rng.uniform(0.05, 0.09) * s, scab,
                   cfg.contrast * rng.uniform(0.75, 1.0));
    }
  }

  for (double& v : img.pixels) v = std::clamp(v + rng.normal() * cfg.noise, 0.0, 1.0);
  return img;
}

LabeledSet make_synthetic_set(const SyntheticConfig& cfg) {
  if (cfg.count < 1) throw Error("make_synthetic_set: count must be >= 1");
  if (cfg.size < 8) throw Error("make_synthetic_set: size must be >= 8");
  Rng root(cfg.seed);
  LabeledSet set;
  for (int i = 0; i < cfg.count; ++i) {
    const int cls = i % kNumClasses;
    Rng stream = root.split(static_cast<std::uint64_t>(i));
    set.images.push_back(synthetic_image(cls, cfg, stream));
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%05d", i);
    set.ids.push_back(id);
    set.origin.push_back(Origin::Real);
    for (int j = 0; j < kNumClasses; ++j) set.labels.values.push_back(j == cls ? 1.0 : 0.0);
    ++set.labels.rows;
  }
  return set;
}

void write_synthetic_dataset(const SyntheticConfig& cfg, const std::string& out_dir) {
  const fs::path root(out_dir);
  fs::create_directories(root / "images");
  const LabeledSet set = make_synthetic_set(cfg);

  std::ofstream csv(root / "labels.csv");
  if (!csv) throw IoError("cannot write labels csv under " + out_dir);
  csv << kCsvHeader << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    write_ppm((root / "images" / (set.ids[i] + ".ppm")).string(), set.images[i]);
    csv << set.ids[i];
    for (int j = 0; j < kNumClasses; ++j) {
      csv << ',' << static_cast<int>(set.labels.values[i * kNumClasses + j]);
    }
    csv << '\n';
  }
  if (!csv) throw IoError("write failed for labels csv under " + out_dir);

  if (cfg.unlabeled_count > 0) {
    fs::create_directories(root / "unlabeled");
    Rng root_rng(splitmix64(cfg.seed) + 1);
    for (int i = 0; i < cfg.unlabeled_count; ++i) {
      Rng stream = root_rng.split(static_cast<std::uint64_t>(i));
      const Image img = synthetic_image(i % kNumClasses, cfg, stream);
      char id[32];
      std::snprintf(id, sizeof(id), "unlab_%05d", i);
      write_ppm((root / "unlabeled" / (std::string(id) + ".ppm")).string(), img);
    }
  }
}

}  // namespace leafnet
