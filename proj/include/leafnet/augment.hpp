// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bit-reproducible stochastic preprocessing pipeline.  Training order is
// fixed: resize -> maybe hflip -> maybe vflip -> maybe shift/scale/rotate ->
// maybe one-of {emboss, sharpen, blur} -> maybe piecewise affine ->
// normalize.  Validation/testing get resize + normalize only.
//
// Conventions: bilinear sampling everywhere; resize clamps at the borders
// while warps use reflect-101 borders (no black edges); positive rotation
// angles turn image content clockwise on screen (y axis points down).

#ifndef LEAFNET_AUGMENT_HPP_
#define LEAFNET_AUGMENT_HPP_

#include <array>
#include <utility>
#include <vector>

#include "leafnet/image.hpp"
#include "leafnet/rng.hpp"

namespace leafnet {

struct AugmentConfig {
  int target_size = 545;
  double p_hflip = 0.5;
  double p_vflip = 0.5;
  double p_ssr = 0.7;                // shift/scale/rotate probability
  double rotation_limit_deg = 25.0;
  double shift_limit = 0.0625;       // fraction of image size
  double scale_limit = 0.1;          // scale drawn from 1 +- scale_limit
  double p_oneof_filter = 0.5;
  double p_piecewise = 0.5;
  int piecewise_grid = 4;
  double piecewise_sigma = 0.03;     // control-point jitter std, fraction of size
  std::array<double, 3> channel_mean{0.0, 0.0, 0.0};
  std::array<double, 3> channel_std{1.0, 1.0, 1.0};

  void validate() const;  // probabilities in [0,1], limits >= 0, std > 0
};

enum class FlipAxis { Horizontal, Vertical };
enum class FilterKind { Emboss, Sharpen, Blur };

/// Bilinear resize to target x target (clamp-to-edge sampling).
Image resize(const Image& img, int target);

Image flip(const Image& img, FlipAxis axis);

/// Single affine warp: rotate about the image center, scale about the
/// center, then translate by (dx, dy) pixels.  Bilinear sampling with
/// reflect-101 borders.  Identity parameters reproduce the input exactly.
Image shift_scale_rotate(const Image& img, double dx, double dy, double scale_factor,
                         double angle_deg);

/// Fixed 3x3 kernels with reflect padding, output clamped to [0,1]:
///   sharpen [[0,-1,0],[-1,5,-1],[0,-1,0]], blur = box/9,
///   emboss [[-2,-1,0],[-1,1,1],[0,1,2]] plus a 0.5 gray offset.
Image filter3x3(const Image& img, FilterKind kind);

/// Applies exactly one of emboss/sharpen/blur, chosen uniformly.
Image one_of(const Image& img, Rng& rng);

/// Gaussian jitters for a grid x grid control lattice, in draw order
/// (row-major control points; dx then dy per point), sigma in pixels.
std::vector<std::pair<double, double>> piecewise_control_jitter(int grid, double sigma_px,
                                                                Rng& rng);

/// Displacement at (x, y) interpolated per-triangle from the control
/// lattice spanning [0, w-1] x [0, h-1]; exact at control points.
std::pair<double, double> piecewise_field_at(const std::vector<std::pair<double, double>>& jitter,
                                             int grid, int h, int w, double x, double y);

/// Warp by the interpolated displacement field (sigma = 0 is the identity).
Image piecewise_affine(const Image& img, int grid, double sigma_px, Rng& rng);

/// out[c] = (in[c] - mean[c]) / std[c]; no clamping.
Image normalize(const Image& img, const std::array<double, 3>& mean,
                const std::array<double, 3>& std);

/// Which stages fired and which parameters were drawn, for tests and logs.
struct PipelineTrace {
  bool hflip = false;
  bool vflip = false;
  bool ssr = false;
  bool oneof = false;
  bool piecewise = false;
  double angle_deg = 0.0;
  double shift_dx = 0.0;
  double shift_dy = 0.0;
  double scale_factor = 1.0;
  int filter_index = -1;  // 0 emboss, 1 sharpen, 2 blur
};

/// Full stochastic train pipeline.  Deterministic given (img, cfg, rng seed).
Image apply_train_pipeline(const Image& img, const AugmentConfig& cfg, Rng& rng,
                           PipelineTrace* trace = nullptr);

/// resize + normalize only; consumes no randomness.
Image apply_eval_pipeline(const Image& img, const AugmentConfig& cfg);

}  // namespace leafnet

#endif  // LEAFNET_AUGMENT_HPP_
