// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/augment.hpp"

#include <algorithm>
#include <cmath>

namespace leafnet {

namespace {

constexpr double kDegToRad = 0.017453292519943295;

/// Reflect-101 index: ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

double sample_bilinear(const Image& img, double x, double y, int c, bool reflect) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double tx = x - x0;
  const double ty = y - y0;
  auto ix = [&](int i) { return reflect ? reflect_index(i, img.width) : clamp_index(i, img.width); };
  auto iy = [&](int i) { return reflect ? reflect_index(i, img.height) : clamp_index(i, img.height); };
  const double v00 = img.at(iy(y0), ix(x0), c);
  const double v01 = img.at(iy(y0), ix(x0 + 1), c);
  const double v10 = img.at(iy(y0 + 1), ix(x0), c);
  const double v11 = img.at(iy(y0 + 1), ix(x0 + 1), c);
  return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v01) + ty * ((1.0 - tx) * v10 + tx * v11);
}

}  // namespace

void AugmentConfig::validate() const {
  if (target_size < 1) throw InvalidTarget("augment: target_size must be >= 1");
  for (double p : {p_hflip, p_vflip, p_ssr, p_oneof_filter, p_piecewise}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidProbability("augment: probabilities must be in [0,1]");
  }
  if (rotation_limit_deg < 0.0) throw Error("augment: rotation_limit_deg must be >= 0");
  if (shift_limit < 0.0) throw Error("augment: shift_limit must be >= 0");
  if (!(scale_limit >= 0.0 && scale_limit < 1.0)) {
    throw Error("augment: scale_limit must be in [0,1)");
  }
  if (piecewise_grid < 2) throw InvalidGrid("augment: piecewise_grid must be >= 2");
  if (piecewise_sigma < 0.0) throw Error("augment: piecewise_sigma must be >= 0");
  for (double s : channel_std) {
    if (!(s > 0.0)) throw ZeroStd("augment: channel_std components must be > 0");
  }
}

Image resize(const Image& img, int target) {
  if (target < 1) throw InvalidTarget("resize: target must be >= 1, got " + std::to_string(target));
  if (img.height == target && img.width == target) return img;
  Image out = Image::filled(target, target, 0.0, img.channels);
  const double sx = static_cast<double>(img.width) / target;
  const double sy = static_cast<double>(img.height) / target;
  for (int y = 0; y < target; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < target; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = sample_bilinear(img, src_x, src_y, c, /*reflect=*/false);
      }
    }
  }
  return out;
}

Image flip(const Image& img, FlipAxis axis) {
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int sy = axis == FlipAxis::Vertical ? img.height - 1 - y : y;
      const int sx = axis == FlipAxis::Horizontal ? img.width - 1 - x : x;
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

Image shift_scale_rotate(const Image& img, double dx, double dy, double scale_factor,
                         double angle_deg) {
  if (!(scale_factor > 0.0)) {
    throw InvalidScale("shift_scale_rotate: scale must be > 0, got " +
                       std::to_string(scale_factor));
  }
  const double cx = (img.width - 1) * 0.5;
  const double cy = (img.height - 1) * 0.5;
  const double rad = angle_deg * kDegToRad;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const double inv_scale = 1.0 / scale_factor;
  Image out = Image::filled(img.height, img.width, 0.0, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      // inverse map: undo the shift, unscale, rotate by -angle about center
      const double ux = (x - cx - dx) * inv_scale;
      const double uy = (y - cy - dy) * inv_scale;
      const double src_x = c * ux + s * uy + cx;
      const double src_y = -s * ux + c * uy + cy;
      for (int ch = 0; ch < img.channels; ++ch) {
        out.at(y, x, ch) = sample_bilinear(img, src_x, src_y, ch, /*reflect=*/true);
      }
    }
  }
  return out;
}

Image filter3x3(const Image& img, FilterKind kind) {
  static constexpr double kSharpen[3][3] = {{0, -1, 0}, {-1, 5, -1}, {0, -1, 0}};
  static constexpr double kEmboss[3][3] = {{-2, -1, 0}, {-1, 1, 1}, {0, 1, 2}};
  static constexpr double kBlur[3][3] = {{1.0 / 9, 1.0 / 9, 1.0 / 9},
                                         {1.0 / 9, 1.0 / 9, 1.0 / 9},
                                         {1.0 / 9, 1.0 / 9, 1.0 / 9}};
  const double(*k)[3] = kind == FilterKind::Emboss ? kEmboss
                        : kind == FilterKind::Sharpen ? kSharpen
                                                      : kBlur;
  const double offset = kind == FilterKind::Emboss ? 0.5 : 0.0;
  Image out = Image::filled(img.height, img.width, 0.0, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = reflect_index(y + ky - 1, img.height);
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = reflect_index(x + kx - 1, img.width);
            acc += k[ky][kx] * img.at(sy, sx, c);
          }
        }
        out.at(y, x, c) = std::clamp(acc + offset, 0.0, 1.0);
      }
    }
  }
  return out;
}

Image one_of(const Image& img, Rng& rng) {
  switch (rng.uniform_int(3)) {
    case 0:
      return filter3x3(img, FilterKind::Emboss);
    case 1:
      return filter3x3(img, FilterKind::Sharpen);
    default:
      return filter3x3(img, FilterKind::Blur);
  }
}

std::vector<std::pair<double, double>> piecewise_control_jitter(int grid, double sigma_px,
                                                                Rng& rng) {
  if (grid < 2) throw InvalidGrid("piecewise_affine: grid must be >= 2, got " + std::to_string(grid));
  if (sigma_px < 0.0) throw Error("piecewise_affine: sigma must be >= 0");
  std::vector<std::pair<double, double>> jitter(static_cast<std::size_t>(grid) * grid);
  for (auto& [dx, dy] : jitter) {
    dx = rng.normal() * sigma_px;
    dy = rng.normal() * sigma_px;
  }
  return jitter;
}

std::pair<double, double> piecewise_field_at(const std::vector<std::pair<double, double>>& jitter,
                                             int grid, int h, int w, double x, double y) {
  // Lattice coordinates in cell units.
  const double gx = w > 1 ? x / (w - 1) * (grid - 1) : 0.0;
  const double gy = h > 1 ? y / (h - 1) * (grid - 1) : 0.0;
  const int cx = std::clamp(static_cast<int>(std::floor(gx)), 0, grid - 2);
  const int cy = std::clamp(static_cast<int>(std::floor(gy)), 0, grid - 2);
  const double u = gx - cx;
  const double v = gy - cy;
  const auto& tl = jitter[static_cast<std::size_t>(cy) * grid + cx];
  const auto& tr = jitter[static_cast<std::size_t>(cy) * grid + cx + 1];
  const auto& bl = jitter[static_cast<std::size_t>(cy + 1) * grid + cx];
  const auto& br = jitter[static_cast<std::size_t>(cy + 1) * grid + cx + 1];
  // Cell diagonal tl->br splits it into two triangles; barycentric interp.
  if (u >= v) {
    return {tl.first * (1.0 - u) + tr.first * (u - v) + br.first * v,
            tl.second * (1.0 - u) + tr.second * (u - v) + br.second * v};
  }
  return {tl.first * (1.0 - v) + br.first * u + bl.first * (v - u),
          tl.second * (1.0 - v) + br.second * u + bl.second * (v - u)};
}

Image piecewise_affine(const Image& img, int grid, double sigma_px, Rng& rng) {
  const std::vector<std::pair<double, double>> jitter =
      piecewise_control_jitter(grid, sigma_px, rng);
  Image out = Image::filled(img.height, img.width, 0.0, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto [dx, dy] = piecewise_field_at(jitter, grid, img.height, img.width, x, y);
      for (int c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = sample_bilinear(img, x + dx, y + dy, c, /*reflect=*/true);
      }
    }
  }
  return out;
}

Image normalize(const Image& img, const std::array<double, 3>& mean,
                const std::array<double, 3>& std) {
  for (double s : std) {
    if (!(s > 0.0)) throw ZeroStd("normalize: std components must be > 0");
  }
  Image out = img;
  const int chans = std::min(img.channels, 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < chans; ++c) {
        out.at(y, x, c) = (img.at(y, x, c) - mean[c]) / std[c];
      }
    }
  }
  return out;
}

Image apply_train_pipeline(const Image& img, const AugmentConfig& cfg, Rng& rng,
                           PipelineTrace* trace) {
  cfg.validate();
  PipelineTrace local;
  Image out = resize(img, cfg.target_size);

  local.hflip = rng.bernoulli(cfg.p_hflip);
  if (local.hflip) out = flip(out, FlipAxis::Horizontal);

  local.vflip = rng.bernoulli(cfg.p_vflip);
  if (local.vflip) out = flip(out, FlipAxis::Vertical);

  local.ssr = rng.bernoulli(cfg.p_ssr);
  if (local.ssr) {
    local.angle_deg = rng.uniform(-cfg.rotation_limit_deg, cfg.rotation_limit_deg);
    local.shift_dx = rng.uniform(-cfg.shift_limit, cfg.shift_limit) * cfg.target_size;
    local.shift_dy = rng.uniform(-cfg.shift_limit, cfg.shift_limit) * cfg.target_size;
    local.scale_factor = 1.0 + rng.uniform(-cfg.scale_limit, cfg.scale_limit);
    out = shift_scale_rotate(out, local.shift_dx, local.shift_dy, local.scale_factor,
                             local.angle_deg);
  }

  local.oneof = rng.bernoulli(cfg.p_oneof_filter);
  if (local.oneof) {
    local.filter_index = rng.uniform_int(3);
    const FilterKind kind = local.filter_index == 0   ? FilterKind::Emboss
                            : local.filter_index == 1 ? FilterKind::Sharpen
                                                      : FilterKind::Blur;
    out = filter3x3(out, kind);
  }

  local.piecewise = rng.bernoulli(cfg.p_piecewise);
  if (local.piecewise) {
    out = piecewise_affine(out, cfg.piecewise_grid, cfg.piecewise_sigma * cfg.target_size, rng);
  }

  out = normalize(out, cfg.channel_mean, cfg.channel_std);
  if (trace) *trace = local;
  return out;
}

Image apply_eval_pipeline(const Image& img, const AugmentConfig& cfg) {
  cfg.validate();
  return normalize(resize(img, cfg.target_size), cfg.channel_mean, cfg.channel_std);
}

}  // namespace leafnet
