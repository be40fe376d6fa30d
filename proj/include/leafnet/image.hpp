// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFNET_IMAGE_HPP_
#define LEAFNET_IMAGE_HPP_

#include <vector>

#include "leafnet/errors.hpp"

namespace leafnet {

/// H x W x C image, row-major, channel-last, 64-bit floats.  Values live in
/// [0,1] until normalization, which may take them outside that range.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<double> pixels;

  static Image filled(int h, int w, double v, int c = 3) {
    Image img;
    img.height = h;
    img.width = w;
    img.channels = c;
    img.pixels.assign(static_cast<std::size_t>(h) * w * c, v);
    return img;
  }

  double& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool size_matches() const {
    return pixels.size() == static_cast<std::size_t>(height) * width * channels;
  }
};

}  // namespace leafnet

#endif  // LEAFNET_IMAGE_HPP_
