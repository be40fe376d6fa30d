// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFNET_IMAGEIO_HPP_
#define LEAFNET_IMAGEIO_HPP_

#include <string>

#include "leafnet/image.hpp"

namespace leafnet {

/// Reads a P6 portable pixmap or a PNG (dispatch on the file magic) into a
/// 3-channel [0,1] image.  Throws UnsupportedImageFormat / IoError.
Image read_image(const std::string& path);

Image read_ppm(const std::string& path);
Image read_png(const std::string& path);

/// 8-bit quantized writers; values are clamped to [0,1] first.
void write_ppm(const std::string& path, const Image& img);
void write_png(const std::string& path, const Image& img);

}  // namespace leafnet

#endif  // LEAFNET_IMAGEIO_HPP_
