// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "leafnet/errors.hpp"

namespace leafnet {

namespace {

unsigned char quantize(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

/// Skips PPM whitespace and '#' comment lines.
void skip_ppm_space(std::istream& in) {
  for (;;) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P6") throw UnsupportedImageFormat("not a P6 pixmap: " + path);
  int w = 0, h = 0, maxval = 0;
  skip_ppm_space(in);
  in >> w;
  skip_ppm_space(in);
  in >> h;
  skip_ppm_space(in);
  in >> maxval;
  if (!in || w < 1 || h < 1) throw UnsupportedImageFormat("malformed P6 header: " + path);
  if (maxval != 255) throw UnsupportedImageFormat("only maxval 255 P6 supported: " + path);
  in.get();  // single whitespace after maxval
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw UnsupportedImageFormat("truncated P6 payload: " + path);
  }
  Image img = Image::filled(h, w, 0.0, 3);
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void write_ppm(const std::string& path, const Image& img) {
  if (img.channels != 3 || !img.size_matches()) throw IoError("write_ppm: need a 3-channel image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open image for writing: " + path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(img.pixels[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path);
}

Image read_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw UnsupportedImageFormat("cannot decode PNG: " + path + " (" + png.message + ")");
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> raw(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw UnsupportedImageFormat("cannot decode PNG: " + path + " (" + message + ")");
  }
  Image img = Image::filled(static_cast<int>(png.height), static_cast<int>(png.width), 0.0, 3);
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void write_png(const std::string& path, const Image& img) {
  if (img.channels != 3 || !img.size_matches()) throw IoError("write_png: need a 3-channel image");
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(img.pixels[i]);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, raw.data(), 0, nullptr)) {
    throw IoError("cannot write PNG: " + path + " (" + png.message + ")");
  }
}

Image read_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open image: " + path);
  unsigned char magic[8] = {0};
  probe.read(reinterpret_cast<char*>(magic), 8);
  probe.close();
  if (magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
  static const unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (std::equal(kPngMagic, kPngMagic + 8, magic)) return read_png(path);
  throw UnsupportedImageFormat("unrecognized image format (want P6 pixmap or PNG): " + path);
}

}  // namespace leafnet
