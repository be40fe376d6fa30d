// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFNET_BINIO_HPP_
#define LEAFNET_BINIO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "leafnet/errors.hpp"

namespace leafnet {

/// CRC-32 (IEEE 802.3 polynomial, reflected), as used by zlib/PNG.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

/// Little-endian append/read helpers for the checkpoint format.
inline void append_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void append_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void append_f64le(std::string& out, double v) {
  append_u64le(out, std::bit_cast<std::uint64_t>(v));
}

/// Cursor over an in-memory buffer; throws Truncated when it runs out.
class BinReader {
 public:
  explicit BinReader(const std::string& buf) : buf_(buf) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }

  std::uint32_t read_u32le() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t read_u64le() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  double read_f64le() { return std::bit_cast<double>(read_u64le()); }

  std::string read_bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw Truncated("checkpoint data ends early");
  }

  const std::string& buf_;
  std::size_t pos_ = 0;
};

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace leafnet

#endif  // LEAFNET_BINIO_HPP_
