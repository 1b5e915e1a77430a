/*
 * Copyright 2026 The rimg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rimg/error.h"

namespace rimg {

using Bytes = std::vector<uint8_t>;

// Little-endian serialization helpers shared by every on-disk format.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { put_le(v); }
  void u32(uint32_t v) { put_le(v); }
  void u64(uint64_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<uint64_t>(v)); }
  void tag(std::string_view magic) {
    buf_.insert(buf_.end(), magic.begin(), magic.end());
  }
  void bytes(std::span<const uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }

  // LEB128: 7 payload bits per byte, high bit set on all but the last byte.
  void varint(uint64_t v) {
    while (v >= 0x80) {
      buf_.push_back(static_cast<uint8_t>(v) | 0x80);
      v >>= 7;
    }
    buf_.push_back(static_cast<uint8_t>(v));
  }

  size_t size() const { return buf_.size(); }
  Bytes& buffer() { return buf_; }
  Bytes take() { return std::move(buf_); }

  // Overwrites a previously reserved u32 slot.
  void patch_u32(size_t offset, uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_[offset + k] = static_cast<uint8_t>(v >> (8 * k));
  }

 private:
  template <typename T>
  void put_le(T v) {
    for (size_t k = 0; k < sizeof(T); ++k) {
      buf_.push_back(static_cast<uint8_t>(v >> (8 * k)));
    }
  }

  Bytes buf_;
};

// Bounds-checked reader; any overrun is a CorruptStream.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t u8() { return get_le<uint8_t>(); }
  uint16_t u16() { return get_le<uint16_t>(); }
  uint32_t u32() { return get_le<uint32_t>(); }
  uint64_t u64() { return get_le<uint64_t>(); }
  float f32() { return std::bit_cast<float>(get_le<uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<uint64_t>()); }

  void expect_tag(std::string_view magic) {
    auto got = bytes(magic.size());
    if (!std::equal(got.begin(), got.end(), magic.begin())) {
      throw Error(ErrorCode::kCorruptStream,
                  "bad magic, expected \"" + std::string(magic) + "\"");
    }
  }

  std::span<const uint8_t> bytes(size_t n) {
    require(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  uint64_t varint() {
    uint64_t value = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      uint8_t b = u8();
      value |= static_cast<uint64_t>(b & 0x7f) << shift;
      if ((b & 0x80) == 0) {
        if (shift == 63 && b > 1) break;
        return value;
      }
    }
    throw Error(ErrorCode::kCorruptStream, "varint overflows 64 bits");
  }

  size_t position() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void require(size_t n) const {
    if (n > data_.size() - pos_) {
      throw Error(ErrorCode::kCorruptStream, "unexpected end of data");
    }
  }

  template <typename T>
  T get_le() {
    require(sizeof(T));
    T v = 0;
    for (size_t k = 0; k < sizeof(T); ++k) {
      v |= static_cast<T>(static_cast<T>(data_[pos_ + k]) << (8 * k));
    }
    pos_ += sizeof(T);
    return v;
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> data);

}  // namespace rimg
