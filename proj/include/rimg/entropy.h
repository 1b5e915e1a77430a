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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rimg/bytes.h"

namespace rimg::entropy {

// Signed residuals in precision units, raster order over valid pixels.
using ResidualMap = std::vector<int64_t>;

inline uint64_t zigzag(int64_t v) {
  return v >= 0 ? static_cast<uint64_t>(v) << 1 : (static_cast<uint64_t>(-(v + 1)) << 1) | 1u;
}

inline int64_t unzigzag(uint64_t u) {
  return (u & 1u) ? -static_cast<int64_t>(u >> 1) - 1 : static_cast<int64_t>(u >> 1);
}

// Order-0 adaptive frequency model over 256 entries. Entries 0..254 are
// literal symbols; entry 255 is the escape, after which the coder sends the
// full 32-bit value. Counts start at one, grow by kIncrement per coded entry
// and are halved (rounding up) whenever the total exceeds kMaxTotal.
class AdaptiveModel {
 public:
  static constexpr uint32_t kEntries = 256;
  static constexpr uint32_t kEscape = 255;
  static constexpr uint32_t kIncrement = 32;
  static constexpr uint32_t kMaxTotal = 1u << 20;

  AdaptiveModel();

  uint32_t total() const { return total_; }
  uint32_t freq(uint32_t entry) const { return freq_[entry]; }
  uint32_t cum_low(uint32_t entry) const;
  // Entry whose cumulative interval contains `target` (< total()).
  uint32_t find(uint32_t target, uint32_t* cum_low_out) const;
  void update(uint32_t entry);

 private:
  std::array<uint32_t, kEntries> freq_;
  uint32_t total_;
};

// Multi-symbol arithmetic coder on 32-bit integer state: low/high bounds,
// bitwise renormalization with pending (underflow) bits. The final byte is
// zero-padded.
class ArithmeticEncoder {
 public:
  void encode(uint32_t cum_low, uint32_t freq, uint32_t total);
  void encode_symbol(AdaptiveModel& model, uint32_t value);
  void encode_raw16(uint32_t bits16);
  Bytes finish();

 private:
  void put_bit(int bit);
  void emit(int bit);

  uint64_t low_ = 0;
  uint64_t high_ = 0xffffffffull;
  uint64_t pending_ = 0;
  Bytes out_;
  uint8_t acc_ = 0;
  int nbits_ = 0;
};

class ArithmeticDecoder {
 public:
  explicit ArithmeticDecoder(std::span<const uint8_t> payload);

  uint32_t decode_symbol(AdaptiveModel& model);
  uint32_t decode_raw16();

 private:
  uint32_t decode_target(uint32_t total);
  void consume(uint32_t cum_low, uint32_t freq, uint32_t total);
  int next_bit();

  std::span<const uint8_t> in_;
  size_t bit_pos_ = 0;
  uint64_t low_ = 0;
  uint64_t high_ = 0xffffffffull;
  uint64_t value_ = 0;
};

// Single-model convenience wrappers.
Bytes arith_encode(std::span<const uint32_t> symbols);
std::vector<uint32_t> arith_decode(std::span<const uint8_t> payload, size_t count);

enum class CoderId : uint8_t { kSparseArithmetic = 0, kRunLengthDict = 1 };
enum class BackendId : uint8_t { kNone = 0, kDeflate = 1, kLzma = 2 };

// Wire layout (little-endian): coder_id u8, backend_id u8, symbol_count u32,
// payload_len u32, payload bytes.
struct CodedBlock {
  CoderId coder = CoderId::kSparseArithmetic;
  BackendId backend = BackendId::kNone;
  uint32_t symbol_count = 0;
  Bytes payload;

  size_t wire_size() const { return 10 + payload.size(); }
  bool operator==(const CodedBlock&) const = default;
};

void write_coded_block(ByteWriter& w, const CodedBlock& block);
CodedBlock read_coded_block(ByteReader& r);

// Payload: varint nonzero count, then one arithmetic stream interleaving
// (gap, zigzag value) per nonzero; the first gap is the absolute index.
CodedBlock encode_sparse(std::span<const int64_t> residuals);
ResidualMap decode_sparse(const CodedBlock& block);

// Payload: DEFLATE (raw RFC 1951) of varint pairs (zigzag value, run).
CodedBlock encode_runlength(std::span<const int64_t> residuals);
ResidualMap decode_runlength(const CodedBlock& block);

// Encodes with both coders and keeps the smaller; ties go to sparse.
CodedBlock choose_coder(std::span<const int64_t> residuals);
ResidualMap decode_residuals(const CodedBlock& block);

// Payload: first pixel's bit, then arithmetic-coded run lengths (minus one),
// with separate models for valid and invalid runs.
Bytes encode_mask(std::span<const uint8_t> valid);
std::vector<uint8_t> decode_mask(std::span<const uint8_t> payload, size_t count);

}  // namespace rimg::entropy
