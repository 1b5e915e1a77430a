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

#include "rimg/entropy.h"

#include <zlib.h>

#include <limits>
#include <string>

#include "rimg/error.h"

namespace rimg::entropy {

namespace {

constexpr uint64_t kHalf = 1ull << 31;
constexpr uint64_t kQuarter = 1ull << 30;
constexpr uint64_t kThreeQuarters = 3 * kQuarter;

// Decoding may look at most this many bits past the payload; an honest
// stream needs fewer than 32.
constexpr size_t kMaxOverreadBits = 64;

uint32_t checked_symbol(uint64_t v) {
  if (v > std::numeric_limits<uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "symbol exceeds 32 bits");
  }
  return static_cast<uint32_t>(v);
}

uint32_t checked_count(size_t n) {
  if (n > std::numeric_limits<uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "residual map longer than 2^32-1");
  }
  return static_cast<uint32_t>(n);
}

}  // namespace

// ---------------------------------------------------------------------------

AdaptiveModel::AdaptiveModel() : total_(kEntries) { freq_.fill(1); }

uint32_t AdaptiveModel::cum_low(uint32_t entry) const {
  uint32_t c = 0;
  for (uint32_t k = 0; k < entry; ++k) c += freq_[k];
  return c;
}

uint32_t AdaptiveModel::find(uint32_t target, uint32_t* cum_low_out) const {
  uint32_t c = 0;
  for (uint32_t k = 0; k < kEntries; ++k) {
    if (target < c + freq_[k]) {
      *cum_low_out = c;
      return k;
    }
    c += freq_[k];
  }
  throw Error(ErrorCode::kCorruptStream, "arithmetic target outside model range");
}

void AdaptiveModel::update(uint32_t entry) {
  freq_[entry] += kIncrement;
  total_ += kIncrement;
  if (total_ > kMaxTotal) {
    total_ = 0;
    for (uint32_t& f : freq_) {
      f = (f + 1) / 2;
      total_ += f;
    }
  }
}

// ---------------------------------------------------------------------------

void ArithmeticEncoder::put_bit(int bit) {
  acc_ = static_cast<uint8_t>((acc_ << 1) | (bit & 1));
  if (++nbits_ == 8) {
    out_.push_back(acc_);
    acc_ = 0;
    nbits_ = 0;
  }
}

void ArithmeticEncoder::emit(int bit) {
  put_bit(bit);
  for (; pending_ > 0; --pending_) put_bit(!bit);
}

void ArithmeticEncoder::encode(uint32_t cum_low, uint32_t freq, uint32_t total) {
  uint64_t range = high_ - low_ + 1;
  high_ = low_ + range * (static_cast<uint64_t>(cum_low) + freq) / total - 1;
  low_ = low_ + range * cum_low / total;
  for (;;) {
    if (high_ < kHalf) {
      emit(0);
    } else if (low_ >= kHalf) {
      emit(1);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
  }
}

void ArithmeticEncoder::encode_symbol(AdaptiveModel& model, uint32_t value) {
  uint32_t entry = value < AdaptiveModel::kEscape ? value : AdaptiveModel::kEscape;
  encode(model.cum_low(entry), model.freq(entry), model.total());
  model.update(entry);
  if (entry == AdaptiveModel::kEscape) {
    encode_raw16(value >> 16);
    encode_raw16(value & 0xffffu);
  }
}

void ArithmeticEncoder::encode_raw16(uint32_t bits16) { encode(bits16 & 0xffffu, 1, 1u << 16); }

Bytes ArithmeticEncoder::finish() {
  ++pending_;
  emit(low_ < kQuarter ? 0 : 1);
  while (nbits_ != 0) put_bit(0);
  return std::move(out_);
}

// ---------------------------------------------------------------------------

ArithmeticDecoder::ArithmeticDecoder(std::span<const uint8_t> payload) : in_(payload) {
  for (int k = 0; k < 32; ++k) value_ = (value_ << 1) | static_cast<uint64_t>(next_bit());
}

int ArithmeticDecoder::next_bit() {
  size_t byte = bit_pos_ >> 3;
  int bit = 0;
  if (byte < in_.size()) {
    bit = (in_[byte] >> (7 - (bit_pos_ & 7))) & 1;
  } else if (bit_pos_ - 8 * in_.size() >= kMaxOverreadBits) {
    throw Error(ErrorCode::kCorruptStream, "arithmetic stream ended early");
  }
  ++bit_pos_;
  return bit;
}

uint32_t ArithmeticDecoder::decode_target(uint32_t total) {
  uint64_t range = high_ - low_ + 1;
  uint64_t target = ((value_ - low_ + 1) * total - 1) / range;
  if (value_ < low_ || target >= total) {
    throw Error(ErrorCode::kCorruptStream, "arithmetic decoder left its interval");
  }
  return static_cast<uint32_t>(target);
}

void ArithmeticDecoder::consume(uint32_t cum_low, uint32_t freq, uint32_t total) {
  uint64_t range = high_ - low_ + 1;
  high_ = low_ + range * (static_cast<uint64_t>(cum_low) + freq) / total - 1;
  low_ = low_ + range * cum_low / total;
  for (;;) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      value_ -= kHalf;
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      value_ -= kQuarter;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
    value_ = (value_ << 1) | static_cast<uint64_t>(next_bit());
  }
}

uint32_t ArithmeticDecoder::decode_symbol(AdaptiveModel& model) {
  uint32_t cum = 0;
  uint32_t entry = model.find(decode_target(model.total()), &cum);
  consume(cum, model.freq(entry), model.total());
  model.update(entry);
  if (entry != AdaptiveModel::kEscape) return entry;
  uint32_t hi = decode_raw16();
  uint32_t lo = decode_raw16();
  uint32_t value = (hi << 16) | lo;
  if (value < AdaptiveModel::kEscape) {
    throw Error(ErrorCode::kCorruptStream, "escaped symbol below escape threshold");
  }
  return value;
}

uint32_t ArithmeticDecoder::decode_raw16() {
  uint32_t bits = decode_target(1u << 16);
  consume(bits, 1, 1u << 16);
  return bits;
}

// ---------------------------------------------------------------------------

Bytes arith_encode(std::span<const uint32_t> symbols) {
  AdaptiveModel model;
  ArithmeticEncoder enc;
  for (uint32_t s : symbols) enc.encode_symbol(model, s);
  return enc.finish();
}

std::vector<uint32_t> arith_decode(std::span<const uint8_t> payload, size_t count) {
  AdaptiveModel model;
  ArithmeticDecoder dec(payload);
  std::vector<uint32_t> out;
  out.reserve(count);
  for (size_t k = 0; k < count; ++k) out.push_back(dec.decode_symbol(model));
  return out;
}

// ---------------------------------------------------------------------------

void write_coded_block(ByteWriter& w, const CodedBlock& block) {
  w.u8(static_cast<uint8_t>(block.coder));
  w.u8(static_cast<uint8_t>(block.backend));
  w.u32(block.symbol_count);
  w.u32(checked_count(block.payload.size()));
  w.bytes(block.payload);
}

CodedBlock read_coded_block(ByteReader& r) {
  CodedBlock block;
  uint8_t coder = r.u8();
  uint8_t backend = r.u8();
  if (coder > 1) throw Error(ErrorCode::kCorruptStream, "unknown coder id " + std::to_string(coder));
  if (backend > 2) {
    throw Error(ErrorCode::kCorruptStream, "unknown backend id " + std::to_string(backend));
  }
  block.coder = static_cast<CoderId>(coder);
  block.backend = static_cast<BackendId>(backend);
  block.symbol_count = r.u32();
  uint32_t len = r.u32();
  auto payload = r.bytes(len);
  block.payload.assign(payload.begin(), payload.end());
  return block;
}

// ---------------------------------------------------------------------------

CodedBlock encode_sparse(std::span<const int64_t> residuals) {
  CodedBlock block;
  block.coder = CoderId::kSparseArithmetic;
  block.backend = BackendId::kNone;
  block.symbol_count = checked_count(residuals.size());

  uint64_t nonzero = 0;
  for (int64_t v : residuals) nonzero += v != 0;

  AdaptiveModel gaps;
  AdaptiveModel values;
  ArithmeticEncoder enc;
  size_t previous = 0;
  bool first = true;
  for (size_t k = 0; k < residuals.size(); ++k) {
    if (residuals[k] == 0) continue;
    enc.encode_symbol(gaps, checked_symbol(first ? k : k - previous));
    enc.encode_symbol(values, checked_symbol(zigzag(residuals[k])));
    previous = k;
    first = false;
  }
  ByteWriter w;
  w.varint(nonzero);
  w.bytes(enc.finish());
  block.payload = w.take();
  return block;
}

ResidualMap decode_sparse(const CodedBlock& block) {
  if (block.coder != CoderId::kSparseArithmetic || block.backend != BackendId::kNone) {
    throw Error(ErrorCode::kCorruptStream, "block is not sparse-arithmetic coded");
  }
  ByteReader r(block.payload);
  uint64_t nonzero = r.varint();
  if (nonzero > block.symbol_count) {
    throw Error(ErrorCode::kCorruptStream, "more nonzeros than symbols");
  }
  ResidualMap out(block.symbol_count, 0);
  AdaptiveModel gaps;
  AdaptiveModel values;
  ArithmeticDecoder dec(r.bytes(r.remaining()));
  uint64_t index = 0;
  for (uint64_t n = 0; n < nonzero; ++n) {
    uint64_t gap = dec.decode_symbol(gaps);
    if (n > 0 && gap == 0) throw Error(ErrorCode::kCorruptStream, "zero gap between nonzeros");
    index = n == 0 ? gap : index + gap;
    if (index >= block.symbol_count) {
      throw Error(ErrorCode::kCorruptStream, "sparse index past end of map");
    }
    int64_t v = unzigzag(dec.decode_symbol(values));
    if (v == 0) throw Error(ErrorCode::kCorruptStream, "zero value in sparse stream");
    out[index] = v;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Bytes deflate_raw(std::span<const uint8_t> in) {
  z_stream zs{};
  if (deflateInit2(&zs, 9, Z_DEFLATED, -15, 9, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorCode::kInvalidArgument, "deflateInit2 failed");
  }
  Bytes out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::kInvalidArgument, "deflate did not finish");
  return out;
}

Bytes inflate_raw(std::span<const uint8_t> in, size_t max_out) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) {
    throw Error(ErrorCode::kCorruptStream, "inflateInit2 failed");
  }
  Bytes out;
  uint8_t chunk[16384];
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kCorruptStream, "DEFLATE payload is malformed");
    }
    out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
    if (out.size() > max_out) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kCorruptStream, "DEFLATE payload inflates past its bound");
    }
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorCode::kCorruptStream, "DEFLATE payload is truncated");
    }
  }
  bool trailing = zs.avail_in != 0;
  inflateEnd(&zs);
  if (trailing) throw Error(ErrorCode::kCorruptStream, "bytes after DEFLATE stream end");
  return out;
}

}  // namespace

CodedBlock encode_runlength(std::span<const int64_t> residuals) {
  CodedBlock block;
  block.coder = CoderId::kRunLengthDict;
  block.backend = BackendId::kDeflate;
  block.symbol_count = checked_count(residuals.size());
  ByteWriter w;
  for (size_t k = 0; k < residuals.size();) {
    size_t run = 1;
    while (k + run < residuals.size() && residuals[k + run] == residuals[k]) ++run;
    w.varint(zigzag(residuals[k]));
    w.varint(run);
    k += run;
  }
  block.payload = deflate_raw(w.buffer());
  return block;
}

ResidualMap decode_runlength(const CodedBlock& block) {
  if (block.coder != CoderId::kRunLengthDict) {
    throw Error(ErrorCode::kCorruptStream, "block is not run-length coded");
  }
  if (block.backend != BackendId::kDeflate) {
    throw Error(ErrorCode::kCorruptStream, "unsupported run-length backend");
  }
  // Each pair covers at least one symbol and takes at most 20 varint bytes.
  size_t bound = 20 * static_cast<size_t>(block.symbol_count) + 20;
  Bytes pairs = inflate_raw(block.payload, bound);
  ByteReader r(pairs);
  ResidualMap out;
  out.reserve(block.symbol_count);
  while (!r.at_end()) {
    int64_t v = unzigzag(r.varint());
    uint64_t run = r.varint();
    if (run == 0 || run > block.symbol_count - out.size()) {
      throw Error(ErrorCode::kCorruptStream, "run length overflows the map");
    }
    out.insert(out.end(), run, v);
  }
  if (out.size() != block.symbol_count) {
    throw Error(ErrorCode::kCorruptStream, "run-length map shorter than declared");
  }
  return out;
}

CodedBlock choose_coder(std::span<const int64_t> residuals) {
  CodedBlock sparse = encode_sparse(residuals);
  CodedBlock runs = encode_runlength(residuals);
  return runs.payload.size() < sparse.payload.size() ? std::move(runs) : std::move(sparse);
}

ResidualMap decode_residuals(const CodedBlock& block) {
  switch (block.coder) {
    case CoderId::kSparseArithmetic: return decode_sparse(block);
    case CoderId::kRunLengthDict: return decode_runlength(block);
  }
  throw Error(ErrorCode::kCorruptStream, "unknown coder");
}

// ---------------------------------------------------------------------------

Bytes encode_mask(std::span<const uint8_t> valid) {
  ByteWriter w;
  if (valid.empty()) return w.take();
  w.u8(valid[0] ? 1 : 0);
  std::array<AdaptiveModel, 2> runs;
  ArithmeticEncoder enc;
  for (size_t k = 0; k < valid.size();) {
    uint8_t bit = valid[k] ? 1 : 0;
    size_t run = 1;
    while (k + run < valid.size() && (valid[k + run] ? 1 : 0) == bit) ++run;
    enc.encode_symbol(runs[bit], checked_symbol(run - 1));
    k += run;
  }
  w.bytes(enc.finish());
  return w.take();
}

std::vector<uint8_t> decode_mask(std::span<const uint8_t> payload, size_t count) {
  std::vector<uint8_t> valid;
  if (count == 0) {
    if (!payload.empty()) throw Error(ErrorCode::kCorruptStream, "mask payload for empty image");
    return valid;
  }
  ByteReader r(payload);
  uint8_t bit = r.u8();
  if (bit > 1) throw Error(ErrorCode::kCorruptStream, "bad leading mask bit");
  valid.reserve(count);
  std::array<AdaptiveModel, 2> runs;
  ArithmeticDecoder dec(r.bytes(r.remaining()));
  while (valid.size() < count) {
    uint64_t run = static_cast<uint64_t>(dec.decode_symbol(runs[bit])) + 1;
    if (run > count - valid.size()) throw Error(ErrorCode::kCorruptStream, "mask run overflows image");
    valid.insert(valid.end(), run, bit);
    bit ^= 1;
  }
  return valid;
}

}  // namespace rimg::entropy
