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

#include "rimg/codec.h"

#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include "rimg/error.h"

namespace rimg {

namespace {

// Runs job(b) for b in [0, count) on up to `threads` workers. Jobs write
// disjoint outputs, so scheduling never affects results.
void parallel_for(size_t count, int threads, const std::function<void(size_t)>& job) {
  size_t workers = std::min<size_t>(count, static_cast<size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (size_t b = 0; b < count; ++b) job(b);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> pool;
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t b = next++; b < count; b = next++) {
          try {
            job(b);
          } catch (...) {
            errors[b] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

uint32_t crc32_of(std::span<const uint8_t> data) {
  return static_cast<uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), data.data(), static_cast<uInt>(data.size())));
}

KdTree index_previous(const PreviousFrame& prev) {
  if (prev.image == nullptr || prev.calib == nullptr || prev.track == nullptr) {
    throw Error(ErrorCode::kMissingPreviousFrame, "previous frame is incomplete");
  }
  return build_prev_frame_index(image_to_point_cloud(*prev.image, *prev.calib, *prev.track));
}

size_t valid_in(const RangeImage& image, const Window& w) {
  size_t n = 0;
  for (int i = w.row0; i < w.row1; ++i) {
    for (int j = w.col0; j < w.col1; ++j) n += image.is_valid(i, j);
  }
  return n;
}

}  // namespace

std::vector<Window> BlockLayout::blocks(int height, int width) const {
  if (block_h < 0 || block_w < 0) throw Error(ErrorCode::kInvalidArgument, "negative block size");
  int bh = block_h == 0 ? std::max(height, 1) : block_h;
  int bw = block_w == 0 ? std::max(width, 1) : block_w;
  std::vector<Window> out;
  for (int r = 0; r < height; r += bh) {
    for (int c = 0; c < width; c += bw) {
      out.push_back({r, c, std::min(r + bh, height), std::min(c + bw, width)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Bytes CompressedFrame::serialize() const {
  ByteWriter w;
  w.tag("RIMC");
  w.u8(kFrameVersion);
  w.u16(header.height);
  w.u16(header.width);
  w.f64(header.precision);
  w.f32(header.max_range);
  w.u8(static_cast<uint8_t>(header.predictor));
  w.u64(header.weight_digest);
  w.u8(header.rounding);
  w.u8(header.flags);
  w.u16(static_cast<uint16_t>(header.layout.block_h));
  w.u16(static_cast<uint16_t>(header.layout.block_w));
  w.u32(static_cast<uint32_t>(mask.size()));
  w.u32(residuals ? static_cast<uint32_t>(residuals->wire_size()) : 0u);
  w.bytes(mask);
  if (residuals) entropy::write_coded_block(w, *residuals);
  w.u32(crc32_of(w.buffer()));
  return w.take();
}

CompressedFrame CompressedFrame::read(ByteReader& r) {
  size_t start = r.position();
  CompressedFrame f;
  r.expect_tag("RIMC");
  uint8_t version = r.u8();
  if (version != kFrameVersion) {
    throw Error(ErrorCode::kCorruptStream, "unsupported frame version " + std::to_string(version));
  }
  FrameHeader& h = f.header;
  h.height = r.u16();
  h.width = r.u16();
  h.precision = r.f64();
  h.max_range = r.f32();
  uint8_t predictor = r.u8();
  if (predictor > 3) throw Error(ErrorCode::kCorruptStream, "unknown predictor id");
  h.predictor = static_cast<PredictorId>(predictor);
  h.weight_digest = r.u64();
  h.rounding = r.u8();
  if (h.rounding != kRoundHalfAwayFromZero) {
    throw Error(ErrorCode::kCorruptStream, "unknown rounding rule");
  }
  h.flags = r.u8();
  h.layout.block_h = r.u16();
  h.layout.block_w = r.u16();
  uint32_t mask_len = r.u32();
  uint32_t residual_len = r.u32();
  auto mask = r.bytes(mask_len);
  f.mask.assign(mask.begin(), mask.end());
  if (residual_len > 0) {
    auto body = r.bytes(residual_len);
    ByteReader br(body);
    f.residuals = entropy::read_coded_block(br);
    if (!br.at_end()) throw Error(ErrorCode::kCorruptStream, "residual block length mismatch");
  }
  size_t end = r.position();
  uint32_t crc = r.u32();
  // Re-serializing reproduces the exact bytes, so the CRC can be checked
  // against the canonical form.
  Bytes canonical = f.serialize();
  if (canonical.size() != end - start + 4 ||
      crc != crc32_of(std::span<const uint8_t>(canonical).first(canonical.size() - 4))) {
    throw Error(ErrorCode::kCorruptStream, "frame checksum mismatch");
  }
  if (!(h.precision > 0.0) || !(h.max_range > 0.0f)) {
    throw Error(ErrorCode::kCorruptStream, "bad precision or max_range in header");
  }
  return f;
}

CompressedFrame CompressedFrame::parse(std::span<const uint8_t> data) {
  ByteReader r(data);
  CompressedFrame f = read(r);
  if (!r.at_end()) throw Error(ErrorCode::kCorruptStream, "trailing bytes after frame");
  return f;
}

size_t CompressedFrame::byte_size() const {
  return kFrameHeaderSize + mask.size() + (residuals ? residuals->wire_size() : 0) + 4;
}

// ---------------------------------------------------------------------------

FrameResiduals compute_residuals(const RangeImage& image, const LidarCalibration& calib,
                                 const PoseTrack& track, const QuantizationSpec& spec,
                                 const PredictorKind& kind, const EncodeOptions& options,
                                 const PreviousFrame* previous) {
  check_dimensions(image, calib, track);
  spec.validate();
  if (image.height > 0xffff || image.width > 0xffff) {
    throw Error(ErrorCode::kDimensionMismatch, "image dimensions exceed 65535");
  }
  if (options.layout.block_h > 0xffff || options.layout.block_w > 0xffff) {
    throw Error(ErrorCode::kInvalidArgument, "block size exceeds 65535");
  }

  FrameResiduals out;
  out.quantized = quantize(image, spec);
  // The decoder only sees max_range as stored in the header.
  out.quantized.max_range = static_cast<float>(image.max_range);
  out.predictions = RangeImage(image.height, image.width, out.quantized.max_range);
  out.predictions.valid = out.quantized.valid;

  std::optional<KdTree> prev_index;
  if (kind.temporal()) {
    if (previous != nullptr) {
      prev_index = index_previous(*previous);
      out.temporal_context = true;
    } else if (!options.intra_fallback) {
      throw Error(ErrorCode::kMissingPreviousFrame, "temporal predictor needs the previous frame");
    }
  }

  std::vector<Window> blocks = options.layout.blocks(image.height, image.width);
  std::vector<entropy::ResidualMap> per_block(blocks.size());
  const RangeImage& q = out.quantized;
  parallel_for(blocks.size(), options.threads, [&](size_t b) {
    DecodingState state{&q, &calib, &track, blocks[b], prev_index ? &*prev_index : nullptr};
    const Window& w = blocks[b];
    for (int i = w.row0; i < w.row1; ++i) {
      for (int j = w.col0; j < w.col1; ++j) {
        if (!q.is_valid(i, j)) continue;
        double pred = predict(kind, state, i, j);
        out.predictions.ranges[q.index(i, j)] = pred;
        int64_t truth = quantize_level(q.at(i, j), spec.precision);
        per_block[b].push_back(truth - quantize_level(pred, spec.precision));
      }
    }
  });
  for (auto& d : per_block) out.deltas.insert(out.deltas.end(), d.begin(), d.end());
  return out;
}

namespace {

CompressedFrame assemble_frame(const FrameResiduals& res, const QuantizationSpec& spec,
                               const PredictorKind& kind, const EncodeOptions& options) {
  CompressedFrame f;
  FrameHeader& h = f.header;
  h.height = static_cast<uint16_t>(res.quantized.height);
  h.width = static_cast<uint16_t>(res.quantized.width);
  h.precision = spec.precision;
  h.max_range = static_cast<float>(res.quantized.max_range);
  h.predictor = kind.id();
  h.weight_digest = kind.digest();
  h.rounding = kRoundHalfAwayFromZero;
  h.flags = res.temporal_context ? kFlagTemporalContext : 0;
  h.layout = options.layout;
  f.mask = entropy::encode_mask(res.quantized.valid);
  if (!res.deltas.empty()) f.residuals = entropy::choose_coder(res.deltas);
  return f;
}

}  // namespace

CompressedFrame encode_frame(const RangeImage& image, const LidarCalibration& calib,
                             const PoseTrack& track, const QuantizationSpec& spec,
                             const PredictorKind& kind, const EncodeOptions& options,
                             const PreviousFrame* previous) {
  return assemble_frame(compute_residuals(image, calib, track, spec, kind, options, previous), spec,
                        kind, options);
}

RangeImage decode_frame(const CompressedFrame& frame, const LidarCalibration& calib,
                        const PoseTrack& track, const WeightRegistry& weights,
                        const PreviousFrame* previous, int threads) {
  const FrameHeader& h = frame.header;
  if (calib.height() != h.height || calib.width() != h.width || track.width() != h.width) {
    throw Error(ErrorCode::kHeaderMismatch,
                "frame is " + std::to_string(h.height) + "x" + std::to_string(h.width) +
                    " but calibration is " + std::to_string(calib.height()) + "x" +
                    std::to_string(calib.width()));
  }
  std::optional<PredictorKind> kind;
  switch (h.predictor) {
    case PredictorId::kPreviousValid: kind = PredictorKind::previous_valid(); break;
    case PredictorId::kLinear: kind = PredictorKind::linear(); break;
    case PredictorId::kAnchorIntra: kind = PredictorKind::anchor_intra(weights.find(h.weight_digest)); break;
    case PredictorId::kAnchorTemporal:
      kind = PredictorKind::anchor_temporal(weights.find(h.weight_digest));
      break;
  }
  std::optional<KdTree> prev_index;
  if (h.flags & kFlagTemporalContext) {
    if (h.predictor != PredictorId::kAnchorTemporal) {
      throw Error(ErrorCode::kCorruptStream, "temporal flag on a non-temporal predictor");
    }
    if (previous == nullptr) {
      throw Error(ErrorCode::kHeaderMismatch, "frame was coded against a previous frame");
    }
    prev_index = index_previous(*previous);
  }

  RangeImage image(h.height, h.width, h.max_range);
  image.precision = h.precision;
  image.valid = entropy::decode_mask(frame.mask, image.size());
  size_t valid = image.valid_count();
  if (frame.valid_count() != valid) {
    throw Error(ErrorCode::kCorruptStream, "residual count does not match the mask");
  }
  entropy::ResidualMap deltas;
  if (frame.residuals) deltas = entropy::decode_residuals(*frame.residuals);
  if (deltas.size() != valid) {
    throw Error(ErrorCode::kCorruptStream, "residual count does not match the mask");
  }

  std::vector<Window> blocks = h.layout.blocks(h.height, h.width);
  std::vector<size_t> offsets(blocks.size() + 1, 0);
  for (size_t b = 0; b < blocks.size(); ++b) offsets[b + 1] = offsets[b] + valid_in(image, blocks[b]);

  const int64_t max_level = static_cast<int64_t>(std::ceil(h.max_range / h.precision)) + 1;
  parallel_for(blocks.size(), threads, [&](size_t b) {
    DecodingState state{&image, &calib, &track, blocks[b], prev_index ? &*prev_index : nullptr};
    const Window& w = blocks[b];
    size_t k = offsets[b];
    for (int i = w.row0; i < w.row1; ++i) {
      for (int j = w.col0; j < w.col1; ++j) {
        if (!image.is_valid(i, j)) continue;
        int64_t level = quantize_level(predict(*kind, state, i, j), h.precision) + deltas[k++];
        if (level < 0 || level > max_level) {
          throw Error(ErrorCode::kCorruptStream, "reconstructed range out of bounds");
        }
        image.ranges[image.index(i, j)] = static_cast<double>(level) * h.precision;
      }
    }
  });
  return image;
}

// ---------------------------------------------------------------------------

std::vector<CompressedFrame> encode_sequence(std::span<const RangeImage> frames,
                                             std::span<const LidarCalibration> calibs,
                                             std::span<const PoseTrack> tracks,
                                             const QuantizationSpec& spec, const PredictorKind& kind,
                                             const EncodeOptions& options) {
  if (calibs.size() != frames.size() || tracks.size() != frames.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one calibration and pose track per frame");
  }
  std::vector<CompressedFrame> out;
  RangeImage previous;
  for (size_t t = 0; t < frames.size(); ++t) {
    EncodeOptions opts = options;
    opts.intra_fallback = true;
    PreviousFrame prev{&previous, &calibs[t > 0 ? t - 1 : 0], &tracks[t > 0 ? t - 1 : 0]};
    bool use_prev = kind.temporal() && t > 0;
    FrameResiduals res = compute_residuals(frames[t], calibs[t], tracks[t], spec, kind, opts,
                                           use_prev ? &prev : nullptr);
    out.push_back(assemble_frame(res, spec, kind, opts));
    // By losslessness the decoder will hold exactly this quantized frame.
    previous = std::move(res.quantized);
  }
  return out;
}

std::vector<RangeImage> decode_sequence(std::span<const CompressedFrame> frames,
                                        std::span<const LidarCalibration> calibs,
                                        std::span<const PoseTrack> tracks,
                                        const WeightRegistry& weights, int threads) {
  if (calibs.size() != frames.size() || tracks.size() != frames.size()) {
    throw Error(ErrorCode::kHeaderMismatch, "one calibration and pose track per frame");
  }
  std::vector<RangeImage> out;
  for (size_t t = 0; t < frames.size(); ++t) {
    PreviousFrame prev;
    if (t > 0) prev = {&out[t - 1], &calibs[t - 1], &tracks[t - 1]};
    RangeImage img = decode_frame(frames[t], calibs[t], tracks[t], weights, t > 0 ? &prev : nullptr,
                                  threads);
    out.push_back(std::move(img));
  }
  return out;
}

Bytes serialize_sequence(std::span<const CompressedFrame> frames) {
  ByteWriter w;
  w.u32(static_cast<uint32_t>(frames.size()));
  for (const auto& f : frames) w.bytes(f.serialize());
  return w.take();
}

std::vector<CompressedFrame> parse_sequence(std::span<const uint8_t> data) {
  ByteReader r(data);
  uint32_t count = r.u32();
  std::vector<CompressedFrame> out;
  for (uint32_t t = 0; t < count; ++t) out.push_back(CompressedFrame::read(r));
  if (!r.at_end()) throw Error(ErrorCode::kCorruptStream, "trailing bytes after sequence");
  return out;
}

double bpp(const CompressedFrame& frame) {
  size_t n = frame.valid_count();
  if (n == 0) throw Error(ErrorCode::kZeroPoints, "frame has no valid pixels");
  return 8.0 * static_cast<double>(frame.byte_size()) / static_cast<double>(n);
}

}  // namespace rimg
