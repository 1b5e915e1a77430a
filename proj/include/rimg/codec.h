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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rimg/bytes.h"
#include "rimg/entropy.h"
#include "rimg/geometry.h"
#include "rimg/predictor.h"
#include "rimg/weights.h"

namespace rimg {

// Tiling of the image into independently predicted blocks. A zero extent
// means the whole image along that axis. Edge blocks may be smaller.
struct BlockLayout {
  int block_h = 16;
  int block_w = 50;

  static BlockLayout whole() { return {0, 0}; }
  std::vector<Window> blocks(int height, int width) const;
  bool operator==(const BlockLayout&) const = default;
};

inline constexpr uint8_t kFrameVersion = 1;
inline constexpr uint8_t kRoundHalfAwayFromZero = 1;

enum FrameFlags : uint8_t {
  kFlagIntraReprojection = 1 << 0,  // never set: current-frame angles come from calibration
  kFlagTemporalContext = 1 << 1,    // previous frame was used as context
};

// Compressed frame layout, little-endian:
//
//   char[4] magic "RIMC"       u8  version
//   u16 H, u16 W               f64 precision          f32 max_range
//   u8  predictor id           u64 weight digest (0 for the baselines)
//   u8  rounding rule id       u8  flags
//   u16 block_h, u16 block_w   (0 = whole image)
//   u32 mask_len               u32 residual_len (0 = no valid pixels)
//   mask payload               residual CodedBlock
//   u32 CRC-32 of every preceding byte of the frame
//
// Residuals of all blocks are concatenated in row-major block order, each
// block in raster order over its valid pixels, and coded as one CodedBlock.
struct FrameHeader {
  uint16_t height = 0;
  uint16_t width = 0;
  double precision = 0.0;
  float max_range = 0.0f;
  PredictorId predictor = PredictorId::kPreviousValid;
  uint64_t weight_digest = 0;
  uint8_t rounding = kRoundHalfAwayFromZero;
  uint8_t flags = 0;
  BlockLayout layout;

  bool operator==(const FrameHeader&) const = default;
};

inline constexpr size_t kFrameHeaderSize = 44;

struct CompressedFrame {
  FrameHeader header;
  Bytes mask;
  std::optional<entropy::CodedBlock> residuals;

  Bytes serialize() const;
  static CompressedFrame parse(std::span<const uint8_t> data);
  // Reads one frame from the front of `r`.
  static CompressedFrame read(ByteReader& r);
  size_t byte_size() const;
  size_t valid_count() const { return residuals ? residuals->symbol_count : 0; }

  bool operator==(const CompressedFrame&) const = default;
};

// Decoded previous frame, used as temporal context.
struct PreviousFrame {
  const RangeImage* image = nullptr;
  const LidarCalibration* calib = nullptr;
  const PoseTrack* track = nullptr;
};

struct EncodeOptions {
  BlockLayout layout;
  int threads = 1;
  // Lets a temporal predictor run without a previous frame (first frame of
  // a sequence); otherwise that is a MissingPreviousFrame error.
  bool intra_fallback = false;
};

// Per-pixel view of the predict-and-delta stage.
struct FrameResiduals {
  RangeImage quantized;         // the frame being coded
  RangeImage predictions;       // unquantized prediction at each valid pixel
  entropy::ResidualMap deltas;  // block order, raster within each block
  bool temporal_context = false;
};

FrameResiduals compute_residuals(const RangeImage& image, const LidarCalibration& calib,
                                 const PoseTrack& track, const QuantizationSpec& spec,
                                 const PredictorKind& kind, const EncodeOptions& options,
                                 const PreviousFrame* previous = nullptr);

CompressedFrame encode_frame(const RangeImage& image, const LidarCalibration& calib,
                             const PoseTrack& track, const QuantizationSpec& spec,
                             const PredictorKind& kind, const EncodeOptions& options,
                             const PreviousFrame* previous = nullptr);

RangeImage decode_frame(const CompressedFrame& frame, const LidarCalibration& calib,
                        const PoseTrack& track, const WeightRegistry& weights,
                        const PreviousFrame* previous = nullptr, int threads = 1);

// Frame t > 0 uses the decoded frame t - 1 as temporal context; frame 0 of a
// temporal sequence falls back to intra prediction.
std::vector<CompressedFrame> encode_sequence(std::span<const RangeImage> frames,
                                             std::span<const LidarCalibration> calibs,
                                             std::span<const PoseTrack> tracks,
                                             const QuantizationSpec& spec, const PredictorKind& kind,
                                             const EncodeOptions& options);

std::vector<RangeImage> decode_sequence(std::span<const CompressedFrame> frames,
                                        std::span<const LidarCalibration> calibs,
                                        std::span<const PoseTrack> tracks,
                                        const WeightRegistry& weights, int threads = 1);

// Sequence file: u32 frame count, then the frames back to back.
Bytes serialize_sequence(std::span<const CompressedFrame> frames);
std::vector<CompressedFrame> parse_sequence(std::span<const uint8_t> data);

// Serialized bits per valid pixel. Throws ZeroPoints for an empty frame.
double bpp(const CompressedFrame& frame);

}  // namespace rimg
