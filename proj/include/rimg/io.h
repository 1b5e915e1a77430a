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

#include <span>
#include <string>

#include "rimg/bytes.h"
#include "rimg/geometry.h"

namespace rimg {

// Range-image container ("RIMG"), little-endian:
//
//   char[4] magic      "RIMG"
//   u8      version    1
//   u16     H, u16 W
//   f64     precision  0 = unquantized
//   f32     max_range
//   f32     ranges[H*W]  row-major, 0 at invalid pixels
//   u8      mask[ceil(H*W/8)]  row-major, pixel k is bit (k % 8) of byte k/8
//
// On import, valid ranges above max_range are cropped to invalid. For a
// quantized file the stored floats are snapped back to their integer level so
// the in-memory image holds exact level * precision values.
inline constexpr uint8_t kRangeImageVersion = 1;

Bytes serialize_range_image(const RangeImage& image);
RangeImage parse_range_image(std::span<const uint8_t> data);

RangeImage read_range_image(const std::string& path);
void write_range_image(const std::string& path, const RangeImage& image);

// Calibration and per-column pose track of one frame, stored as JSON:
//
//   {
//     "elevations": [rad, ...],          // H entries, top row first
//     "azimuths":   [rad, ...],          // W entries
//     "max_range":  75.0,
//     "poses": [ {"q": [w, x, y, z], "t": [x, y, z]}, ... ]   // W entries
//   }
//
// "poses" may be omitted, meaning an identity pose for every column.
struct FrameGeometry {
  LidarCalibration calib;
  PoseTrack track;
};

std::string serialize_frame_geometry(const FrameGeometry& geometry);
FrameGeometry parse_frame_geometry(const std::string& text);

FrameGeometry read_frame_geometry(const std::string& path);
void write_frame_geometry(const std::string& path, const FrameGeometry& geometry);

}  // namespace rimg
