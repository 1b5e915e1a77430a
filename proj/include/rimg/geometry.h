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

#include <Eigen/Core>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace rimg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDefaultMaxRange = 75.0;
inline constexpr double kMinPrecision = 1e-4;
inline constexpr double kMaxPrecision = 0.5;

// H x W grid of ranges in meters, row-major; rows are laser beams, columns
// are azimuth steps. `valid` is authoritative: invalid pixels carry range 0
// and are never read. A quantized image has precision > 0 and every valid
// range equal to level * precision for an integer level >= 0 (which may sit
// up to precision/2 above max_range).
struct RangeImage {
  int height = 0;
  int width = 0;
  std::vector<double> ranges;
  std::vector<uint8_t> valid;
  double precision = 0.0;  // 0 = unquantized
  double max_range = kDefaultMaxRange;

  RangeImage() = default;
  RangeImage(int h, int w, double max_range_m = kDefaultMaxRange);

  size_t index(int row, int col) const {
    return static_cast<size_t>(row) * static_cast<size_t>(width) + static_cast<size_t>(col);
  }
  size_t size() const { return ranges.size(); }
  double at(int row, int col) const { return ranges[index(row, col)]; }
  bool is_valid(int row, int col) const { return valid[index(row, col)] != 0; }
  void set(int row, int col, double range);
  void clear(int row, int col);
  size_t valid_count() const;
  bool quantized() const { return precision > 0.0; }

  bool operator==(const RangeImage&) const = default;
};

// Per-row beam elevations and per-column azimuths, radians.
struct LidarCalibration {
  std::vector<double> elevations;
  std::vector<double> azimuths;
  double max_range = kDefaultMaxRange;

  int height() const { return static_cast<int>(elevations.size()); }
  int width() const { return static_cast<int>(azimuths.size()); }

  // Throws InvalidArgument unless elevations are strictly monotonic and
  // azimuths strictly monotonic modulo 2*pi.
  void validate() const;

  // Evenly spaced beams over [min_elevation, max_elevation] (top row = max),
  // and azimuths sweeping clockwise from +pi like a spinning sensor.
  static LidarCalibration uniform(int height, int width, double max_elevation,
                                  double min_elevation,
                                  double max_range = kDefaultMaxRange);
};

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  // Throws InvalidArgument unless rotation is orthonormal with det +1 (1e-9).
  void validate() const;

  static Pose identity() { return {}; }
  static Pose from_yaw(double yaw, const Vec3& translation);
};

// One pose per image column: all beams of a column fire together.
struct PoseTrack {
  std::vector<Pose> poses;

  static PoseTrack constant(int width, const Pose& pose = Pose::identity());
  int width() const { return static_cast<int>(poses.size()); }
};

struct QuantizationSpec {
  double precision = 0.1;

  // Throws InvalidArgument outside [kMinPrecision, kMaxPrecision].
  void validate() const;
};

struct Spherical {
  double range = 0.0;
  double azimuth = 0.0;
  double elevation = 0.0;
};

// (r cos(a) cos(t), r cos(a) sin(t), r sin(a)) for azimuth t, elevation a.
Vec3 unproject(double range, double azimuth, double elevation);

// Inverse of unproject; azimuth in (-pi, pi], elevation in [-pi/2, pi/2].
// Azimuth is defined as 0 on the poles. Throws ZeroRange at the origin.
Spherical project(const Vec3& point);

Vec3 to_global(const Vec3& point, const Pose& pose);
Vec3 to_sensor(const Vec3& point, const Pose& pose);

// Wraps an angle difference into (-pi, pi].
double wrap_angle(double angle);

// Valid pixels of the image as global-frame points, raster order.
std::vector<Vec3> image_to_point_cloud(const RangeImage& image,
                                       const LidarCalibration& calib,
                                       const PoseTrack& track);

// Inverse of image_to_point_cloud: each global point is moved back into the
// sensor frame of the column it was shot from (`columns[k]`), converted to
// spherical coordinates and binned to the nearest beam row and azimuth
// column. Ranges are re-quantized to `precision` when it is positive.
RangeImage point_cloud_to_image(std::span<const Vec3> points,
                                std::span<const int> columns,
                                const LidarCalibration& calib,
                                const PoseTrack& track, double precision);

// Quantization level of a range: round(range / precision), ties away from
// zero. Quotients within 1e-9 of a half step count as ties so that decimal
// inputs such as 10.05 at 0.1 behave as written.
int64_t quantize_level(double range, double precision);

// Replaces every valid range by precision * quantize_level(range).
RangeImage quantize(const RangeImage& image, const QuantizationSpec& spec);

void check_dimensions(const RangeImage& image, const LidarCalibration& calib,
                      const PoseTrack& track);

}  // namespace rimg
