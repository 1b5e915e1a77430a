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

#include "rimg/geometry.h"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <string>

#include "rimg/error.h"

namespace rimg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTieSlack = 1e-9;

size_t nearest_index(std::span<const double> values, double target, bool angular) {
  size_t best = 0;
  double best_dist = INFINITY;
  for (size_t k = 0; k < values.size(); ++k) {
    double d = values[k] - target;
    if (angular) d = wrap_angle(d);
    d = std::abs(d);
    if (d < best_dist) {
      best_dist = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

RangeImage::RangeImage(int h, int w, double max_range_m)
    : height(h),
      width(w),
      ranges(static_cast<size_t>(h) * static_cast<size_t>(w), 0.0),
      valid(static_cast<size_t>(h) * static_cast<size_t>(w), 0),
      max_range(max_range_m) {
  if (h < 0 || w < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative image dimensions");
  }
}

void RangeImage::set(int row, int col, double range) {
  ranges[index(row, col)] = range;
  valid[index(row, col)] = 1;
}

void RangeImage::clear(int row, int col) {
  ranges[index(row, col)] = 0.0;
  valid[index(row, col)] = 0;
}

size_t RangeImage::valid_count() const {
  return static_cast<size_t>(std::count(valid.begin(), valid.end(), uint8_t{1}));
}

void LidarCalibration::validate() const {
  auto strictly_monotonic = [](std::span<const double> v, bool angular) {
    if (v.size() < 2) return true;
    int sign = 0;
    double sweep = 0.0;
    for (size_t k = 1; k < v.size(); ++k) {
      double d = v[k] - v[k - 1];
      if (angular) d = wrap_angle(d);
      if (d == 0.0) return false;
      int s = d > 0 ? 1 : -1;
      if (sign != 0 && s != sign) return false;
      sign = s;
      sweep += std::abs(d);
    }
    return !angular || sweep < 2.0 * kPi;
  };
  if (!strictly_monotonic(elevations, false)) {
    throw Error(ErrorCode::kInvalidArgument, "elevations are not strictly monotonic");
  }
  if (!strictly_monotonic(azimuths, true)) {
    throw Error(ErrorCode::kInvalidArgument,
                "azimuths are not strictly monotonic modulo 2*pi");
  }
  if (!(max_range > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "max_range must be positive");
  }
}

LidarCalibration LidarCalibration::uniform(int height, int width, double max_elevation,
                                           double min_elevation, double max_range) {
  LidarCalibration calib;
  calib.max_range = max_range;
  calib.elevations.resize(static_cast<size_t>(height));
  for (int i = 0; i < height; ++i) {
    double t = height > 1 ? static_cast<double>(i) / (height - 1) : 0.0;
    calib.elevations[static_cast<size_t>(i)] = max_elevation + t * (min_elevation - max_elevation);
  }
  calib.azimuths.resize(static_cast<size_t>(width));
  for (int j = 0; j < width; ++j) {
    calib.azimuths[static_cast<size_t>(j)] = kPi - (j + 0.5) * 2.0 * kPi / width;
  }
  return calib;
}

void Pose::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "pose has non-finite entries");
  }
  double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "pose rotation is not a proper rotation");
  }
}

Pose Pose::from_yaw(double yaw, const Vec3& translation) {
  Pose pose;
  pose.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  pose.translation = translation;
  return pose;
}

PoseTrack PoseTrack::constant(int width, const Pose& pose) {
  return PoseTrack{std::vector<Pose>(static_cast<size_t>(width), pose)};
}

void QuantizationSpec::validate() const {
  if (!(precision >= kMinPrecision && precision <= kMaxPrecision)) {
    throw Error(ErrorCode::kInvalidArgument,
                "quantization precision " + std::to_string(precision) +
                    " outside [1e-4, 0.5]");
  }
}

Vec3 unproject(double range, double azimuth, double elevation) {
  double c = std::cos(elevation);
  return {range * c * std::cos(azimuth), range * c * std::sin(azimuth),
          range * std::sin(elevation)};
}

Spherical project(const Vec3& point) {
  double range = point.norm();
  if (range < 1e-12) {
    throw Error(ErrorCode::kZeroRange, "cannot project the sensor origin");
  }
  double planar = std::hypot(point.x(), point.y());
  Spherical s;
  s.range = range;
  s.elevation = std::atan2(point.z(), planar);
  s.azimuth = planar / range < 1e-12 ? 0.0 : std::atan2(point.y(), point.x());
  // atan2 yields [-pi, pi]; fold -pi onto +pi.
  if (s.azimuth == -kPi) s.azimuth = kPi;
  return s;
}

Vec3 to_global(const Vec3& point, const Pose& pose) {
  return pose.rotation * point + pose.translation;
}

Vec3 to_sensor(const Vec3& point, const Pose& pose) {
  return pose.rotation.transpose() * (point - pose.translation);
}

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

void check_dimensions(const RangeImage& image, const LidarCalibration& calib,
                      const PoseTrack& track) {
  if (image.height != calib.height() || image.width != calib.width() ||
      image.width != track.width()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                    ", calibration " + std::to_string(calib.height()) + "x" +
                    std::to_string(calib.width()) + ", pose track " +
                    std::to_string(track.width()) + " columns");
  }
  if (image.ranges.size() != image.size() || image.valid.size() != image.ranges.size() ||
      image.ranges.size() != static_cast<size_t>(image.height) * static_cast<size_t>(image.width)) {
    throw Error(ErrorCode::kDimensionMismatch, "image buffers do not match H x W");
  }
}

std::vector<Vec3> image_to_point_cloud(const RangeImage& image, const LidarCalibration& calib,
                                       const PoseTrack& track) {
  check_dimensions(image, calib, track);
  std::vector<Vec3> points;
  points.reserve(image.valid_count());
  for (int i = 0; i < image.height; ++i) {
    for (int j = 0; j < image.width; ++j) {
      if (!image.is_valid(i, j)) continue;
      Vec3 p = unproject(image.at(i, j), calib.azimuths[static_cast<size_t>(j)],
                         calib.elevations[static_cast<size_t>(i)]);
      points.push_back(to_global(p, track.poses[static_cast<size_t>(j)]));
    }
  }
  return points;
}

RangeImage point_cloud_to_image(std::span<const Vec3> points, std::span<const int> columns,
                                const LidarCalibration& calib, const PoseTrack& track,
                                double precision) {
  if (points.size() != columns.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one column index per point is required");
  }
  if (track.width() != calib.width()) {
    throw Error(ErrorCode::kDimensionMismatch, "pose track width differs from calibration");
  }
  RangeImage image(calib.height(), calib.width(), calib.max_range);
  image.precision = precision > 0.0 ? precision : 0.0;
  for (size_t k = 0; k < points.size(); ++k) {
    int shot_col = columns[k];
    if (shot_col < 0 || shot_col >= calib.width()) {
      throw Error(ErrorCode::kDimensionMismatch, "column index out of range");
    }
    Spherical s = project(to_sensor(points[k], track.poses[static_cast<size_t>(shot_col)]));
    int row = static_cast<int>(nearest_index(calib.elevations, s.elevation, false));
    int col = static_cast<int>(nearest_index(calib.azimuths, s.azimuth, true));
    double r = s.range;
    if (precision > 0.0) r = static_cast<double>(quantize_level(r, precision)) * precision;
    image.set(row, col, r);
  }
  return image;
}

int64_t quantize_level(double range, double precision) {
  double q = std::abs(range) / precision;
  double f = std::floor(q);
  int64_t level = static_cast<int64_t>(f);
  if (q - f >= 0.5 - kTieSlack) ++level;
  return range < 0.0 ? -level : level;
}

RangeImage quantize(const RangeImage& image, const QuantizationSpec& spec) {
  if (!(spec.precision > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "quantization precision must be positive");
  }
  RangeImage out = image;
  out.precision = spec.precision;
  for (size_t k = 0; k < out.ranges.size(); ++k) {
    out.ranges[k] = out.valid[k]
                        ? static_cast<double>(quantize_level(image.ranges[k], spec.precision)) *
                              spec.precision
                        : 0.0;
  }
  return out;
}

}  // namespace rimg
