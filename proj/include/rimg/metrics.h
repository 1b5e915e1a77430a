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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rimg/geometry.h"

namespace rimg {

inline constexpr size_t kNormalNeighbors = 12;

// Mean distance from each point of p to its nearest neighbor in q. Exact.
// Throws EmptyCloud if either cloud is empty.
double chamfer(std::span<const Vec3> p, std::span<const Vec3> q);

// max(chamfer(p, q), chamfer(q, p)).
double chamfer_sym(std::span<const Vec3> p, std::span<const Vec3> q);

// Unit normal per point: eigenvector of the smallest eigenvalue of the
// covariance of its k nearest other points. The sign is arbitrary.
// Throws TooFewPoints unless |p| >= k + 1.
std::vector<Vec3> estimate_normals(std::span<const Vec3> p, size_t k = kNormalNeighbors);

// Largest nearest-neighbor gap within p. Throws TooFewPoints if |p| < 2.
double intrinsic_resolution(std::span<const Vec3> p);

struct Psnr {
  double db = 0.0;  // +inf when `infinite`
  bool infinite = false;
};

// Point-to-plane PSNR against the intrinsic resolution of p. Each direction
// uses normals estimated in its own source cloud; the worse direction wins.
// Throws TooFewPoints unless both clouds hold at least k + 1 points.
Psnr psnr(std::span<const Vec3> p, std::span<const Vec3> q, size_t k = kNormalNeighbors);

// Fraction of valid pixels with |pred - truth| < precision / 2. Throws
// DimensionMismatch if sizes or masks differ, ZeroPoints if nothing is valid.
double prediction_accuracy(const RangeImage& pred, const RangeImage& truth, double precision);

// JSON schema:
//
//   {
//     "cd_sym": 0.0123,               // meters
//     "psnr": 71.5,                   // dB, null when infinite
//     "psnr_infinite": false,
//     "bpp": 3.2,                     // null when not measured
//     "accuracy_at": {"0.1": 0.61}    // precision (shortest decimal) -> fraction
//   }
struct MetricReport {
  double cd_sym = 0.0;
  Psnr psnr;
  std::optional<double> bpp;
  std::map<double, double> accuracy_at;

  std::string to_json() const;
  static MetricReport from_json(const std::string& text);
  bool operator==(const MetricReport& o) const;
};

// Shortest decimal string that parses back to `v`.
std::string format_double(double v);

}  // namespace rimg
