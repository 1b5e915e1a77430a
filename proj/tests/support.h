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

// Fixtures and independent oracles shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "rimg/geometry.h"
#include "rimg/scene.h"
#include "rimg/spatial.h"
#include "rimg/weights.h"

namespace rimg::testing {

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

// Small sensor with the default vertical field of view.
inline LidarCalibration small_calibration(int h = 16, int w = 128) {
  return LidarCalibration::uniform(h, w, deg(2.4), deg(-17.6));
}

inline scene::SceneSpec small_scene(scene::SceneKind kind, uint64_t seed, int h = 16, int w = 128) {
  scene::SceneSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  spec.lidar = small_calibration(h, w);
  return spec;
}

// Random image: each pixel valid with probability `density`, ranges uniform
// in [lo, hi].
inline RangeImage random_image(std::mt19937_64& rng, int h, int w, double density = 0.9,
                               double lo = 1.0, double hi = 70.0) {
  RangeImage img(h, w);
  std::uniform_real_distribution<double> range(lo, hi);
  std::bernoulli_distribution valid(density);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double r = range(rng);
      if (valid(rng)) img.set(i, j, r);
    }
  }
  return img;
}

// O(N) scan ordered by (distance, index).
inline std::vector<Neighbor> brute_force_knn(const std::vector<Vec3>& pts, const Vec3& q, size_t k) {
  std::vector<Neighbor> all;
  all.reserve(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    Vec3 d = pts[i] - q;
    all.push_back({static_cast<uint32_t>(i), d.x() * d.x() + d.y() * d.y() + d.z() * d.z()});
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

// O(NM) Chamfer distance with a plain running sum.
inline double brute_force_chamfer(const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
  long double sum = 0.0L;
  for (const Vec3& a : p) {
    double best = INFINITY;
    for (const Vec3& b : q) best = std::min(best, (a - b).norm());
    sum += best;
  }
  return static_cast<double>(sum / static_cast<long double>(p.size()));
}

inline Layer pointwise_layer(uint32_t rows, uint32_t cols, std::vector<float> w, std::vector<float> b) {
  return {LayerKind::kPointwise, rows, cols, std::move(w), std::move(b)};
}

// Hand-set network: logit = -(|d_azimuth| + |d_elevation|), residual = 0,
// so it always picks the context point closest in angle, lowest index
// first on ties. With input_dim 4 the time channel is ignored.
inline WeightBundle nearest_angle_bundle(uint8_t input_dim = 3) {
  WeightBundle b;
  b.input_dim = input_dim;
  b.num_anchors = input_dim == 3 ? 99 : 199;
  b.normalization = 75.0f;
  std::vector<float> w0(4 * input_dim, 0.0f);
  w0[0 * input_dim + 0] = 1.0f;
  w0[1 * input_dim + 0] = -1.0f;
  w0[2 * input_dim + 1] = 1.0f;
  w0[3 * input_dim + 1] = -1.0f;
  b.layers.push_back(pointwise_layer(4, input_dim, w0, {0, 0, 0, 0}));
  b.layers.push_back({LayerKind::kMaxPool, 4, 4, {}, {}});
  b.layers.push_back({LayerKind::kConcat, 8, 0, {}, {}});
  b.layers.push_back(pointwise_layer(1, 8, {-1, -1, -1, -1, 0, 0, 0, 0}, {0}));
  b.layers.push_back(pointwise_layer(1, 8, {0, 0, 0, 0, 0, 0, 0, 0}, {0}));
  return b;
}

// Random bundle with a dense layer after pooling and two-layer heads.
inline WeightBundle random_bundle(std::mt19937_64& rng, uint8_t input_dim, uint16_t anchors,
                                  float scale = 0.5f) {
  std::uniform_real_distribution<float> u(-scale, scale);
  auto fill = [&](size_t n) {
    std::vector<float> v(n);
    for (float& x : v) x = u(rng);
    return v;
  };
  WeightBundle b;
  b.input_dim = input_dim;
  b.num_anchors = anchors;
  b.normalization = 75.0f;
  b.layers.push_back(pointwise_layer(8, input_dim, fill(8 * input_dim), fill(8)));
  b.layers.push_back(pointwise_layer(6, 8, fill(48), fill(6)));
  b.layers.push_back({LayerKind::kMaxPool, 6, 6, {}, {}});
  b.layers.push_back({LayerKind::kDense, 5, 6, fill(30), fill(5)});
  b.layers.push_back({LayerKind::kConcat, 11, 1, {}, {}});
  b.layers.push_back(pointwise_layer(4, 11, fill(44), fill(4)));
  b.layers.push_back(pointwise_layer(1, 4, fill(4), fill(1)));
  b.layers.push_back(pointwise_layer(4, 11, fill(44), fill(4)));
  b.layers.push_back(pointwise_layer(1, 4, fill(4), fill(1)));
  return b;
}

inline std::shared_ptr<const WeightBundle> shared(WeightBundle b) {
  return std::make_shared<const WeightBundle>(std::move(b));
}

}  // namespace rimg::testing
