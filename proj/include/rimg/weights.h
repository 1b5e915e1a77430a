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
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rimg/bytes.h"

namespace rimg {

enum class LayerKind : uint8_t {
  kDense = 0,      // on the pooled global vector
  kPointwise = 1,  // shared across points
  kMaxPool = 2,    // per-point features -> global vector
  kConcat = 3,     // per point: [local, global]
};

// Parameterized layers (dense, pointwise) hold a rows x cols row-major
// matrix (rows = output width, cols = input width) and `rows` biases.
// Max-pool carries rows = cols = pooled width and no parameters. Concat
// carries rows = output width and cols = index of the pointwise layer whose
// per-point output is the local feature; it has no parameters either.
struct Layer {
  LayerKind kind = LayerKind::kPointwise;
  uint32_t rows = 0;
  uint32_t cols = 0;
  std::vector<float> weights;
  std::vector<float> biases;

  bool has_parameters() const { return kind == LayerKind::kDense || kind == LayerKind::kPointwise; }
  bool operator==(const Layer&) const = default;
};

// Anchor predictor weights.
//
// Layout of `layers`: a trunk that ends with the single concat layer, then
// the logit head, then the residual head. The two heads get equal halves of
// the layers after the concat, are pointwise only and end in width 1, giving
// one logit and one residual per context point. ReLU follows every
// parameterized layer except the last layer of each head.
//
// Point features are (d_azimuth, d_elevation, (range - mean) / normalization)
// plus the time channel when input_dim is 4. Residual outputs are scaled by
// `normalization` back to meters.
struct WeightBundle {
  uint8_t input_dim = 3;
  uint16_t num_anchors = 99;
  float normalization = 75.0f;
  std::vector<Layer> layers;

  // Throws WeightShapeMismatch when the widths do not chain.
  void validate() const;

  size_t concat_index() const;
  size_t head_depth() const { return (layers.size() - concat_index() - 1) / 2; }

  bool operator==(const WeightBundle&) const = default;
};

// "RWGT" file, little-endian: magic, version u8, input_dim u8, num_anchors
// u16, normalization f32, layer count u8, then per layer: kind u8, rows u32,
// cols u32, f32 weights row-major, f32 biases.
inline constexpr uint8_t kWeightBundleVersion = 1;

Bytes serialize_weights(const WeightBundle& bundle);
WeightBundle parse_weights(std::span<const uint8_t> data);
WeightBundle read_weights(const std::string& path);
void write_weights(const std::string& path, const WeightBundle& bundle);

// First eight bytes of SHA-256 over the serialized bundle, little-endian.
uint64_t weight_digest(const WeightBundle& bundle);
std::string digest_hex(uint64_t digest);

// Bundles addressable by digest, as the decoder needs them.
class WeightRegistry {
 public:
  uint64_t add(WeightBundle bundle);
  // Loads every *.rwgt file in a directory.
  void add_directory(const std::string& dir);
  // Throws UnknownWeights when the digest is not registered.
  std::shared_ptr<const WeightBundle> find(uint64_t digest) const;
  size_t size() const { return bundles_.size(); }

 private:
  std::map<uint64_t, std::shared_ptr<const WeightBundle>> bundles_;
};

}  // namespace rimg
