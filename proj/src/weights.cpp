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

#include "rimg/weights.h"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "rimg/error.h"

namespace rimg {

namespace {

[[noreturn]] void shape_error(const std::string& what) {
  throw Error(ErrorCode::kWeightShapeMismatch, what);
}

std::string layer_name(size_t k) { return "layer " + std::to_string(k); }

}  // namespace

size_t WeightBundle::concat_index() const {
  for (size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].kind == LayerKind::kConcat) return k;
  }
  shape_error("bundle has no concat layer");
}

void WeightBundle::validate() const {
  if (input_dim != 3 && input_dim != 4) shape_error("input_dim must be 3 or 4");
  if (num_anchors == 0) shape_error("num_anchors must be positive");
  if (!(normalization > 0.0f) || !std::isfinite(normalization)) {
    shape_error("normalization must be positive");
  }
  for (size_t k = 0; k < layers.size(); ++k) {
    const Layer& l = layers[k];
    size_t nw = l.has_parameters() ? static_cast<size_t>(l.rows) * l.cols : 0;
    size_t nb = l.has_parameters() ? l.rows : 0;
    if (l.weights.size() != nw || l.biases.size() != nb) {
      shape_error(layer_name(k) + " parameter count does not match its shape");
    }
    if (l.has_parameters() && (l.rows == 0 || l.cols == 0)) shape_error(layer_name(k) + " is empty");
  }

  size_t concat = concat_index();
  // Per-layer output width for pointwise layers in the trunk, to resolve
  // the concat's local-feature reference.
  std::vector<int64_t> pointwise_width(layers.size(), -1);
  uint32_t width = input_dim;
  bool pooled = false;
  uint32_t global_width = 0;
  for (size_t k = 0; k < concat; ++k) {
    const Layer& l = layers[k];
    switch (l.kind) {
      case LayerKind::kPointwise:
        if (pooled) shape_error(layer_name(k) + ": pointwise layer after max-pool");
        if (l.cols != width) shape_error(layer_name(k) + ": input width mismatch");
        width = l.rows;
        pointwise_width[k] = width;
        break;
      case LayerKind::kMaxPool:
        if (pooled) shape_error(layer_name(k) + ": second max-pool");
        if (l.rows != width || l.cols != width) shape_error(layer_name(k) + ": pool width mismatch");
        pooled = true;
        global_width = width;
        break;
      case LayerKind::kDense:
        if (!pooled) shape_error(layer_name(k) + ": dense layer before max-pool");
        if (l.cols != global_width) shape_error(layer_name(k) + ": input width mismatch");
        global_width = l.rows;
        break;
      case LayerKind::kConcat:
        break;
    }
  }
  if (!pooled) shape_error("trunk has no max-pool before concat");
  const Layer& cat = layers[concat];
  if (cat.cols >= concat || pointwise_width[cat.cols] < 0) {
    shape_error("concat must reference a trunk pointwise layer before it");
  }
  uint32_t concat_width = static_cast<uint32_t>(pointwise_width[cat.cols]) + global_width;
  if (cat.rows != concat_width) shape_error("concat width mismatch");

  size_t head_layers = layers.size() - concat - 1;
  if (head_layers == 0 || head_layers % 2 != 0) {
    shape_error("the two heads need an equal, non-zero number of layers");
  }
  size_t depth = head_layers / 2;
  for (size_t head = 0; head < 2; ++head) {
    uint32_t w = concat_width;
    for (size_t d = 0; d < depth; ++d) {
      size_t k = concat + 1 + head * depth + d;
      const Layer& l = layers[k];
      if (l.kind != LayerKind::kPointwise) shape_error(layer_name(k) + ": heads are pointwise only");
      if (l.cols != w) shape_error(layer_name(k) + ": input width mismatch");
      w = l.rows;
    }
    if (w != 1) shape_error("each head must end in width 1");
  }
}

Bytes serialize_weights(const WeightBundle& bundle) {
  if (bundle.layers.size() > 255) throw Error(ErrorCode::kInvalidArgument, "too many layers");
  ByteWriter w;
  w.tag("RWGT");
  w.u8(kWeightBundleVersion);
  w.u8(bundle.input_dim);
  w.u16(bundle.num_anchors);
  w.f32(bundle.normalization);
  w.u8(static_cast<uint8_t>(bundle.layers.size()));
  for (const Layer& l : bundle.layers) {
    w.u8(static_cast<uint8_t>(l.kind));
    w.u32(l.rows);
    w.u32(l.cols);
    for (float v : l.weights) w.f32(v);
    for (float v : l.biases) w.f32(v);
  }
  return w.take();
}

WeightBundle parse_weights(std::span<const uint8_t> data) {
  ByteReader r(data);
  r.expect_tag("RWGT");
  if (r.u8() != kWeightBundleVersion) throw Error(ErrorCode::kCorruptStream, "unsupported RWGT version");
  WeightBundle bundle;
  bundle.input_dim = r.u8();
  bundle.num_anchors = r.u16();
  bundle.normalization = r.f32();
  size_t count = r.u8();
  for (size_t k = 0; k < count; ++k) {
    Layer l;
    uint8_t kind = r.u8();
    if (kind > 3) throw Error(ErrorCode::kCorruptStream, "unknown layer kind " + std::to_string(kind));
    l.kind = static_cast<LayerKind>(kind);
    l.rows = r.u32();
    l.cols = r.u32();
    if (l.has_parameters()) {
      uint64_t nw = static_cast<uint64_t>(l.rows) * l.cols;
      if (nw * 4 > r.remaining()) throw Error(ErrorCode::kCorruptStream, "layer weights truncated");
      l.weights.resize(nw);
      for (float& v : l.weights) v = r.f32();
      if (static_cast<uint64_t>(l.rows) * 4 > r.remaining()) {
        throw Error(ErrorCode::kCorruptStream, "layer biases truncated");
      }
      l.biases.resize(l.rows);
      for (float& v : l.biases) v = r.f32();
    }
    bundle.layers.push_back(std::move(l));
  }
  if (!r.at_end()) throw Error(ErrorCode::kCorruptStream, "trailing bytes after RWGT payload");
  bundle.validate();
  return bundle;
}

WeightBundle read_weights(const std::string& path) { return parse_weights(read_file(path)); }

void write_weights(const std::string& path, const WeightBundle& bundle) {
  write_file(path, serialize_weights(bundle));
}

uint64_t weight_digest(const WeightBundle& bundle) {
  Bytes bytes = serialize_weights(bundle);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1 || len < 8) {
    throw Error(ErrorCode::kInvalidArgument, "SHA-256 digest failed");
  }
  uint64_t d = 0;
  for (int k = 0; k < 8; ++k) d |= static_cast<uint64_t>(md[k]) << (8 * k);
  return d;
}

std::string digest_hex(uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

uint64_t WeightRegistry::add(WeightBundle bundle) {
  bundle.validate();
  uint64_t d = weight_digest(bundle);
  bundles_[d] = std::make_shared<const WeightBundle>(std::move(bundle));
  return d;
}

void WeightRegistry::add_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot list " + dir);
  for (const auto& entry : it) {
    if (entry.is_regular_file() && entry.path().extension() == ".rwgt") {
      add(read_weights(entry.path().string()));
    }
  }
}

std::shared_ptr<const WeightBundle> WeightRegistry::find(uint64_t digest) const {
  auto it = bundles_.find(digest);
  if (it == bundles_.end()) {
    throw Error(ErrorCode::kUnknownWeights, "no weight bundle with digest " + digest_hex(digest));
  }
  return it->second;
}

}  // namespace rimg
