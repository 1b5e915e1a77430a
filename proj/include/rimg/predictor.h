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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rimg/geometry.h"
#include "rimg/spatial.h"
#include "rimg/weights.h"

namespace rimg {

inline constexpr int kPatchRows = 10;
inline constexpr int kPatchCols = 10;
inline constexpr size_t kTemporalNeighborsPerQuery = 50;

// Half-open pixel rectangle [row0, row1) x [col0, col1). Prediction never
// reads outside it; the codec passes one block at a time.
struct Window {
  int row0 = 0;
  int col0 = 0;
  int row1 = 0;
  int col1 = 0;

  static Window whole(const RangeImage& image) { return {0, 0, image.height, image.width}; }
  bool contains(int row, int col) const {
    return row >= row0 && row < row1 && col >= col0 && col < col1;
  }
};

struct ContextPoint {
  double d_azimuth = 0.0;    // radians, relative to the target shot
  double d_elevation = 0.0;  // radians, relative to the target shot
  double rel_range = 0.0;    // meters, relative to mean_range
  uint8_t time = 0;          // 0 = current frame, 1 = previous frame
};

// Context of one target pixel. anchor_ranges[k] == points[k].rel_range +
// mean_range. Current-frame points come first, in raster order.
struct ContextPointSet {
  std::vector<ContextPoint> points;
  std::vector<double> anchor_ranges;
  double mean_range = 0.0;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void add(const ContextPoint& p, double anchor_range);
  // Recomputes mean_range over all points and rewrites rel_range.
  void recenter();
};

struct PredictorOutput {
  std::vector<double> anchor_logits;     // num_anchors slots, -inf past ctx.size()
  std::vector<double> anchor_residuals;  // meters
  size_t anchor = 0;
  double predicted_range = 0.0;
};

enum class PredictorId : uint8_t {
  kPreviousValid = 0,
  kLinear = 1,
  kAnchorIntra = 2,
  kAnchorTemporal = 3,
};

const char* to_string(PredictorId id);
PredictorId predictor_from_string(const std::string& name);

class PredictorKind {
 public:
  static PredictorKind previous_valid() { return PredictorKind(PredictorId::kPreviousValid, nullptr); }
  static PredictorKind linear() { return PredictorKind(PredictorId::kLinear, nullptr); }
  static PredictorKind anchor_intra(std::shared_ptr<const WeightBundle> weights);
  static PredictorKind anchor_temporal(std::shared_ptr<const WeightBundle> weights);

  PredictorId id() const { return id_; }
  bool uses_weights() const { return weights_ != nullptr; }
  bool temporal() const { return id_ == PredictorId::kAnchorTemporal; }
  const WeightBundle& weights() const { return *weights_; }
  std::shared_ptr<const WeightBundle> weights_ptr() const { return weights_; }
  uint64_t digest() const { return digest_; }

 private:
  PredictorKind(PredictorId id, std::shared_ptr<const WeightBundle> weights);

  PredictorId id_;
  std::shared_ptr<const WeightBundle> weights_;
  uint64_t digest_ = 0;
};

// Everything a prediction may look at. `image` holds decoded ranges at all
// raster predecessors of the target inside `window`, and the full mask.
struct DecodingState {
  const RangeImage* image = nullptr;
  const LidarCalibration* calib = nullptr;
  const PoseTrack* track = nullptr;
  Window window;
  const KdTree* previous = nullptr;  // previous decoded frame, global frame
};

// Latest valid range at or before (row, col) in raster order, scanning row
// `row` leftwards and then earlier rows from their right end; nullopt when
// the window holds none.
std::optional<double> scan_previous_valid(const RangeImage& image, const Window& window, int row,
                                          int col);

// Left neighbor, skipping invalid pixels and wrapping to the end of earlier
// rows; 0 when the window holds no earlier valid pixel.
double predict_previous_valid(const RangeImage& image, int i, int j, const Window& window);
double predict_previous_valid(const RangeImage& image, int i, int j);

// left + up - up_left, each term replaced by its previous valid value in
// raster order. Falls back to `left` when the up or up-left term has no
// valid predecessor, and to 0 when `left` has none. Clamped to
// [0, max_range].
double predict_linear(const RangeImage& image, int i, int j, const Window& window);
double predict_linear(const RangeImage& image, int i, int j);

// Valid pixels of the rows x cols patch whose bottom-right corner is (i, j),
// excluding (i, j), clipped to the window.
ContextPointSet extract_intra_context(const RangeImage& image, const LidarCalibration& calib, int i,
                                      int j, const Window& window, int rows = kPatchRows,
                                      int cols = kPatchCols);
ContextPointSet extract_intra_context(const RangeImage& image, const LidarCalibration& calib, int i,
                                      int j);

KdTree build_prev_frame_index(std::vector<Vec3> prev_points);

// Previous-frame neighbors of the shot (i, j): two global-frame queries at
// the left-valid and up-valid range estimates, 50 exact nearest neighbors
// each, merged by point identity and ordered by distance to the closer
// query. Each neighbor is moved into column j's sensor frame and expressed
// relative to the shot's angles, with time = 1.
// Throws NoPreviousFrame when `previous` is null.
ContextPointSet extract_temporal_context(const KdTree* previous, const RangeImage& image,
                                         const LidarCalibration& calib, const PoseTrack& track,
                                         int i, int j, const Window& window);

// Forward pass of the anchor predictor. Features are recomputed from
// anchor_ranges around their own mean, so the result does not depend on
// which mean the context was expressed against.
PredictorOutput anchor_net_infer(const ContextPointSet& ctx, const WeightBundle& weights,
                                 double max_range);

// Unquantized prediction of pixel (i, j).
double predict(const PredictorKind& kind, const DecodingState& state, int i, int j);

}  // namespace rimg
