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

#include "rimg/predictor.h"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <limits>

#include "rimg/error.h"

namespace rimg {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double clamp_range(double r, double max_range) { return std::clamp(r, 0.0, max_range); }

RowMatrix layer_matrix(const Layer& l) {
  RowMatrix w(l.rows, l.cols);
  for (uint32_t r = 0; r < l.rows; ++r) {
    for (uint32_t c = 0; c < l.cols; ++c) w(r, c) = l.weights[static_cast<size_t>(r) * l.cols + c];
  }
  return w;
}

Eigen::RowVectorXd layer_bias(const Layer& l) {
  Eigen::RowVectorXd b(l.rows);
  for (uint32_t r = 0; r < l.rows; ++r) b(r) = l.biases[r];
  return b;
}

// Per-point affine map: each row of `x` is one point.
RowMatrix pointwise(const RowMatrix& x, const Layer& l, bool relu) {
  RowMatrix y = x * layer_matrix(l).transpose();
  y.rowwise() += layer_bias(l);
  if (relu) y = y.cwiseMax(0.0);
  return y;
}

// The `slots` points closest to the target in |d_azimuth| + |d_elevation|,
// in their original order.
ContextPointSet keep_closest_in_angle(const ContextPointSet& ctx, size_t slots) {
  std::vector<size_t> order(ctx.size());
  std::iota(order.begin(), order.end(), size_t{0});
  auto angle = [&](size_t k) {
    return std::abs(ctx.points[k].d_azimuth) + std::abs(ctx.points[k].d_elevation);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return angle(a) < angle(b); });
  order.resize(slots);
  std::sort(order.begin(), order.end());
  ContextPointSet out;
  for (size_t k : order) out.add(ctx.points[k], ctx.anchor_ranges[k]);
  out.recenter();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void ContextPointSet::add(const ContextPoint& p, double anchor_range) {
  points.push_back(p);
  anchor_ranges.push_back(anchor_range);
}

void ContextPointSet::recenter() {
  double sum = 0.0;
  for (double r : anchor_ranges) sum += r;
  mean_range = anchor_ranges.empty() ? 0.0 : sum / static_cast<double>(anchor_ranges.size());
  for (size_t k = 0; k < points.size(); ++k) points[k].rel_range = anchor_ranges[k] - mean_range;
}

const char* to_string(PredictorId id) {
  switch (id) {
    case PredictorId::kPreviousValid: return "previous";
    case PredictorId::kLinear: return "linear";
    case PredictorId::kAnchorIntra: return "anchor-intra";
    case PredictorId::kAnchorTemporal: return "anchor-temporal";
  }
  return "unknown";
}

PredictorId predictor_from_string(const std::string& name) {
  for (auto id : {PredictorId::kPreviousValid, PredictorId::kLinear, PredictorId::kAnchorIntra,
                  PredictorId::kAnchorTemporal}) {
    if (name == to_string(id)) return id;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown predictor \"" + name + "\"");
}

PredictorKind::PredictorKind(PredictorId id, std::shared_ptr<const WeightBundle> weights)
    : id_(id), weights_(std::move(weights)) {
  if (weights_) {
    weights_->validate();
    digest_ = weight_digest(*weights_);
  }
}

PredictorKind PredictorKind::anchor_intra(std::shared_ptr<const WeightBundle> weights) {
  if (!weights) throw Error(ErrorCode::kInvalidArgument, "anchor predictor needs weights");
  if (weights->input_dim != 3) {
    throw Error(ErrorCode::kWeightShapeMismatch, "intra anchor predictor needs input_dim 3");
  }
  return PredictorKind(PredictorId::kAnchorIntra, std::move(weights));
}

PredictorKind PredictorKind::anchor_temporal(std::shared_ptr<const WeightBundle> weights) {
  if (!weights) throw Error(ErrorCode::kInvalidArgument, "anchor predictor needs weights");
  if (weights->input_dim != 4) {
    throw Error(ErrorCode::kWeightShapeMismatch, "temporal anchor predictor needs input_dim 4");
  }
  return PredictorKind(PredictorId::kAnchorTemporal, std::move(weights));
}

// ---------------------------------------------------------------------------

std::optional<double> scan_previous_valid(const RangeImage& image, const Window& window, int row,
                                          int col) {
  if (row < window.row0 || row >= window.row1) return std::nullopt;
  int c = std::min(col, window.col1 - 1);
  for (int r = row; r >= window.row0; --r, c = window.col1 - 1) {
    for (; c >= window.col0; --c) {
      if (image.is_valid(r, c)) return image.at(r, c);
    }
  }
  return std::nullopt;
}

double predict_previous_valid(const RangeImage& image, int i, int j, const Window& window) {
  return scan_previous_valid(image, window, i, j - 1).value_or(0.0);
}

double predict_previous_valid(const RangeImage& image, int i, int j) {
  return predict_previous_valid(image, i, j, Window::whole(image));
}

double predict_linear(const RangeImage& image, int i, int j, const Window& window) {
  auto left = scan_previous_valid(image, window, i, j - 1);
  if (!left) return 0.0;
  auto up = scan_previous_valid(image, window, i - 1, j);
  auto up_left = scan_previous_valid(image, window, i - 1, j - 1);
  if (!up || !up_left) return clamp_range(*left, image.max_range);
  return clamp_range(*left + *up - *up_left, image.max_range);
}

double predict_linear(const RangeImage& image, int i, int j) {
  return predict_linear(image, i, j, Window::whole(image));
}

// ---------------------------------------------------------------------------

ContextPointSet extract_intra_context(const RangeImage& image, const LidarCalibration& calib, int i,
                                      int j, const Window& window, int rows, int cols) {
  ContextPointSet ctx;
  const double az0 = calib.azimuths[static_cast<size_t>(j)];
  const double el0 = calib.elevations[static_cast<size_t>(i)];
  int r_begin = std::max(window.row0, i - rows + 1);
  int c_begin = std::max(window.col0, j - cols + 1);
  int c_end = std::min(window.col1 - 1, j);
  for (int r = r_begin; r <= i; ++r) {
    for (int c = c_begin; c <= c_end; ++c) {
      if (r == i && c == j) break;
      if (!image.is_valid(r, c)) continue;
      ContextPoint p;
      p.d_azimuth = wrap_angle(calib.azimuths[static_cast<size_t>(c)] - az0);
      p.d_elevation = calib.elevations[static_cast<size_t>(r)] - el0;
      p.time = 0;
      ctx.add(p, image.at(r, c));
    }
  }
  ctx.recenter();
  return ctx;
}

ContextPointSet extract_intra_context(const RangeImage& image, const LidarCalibration& calib, int i,
                                      int j) {
  return extract_intra_context(image, calib, i, j, Window::whole(image));
}

KdTree build_prev_frame_index(std::vector<Vec3> prev_points) { return KdTree(std::move(prev_points)); }

ContextPointSet extract_temporal_context(const KdTree* previous, const RangeImage& image,
                                         const LidarCalibration& calib, const PoseTrack& track,
                                         int i, int j, const Window& window) {
  if (previous == nullptr) throw Error(ErrorCode::kNoPreviousFrame, "no previous frame index");
  ContextPointSet ctx;
  if (previous->empty()) return ctx;

  auto left = scan_previous_valid(image, window, i, j - 1);
  if (!left) return ctx;
  auto up = scan_previous_valid(image, window, i - 1, j);

  const double az = calib.azimuths[static_cast<size_t>(j)];
  const double el = calib.elevations[static_cast<size_t>(i)];
  const Pose& pose = track.poses[static_cast<size_t>(j)];

  std::vector<Neighbor> merged = previous->knn(to_global(unproject(*left, az, el), pose),
                                               kTemporalNeighborsPerQuery);
  if (up && *up != *left) {
    auto second = previous->knn(to_global(unproject(*up, az, el), pose), kTemporalNeighborsPerQuery);
    merged.insert(merged.end(), second.begin(), second.end());
    // Keep each point once, at its distance to the closer query.
    std::sort(merged.begin(), merged.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.index < b.index || (a.index == b.index && a.dist2 < b.dist2);
    });
    merged.erase(std::unique(merged.begin(), merged.end(),
                             [](const Neighbor& a, const Neighbor& b) { return a.index == b.index; }),
                 merged.end());
    std::sort(merged.begin(), merged.end());
  }

  for (const Neighbor& n : merged) {
    Vec3 local = to_sensor(previous->points()[n.index], pose);
    if (local.norm() < 1e-12) continue;
    Spherical s = project(local);
    ContextPoint p;
    p.d_azimuth = wrap_angle(s.azimuth - az);
    p.d_elevation = s.elevation - el;
    p.time = 1;
    ctx.add(p, s.range);
  }
  ctx.recenter();
  return ctx;
}

// ---------------------------------------------------------------------------

PredictorOutput anchor_net_infer(const ContextPointSet& ctx, const WeightBundle& weights,
                                 double max_range) {
  const size_t n = ctx.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "anchor inference needs at least one point");
  if (n > weights.num_anchors) {
    throw Error(ErrorCode::kWeightShapeMismatch,
                std::to_string(n) + " context points exceed " + std::to_string(weights.num_anchors) +
                    " anchors");
  }
  if (ctx.anchor_ranges.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "context has mismatched anchor ranges");
  }
  const size_t dim = weights.input_dim;
  const size_t concat = weights.concat_index();
  const size_t depth = weights.head_depth();
  if (weights.layers.size() != concat + 1 + 2 * depth || depth == 0) {
    throw Error(ErrorCode::kWeightShapeMismatch, "bundle head layout is inconsistent");
  }

  double mean = 0.0;
  for (double r : ctx.anchor_ranges) mean += r;
  mean /= static_cast<double>(n);

  RowMatrix x(n, dim);
  for (size_t k = 0; k < n; ++k) {
    const ContextPoint& p = ctx.points[k];
    if (dim == 3 && p.time != 0) {
      throw Error(ErrorCode::kWeightShapeMismatch, "intra bundle cannot take previous-frame points");
    }
    x(k, 0) = p.d_azimuth;
    x(k, 1) = p.d_elevation;
    x(k, 2) = (ctx.anchor_ranges[k] - mean) / weights.normalization;
    if (dim == 4) x(k, 3) = p.time;
  }

  const size_t local_ref = weights.layers[concat].cols;
  RowMatrix local;
  Eigen::RowVectorXd global;
  for (size_t k = 0; k < concat; ++k) {
    const Layer& l = weights.layers[k];
    if (l.kind == LayerKind::kPointwise) {
      if (static_cast<size_t>(x.cols()) != l.cols) {
        throw Error(ErrorCode::kWeightShapeMismatch, "feature width does not match layer input");
      }
      x = pointwise(x, l, true);
      if (k == local_ref) local = x;
    } else if (l.kind == LayerKind::kMaxPool) {
      global = x.colwise().maxCoeff();
    } else if (l.kind == LayerKind::kDense) {
      Eigen::RowVectorXd g = global * layer_matrix(l).transpose() + layer_bias(l);
      global = g.cwiseMax(0.0);
    }
  }
  RowMatrix features(n, local.cols() + global.size());
  features.leftCols(local.cols()) = local;
  features.rightCols(global.size()) = global.replicate(static_cast<Eigen::Index>(n), 1);

  std::array<Eigen::VectorXd, 2> heads;
  for (size_t h = 0; h < 2; ++h) {
    RowMatrix y = features;
    for (size_t d = 0; d < depth; ++d) {
      y = pointwise(y, weights.layers[concat + 1 + h * depth + d], d + 1 < depth);
    }
    heads[h] = y.col(0);
  }

  PredictorOutput out;
  out.anchor_logits.assign(weights.num_anchors, -std::numeric_limits<double>::infinity());
  out.anchor_residuals.assign(weights.num_anchors, 0.0);
  size_t best = 0;
  for (size_t k = 0; k < n; ++k) {
    out.anchor_logits[k] = heads[0](static_cast<Eigen::Index>(k));
    out.anchor_residuals[k] = heads[1](static_cast<Eigen::Index>(k)) * weights.normalization;
    if (out.anchor_logits[k] > out.anchor_logits[best]) best = k;
  }
  out.anchor = best;
  out.predicted_range = clamp_range(ctx.anchor_ranges[best] + out.anchor_residuals[best], max_range);
  return out;
}

// ---------------------------------------------------------------------------

double predict(const PredictorKind& kind, const DecodingState& state, int i, int j) {
  const RangeImage& image = *state.image;
  switch (kind.id()) {
    case PredictorId::kPreviousValid:
      return predict_previous_valid(image, i, j, state.window);
    case PredictorId::kLinear:
      return predict_linear(image, i, j, state.window);
    case PredictorId::kAnchorIntra:
    case PredictorId::kAnchorTemporal: {
      const size_t slots = kind.weights().num_anchors;
      ContextPointSet ctx = extract_intra_context(image, *state.calib, i, j, state.window);
      if (ctx.size() > slots) ctx = keep_closest_in_angle(ctx, slots);
      if (kind.temporal() && state.previous != nullptr) {
        ContextPointSet temporal = extract_temporal_context(state.previous, image, *state.calib,
                                                            *state.track, i, j, state.window);
        // Temporal points arrive nearest first; the farthest lose out when
        // the head has too few slots.
        for (size_t k = 0; k < temporal.size() && ctx.size() < slots; ++k) {
          ctx.add(temporal.points[k], temporal.anchor_ranges[k]);
        }
        ctx.recenter();
      }
      if (ctx.empty()) return predict_previous_valid(image, i, j, state.window);
      return anchor_net_infer(ctx, kind.weights(), image.max_range).predicted_range;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown predictor");
}

}  // namespace rimg
