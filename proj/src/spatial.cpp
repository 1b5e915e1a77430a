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

#include "rimg/spatial.h"

#include <algorithm>
#include <numeric>

#include "rimg/error.h"

namespace rimg {

namespace {
constexpr uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.size() > UINT32_MAX) {
    throw Error(ErrorCode::kInvalidArgument, "too many points for the spatial index");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<uint32_t>(points_.size()), 0);
  }
}

int32_t KdTree::build(uint32_t begin, uint32_t end, int depth) {
  int32_t id = static_cast<int32_t>(nodes_.size());
  nodes_.push_back(Node{});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (uint32_t k = begin + 1; k < end; ++k) {
    lo = lo.cwiseMin(points_[order_[k]]);
    hi = hi.cwiseMax(points_[order_[k]]);
  }
  Vec3 extent = hi - lo;
  int axis = 0;
  extent.maxCoeff(&axis);
  if (extent[axis] <= 0.0) return id;  // all points coincide

  uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](uint32_t a, uint32_t b) {
                     double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  double split = points_[order_[mid]][axis];
  int32_t left = build(begin, mid, depth + 1);
  int32_t right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(int32_t node_id, const Vec3& query, size_t k,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (uint32_t n = node.begin; n < node.end; ++n) {
      Neighbor cand{order_[n], squared_distance(query, points_[order_[n]])};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  double diff = query[node.axis] - node.split;
  int32_t near = diff < 0.0 ? node.left : node.right;
  int32_t far = diff < 0.0 ? node.right : node.left;
  search(near, query, k, heap);
  // Equality keeps ties reachable: a far-side point at the same distance as
  // the current worst may still win on index.
  if (heap.size() < k || diff * diff <= heap.front().dist2) {
    search(far, query, k, heap);
  }
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, size_t k) const {
  std::vector<Neighbor> heap;
  if (points_.empty() || k == 0) return heap;
  heap.reserve(k + 1);
  search(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

Neighbor KdTree::nearest(const Vec3& query) const {
  if (points_.empty()) throw Error(ErrorCode::kEmptyCloud, "nearest() on an empty index");
  return knn(query, 1).front();
}

}  // namespace rimg
