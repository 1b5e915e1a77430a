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
#include <span>
#include <vector>

#include "rimg/geometry.h"

namespace rimg {

struct Neighbor {
  uint32_t index = 0;
  double dist2 = 0.0;  // squared Euclidean distance

  // Neighbors are ordered by distance, then by index, so ties resolve the
  // same way as a linear scan.
  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
  bool operator==(const Neighbor&) const = default;
};

// Squared distance as every search in the library computes it.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  double dx = a.x() - b.x();
  double dy = a.y() - b.y();
  double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

// Exact k-nearest-neighbour search over a fixed point set. Median-split
// kd-tree; the pruning test keeps equidistant candidates so results are
// identical to a brute-force scan ordered by (distance, index).
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points);

  size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec3>& points() const { return points_; }

  // Up to k neighbors of `query`, nearest first.
  std::vector<Neighbor> knn(const Vec3& query, size_t k) const;

  // The single nearest neighbor; the tree must be non-empty.
  Neighbor nearest(const Vec3& query) const;

 private:
  struct Node {
    // Leaf when axis < 0: points order_[begin, end).
    int axis = -1;
    double split = 0.0;
    uint32_t begin = 0, end = 0;
    int32_t left = -1, right = -1;
  };

  int32_t build(uint32_t begin, uint32_t end, int depth);
  void search(int32_t node, const Vec3& query, size_t k, std::vector<Neighbor>& heap) const;

  std::vector<Vec3> points_;
  std::vector<uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace rimg
