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

#include "rimg/scene.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "rimg/error.h"

namespace rimg::scene {

namespace {

constexpr double kEps = 1e-9;

double deg(double d) { return d * std::numbers::pi / 180.0; }

std::optional<double> hit_sphere(const Sphere& s, const Vec3& o, const Vec3& d) {
  Vec3 oc = o - s.center;
  double b = oc.dot(d);
  double c = oc.squaredNorm() - s.radius * s.radius;
  double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  double root = std::sqrt(disc);
  double t = -b - root;
  if (t <= kEps) t = -b + root;
  if (t <= kEps) return std::nullopt;
  return t;
}

std::optional<double> hit_box(const Box& box, const Vec3& o, const Vec3& d) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < box.lo[a] || o[a] > box.hi[a]) return std::nullopt;
      continue;
    }
    double ta = (box.lo[a] - o[a]) / d[a];
    double tb = (box.hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return std::nullopt;
  double t = t0 > kEps ? t0 : t1;
  if (t <= kEps) return std::nullopt;
  return t;
}

// Ring placement around the origin at a radius in [rmin, rmax].
Vec3 ring_point(std::mt19937_64& rng, double rmin, double rmax) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> radius(rmin, rmax);
  double a = angle(rng);
  double r = radius(rng);
  return {r * std::cos(a), r * std::sin(a), 0.0};
}

Box random_box(std::mt19937_64& rng, double rmin, double rmax) {
  std::uniform_real_distribution<double> half(0.5, 3.0);
  std::uniform_real_distribution<double> height(0.8, 6.0);
  Vec3 c = ring_point(rng, rmin, rmax);
  double hx = half(rng);
  double hy = half(rng);
  return {{c.x() - hx, c.y() - hy, 0.0}, {c.x() + hx, c.y() + hy, height(rng)}};
}

// Long thin slab standing on the ground, facing the origin.
Box random_wall(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(8.0, 30.0);
  std::uniform_real_distribution<double> length(10.0, 40.0);
  std::uniform_real_distribution<double> height(3.0, 12.0);
  std::uniform_int_distribution<int> side(0, 3);
  double d = dist(rng);
  double l = length(rng) / 2.0;
  double h = height(rng);
  switch (side(rng)) {
    case 0: return {{d, -l, 0.0}, {d + 0.5, l, h}};
    case 1: return {{-d - 0.5, -l, 0.0}, {-d, l, h}};
    case 2: return {{-l, d, 0.0}, {l, d + 0.5, h}};
    default: return {{-l, -d - 0.5, 0.0}, {l, -d, h}};
  }
}

World build_world(const SceneSpec& spec, std::mt19937_64& rng) {
  World w;
  switch (spec.kind) {
    case SceneKind::kPlanes: {
      std::uniform_int_distribution<int> count(2, 4);
      for (int k = count(rng); k > 0; --k) w.boxes.push_back(random_wall(rng));
      break;
    }
    case SceneKind::kSphere: {
      std::uniform_real_distribution<double> radius(2.0, 6.0);
      double r = radius(rng);
      Vec3 c = ring_point(rng, 10.0, 25.0);
      c.z() = r;
      w.spheres.push_back({c, r});
      break;
    }
    case SceneKind::kBoxesOnGround:
    case SceneKind::kStaticPair:
    case SceneKind::kMovingSensorPair: {
      std::uniform_int_distribution<int> count(4, 12);
      for (int k = count(rng); k > 0; --k) w.boxes.push_back(random_box(rng, 5.0, 40.0));
      std::uniform_int_distribution<int> spheres(0, 2);
      std::uniform_real_distribution<double> radius(0.5, 2.0);
      for (int k = spheres(rng); k > 0; --k) {
        double r = radius(rng);
        Vec3 c = ring_point(rng, 6.0, 30.0);
        c.z() = r;
        w.spheres.push_back({c, r});
      }
      break;
    }
  }
  return w;
}

}  // namespace

const char* to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kPlanes: return "planes";
    case SceneKind::kSphere: return "sphere";
    case SceneKind::kBoxesOnGround: return "boxes-on-ground";
    case SceneKind::kStaticPair: return "static-pair";
    case SceneKind::kMovingSensorPair: return "moving-sensor-pair";
  }
  return "unknown";
}

SceneKind scene_kind_from_string(const std::string& name) {
  for (SceneKind k : {SceneKind::kPlanes, SceneKind::kSphere, SceneKind::kBoxesOnGround,
                      SceneKind::kStaticPair, SceneKind::kMovingSensorPair}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scene kind '" + name + "'");
}

std::optional<double> World::raycast(const Vec3& origin, const Vec3& dir) const {
  std::optional<double> best;
  auto take = [&](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  if (ground && dir.z() < -1e-15 && origin.z() > 0.0) take(-origin.z() / dir.z());
  for (const Sphere& s : spheres) take(hit_sphere(s, origin, dir));
  for (const Box& b : boxes) take(hit_box(b, origin, dir));
  return best;
}

LidarCalibration default_calibration() {
  return LidarCalibration::uniform(64, 2650, deg(2.4), deg(-17.6));
}

Pose sensor_pose(const SceneSpec& spec, int frame, int col) {
  Vec3 base(0.0, 0.0, spec.sensor_height);
  if (spec.kind != SceneKind::kMovingSensorPair) return Pose::from_yaw(0.0, base);
  int width = std::max(spec.lidar.width(), 1);
  double t = spec.frame_period * (frame + static_cast<double>(col) / width);
  double yaw = spec.yaw_rate * t;
  // Constant speed along a circular arc of curvature yaw_rate / speed.
  Vec3 pos = base;
  if (std::abs(spec.yaw_rate) < 1e-12) {
    pos.x() += spec.speed * t;
  } else {
    double r = spec.speed / spec.yaw_rate;
    pos.x() += r * std::sin(yaw);
    pos.y() += r * (1.0 - std::cos(yaw));
  }
  return Pose::from_yaw(yaw, pos);
}

Scene generate(const SceneSpec& spec) {
  spec.lidar.validate();
  if (spec.noise_sigma < 0.0 || spec.dropout < 0.0 || spec.dropout > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "noise and dropout must be non-negative probabilities");
  }
  std::mt19937_64 rng(spec.seed);
  Scene scene;
  scene.world = build_world(spec, rng);
  scene.calib = spec.lidar;
  bool pair = spec.kind == SceneKind::kStaticPair || spec.kind == SceneKind::kMovingSensorPair;
  int frames = pair ? 2 : 1;
  int h = spec.lidar.height();
  int w = spec.lidar.width();
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  std::bernoulli_distribution drop(spec.dropout);
  for (int f = 0; f < frames; ++f) {
    Frame frame;
    frame.image = RangeImage(h, w, spec.lidar.max_range);
    frame.track.poses.reserve(w);
    for (int j = 0; j < w; ++j) frame.track.poses.push_back(sensor_pose(spec, f, j));
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const Pose& pose = frame.track.poses[j];
        Vec3 dir = pose.rotation * unproject(1.0, spec.lidar.azimuths[j], spec.lidar.elevations[i]);
        std::optional<double> t = scene.world.raycast(pose.translation, dir);
        double r = t.value_or(0.0);
        if (spec.noise_sigma > 0.0) r += noise(rng);
        if (spec.dropout > 0.0 && drop(rng)) continue;
        if (t && r > 0.0 && r <= spec.lidar.max_range) frame.image.set(i, j, r);
      }
    }
    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

}  // namespace rimg::scene
