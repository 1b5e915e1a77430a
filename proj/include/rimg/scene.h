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
#include <optional>
#include <string>
#include <vector>

#include "rimg/geometry.h"

namespace rimg::scene {

enum class SceneKind { kPlanes, kSphere, kBoxesOnGround, kStaticPair, kMovingSensorPair };

const char* to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

struct Sphere {
  Vec3 center;
  double radius = 1.0;
};

// Axis-aligned box.
struct Box {
  Vec3 lo;
  Vec3 hi;
};

// Ground plane z = 0 plus solid primitives, global frame.
struct World {
  bool ground = true;
  std::vector<Sphere> spheres;
  std::vector<Box> boxes;

  // Distance along the unit direction `dir` to the first surface hit from
  // `origin`, or nullopt for a miss.
  std::optional<double> raycast(const Vec3& origin, const Vec3& dir) const;
};

// 64 beams from +2.4 to -17.6 degrees, 2650 columns.
LidarCalibration default_calibration();

struct SceneSpec {
  SceneKind kind = SceneKind::kBoxesOnGround;
  uint64_t seed = 0;
  LidarCalibration lidar = default_calibration();
  double sensor_height = 1.8;  // meters above ground
  double speed = 10.0;         // m/s along the heading, moving-sensor-pair only
  double yaw_rate = 0.2;       // rad/s, moving-sensor-pair only
  double frame_period = 0.1;   // seconds per revolution
  double noise_sigma = 0.0;    // Gaussian range noise, meters
  double dropout = 0.0;        // probability of dropping a return
};

struct Frame {
  RangeImage image;  // unquantized
  PoseTrack track;
};

struct Scene {
  World world;
  LidarCalibration calib;
  std::vector<Frame> frames;  // two for the pair kinds, one otherwise
};

// Deterministic in (spec, seed).
Scene generate(const SceneSpec& spec);

// Pose of column `col` of frame `frame`; columns fire evenly over one period.
Pose sensor_pose(const SceneSpec& spec, int frame, int col);

}  // namespace rimg::scene
