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

// The synthetic evaluation corpus: every generator kind at two seeds on a
// 64-beam sensor with the default vertical field of view, 2 cm range noise
// and 1% dropout.

#pragma once

#include <string>
#include <vector>

#include "rimg/scene.h"

namespace rimg::testing {

struct CorpusFrame {
  std::string name;
  RangeImage image;  // unquantized
  LidarCalibration calib;
  PoseTrack track;
  int previous = -1;  // index of the preceding frame of the same sequence
  bool static_scene = false;
};

inline constexpr int kCorpusHeight = 64;
inline constexpr int kCorpusWidth = 1024;

inline std::vector<CorpusFrame> synthetic_corpus() {
  std::vector<CorpusFrame> out;
  const LidarCalibration full = scene::default_calibration();
  for (auto kind : {scene::SceneKind::kPlanes, scene::SceneKind::kSphere, scene::SceneKind::kBoxesOnGround,
                    scene::SceneKind::kStaticPair, scene::SceneKind::kMovingSensorPair}) {
    for (uint64_t seed : {1u, 2u}) {
      scene::SceneSpec spec;
      spec.kind = kind;
      spec.seed = seed;
      spec.lidar = LidarCalibration::uniform(kCorpusHeight, kCorpusWidth, full.elevations.front(),
                                             full.elevations.back());
      spec.noise_sigma = 0.02;
      spec.dropout = 0.01;
      scene::Scene sc = scene::generate(spec);
      for (size_t t = 0; t < sc.frames.size(); ++t) {
        CorpusFrame f;
        f.name = std::string(scene::to_string(kind)) + "-" + std::to_string(seed) + "-" + std::to_string(t);
        f.image = sc.frames[t].image;
        f.calib = sc.calib;
        f.track = sc.frames[t].track;
        f.previous = t > 0 ? static_cast<int>(out.size()) - 1 : -1;
        f.static_scene = kind != scene::SceneKind::kMovingSensorPair;
        out.push_back(std::move(f));
      }
    }
  }
  return out;
}

}  // namespace rimg::testing
