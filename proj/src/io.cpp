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

#include "rimg/io.h"

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "rimg/error.h"

namespace rimg {

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const uint8_t> data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

Bytes serialize_range_image(const RangeImage& image) {
  if (image.height > 0xffff || image.width > 0xffff) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions exceed 65535");
  }
  ByteWriter w;
  w.tag("RIMG");
  w.u8(kRangeImageVersion);
  w.u16(static_cast<uint16_t>(image.height));
  w.u16(static_cast<uint16_t>(image.width));
  w.f64(image.precision);
  w.f32(static_cast<float>(image.max_range));
  for (size_t k = 0; k < image.size(); ++k) {
    w.f32(image.valid[k] ? static_cast<float>(image.ranges[k]) : 0.0f);
  }
  Bytes mask((image.size() + 7) / 8, 0);
  for (size_t k = 0; k < image.size(); ++k) {
    if (image.valid[k]) mask[k / 8] |= static_cast<uint8_t>(1u << (k % 8));
  }
  w.bytes(mask);
  return w.take();
}

RangeImage parse_range_image(std::span<const uint8_t> data) {
  ByteReader r(data);
  r.expect_tag("RIMG");
  uint8_t version = r.u8();
  if (version != kRangeImageVersion) {
    throw Error(ErrorCode::kCorruptStream, "unsupported RIMG version " + std::to_string(version));
  }
  int h = r.u16();
  int w = r.u16();
  double precision = r.f64();
  double max_range = r.f32();
  if (!(precision >= 0.0) || !std::isfinite(precision) || !(max_range > 0.0)) {
    throw Error(ErrorCode::kCorruptStream, "bad precision or max_range");
  }
  RangeImage image(h, w, max_range);
  image.precision = precision;
  std::vector<float> raw(image.size());
  for (float& v : raw) v = r.f32();
  auto mask = r.bytes((image.size() + 7) / 8);
  if (!r.at_end()) throw Error(ErrorCode::kCorruptStream, "trailing bytes after RIMG payload");

  double limit = precision > 0.0 ? max_range + precision / 2.0 : max_range;
  for (size_t k = 0; k < image.size(); ++k) {
    if (!((mask[k / 8] >> (k % 8)) & 1u)) continue;
    double v = raw[k];
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kCorruptStream, "negative or non-finite range at valid pixel");
    }
    if (precision > 0.0) v = static_cast<double>(quantize_level(v, precision)) * precision;
    if (v > limit) continue;
    image.ranges[k] = v;
    image.valid[k] = 1;
  }
  return image;
}

RangeImage read_range_image(const std::string& path) {
  return parse_range_image(read_file(path));
}

void write_range_image(const std::string& path, const RangeImage& image) {
  write_file(path, serialize_range_image(image));
}

std::string serialize_frame_geometry(const FrameGeometry& geometry) {
  nlohmann::json j;
  j["elevations"] = geometry.calib.elevations;
  j["azimuths"] = geometry.calib.azimuths;
  j["max_range"] = geometry.calib.max_range;
  nlohmann::json poses = nlohmann::json::array();
  for (const Pose& pose : geometry.track.poses) {
    Eigen::Quaterniond q(pose.rotation);
    q.normalize();
    poses.push_back({{"q", {q.w(), q.x(), q.y(), q.z()}},
                     {"t", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}});
  }
  j["poses"] = std::move(poses);
  return j.dump(1);
}

FrameGeometry parse_frame_geometry(const std::string& text) {
  FrameGeometry g;
  try {
    auto j = nlohmann::json::parse(text);
    g.calib.elevations = j.at("elevations").get<std::vector<double>>();
    g.calib.azimuths = j.at("azimuths").get<std::vector<double>>();
    g.calib.max_range = j.value("max_range", kDefaultMaxRange);
    if (j.contains("poses")) {
      for (const auto& p : j.at("poses")) {
        auto q = p.at("q").get<std::vector<double>>();
        auto t = p.at("t").get<std::vector<double>>();
        if (q.size() != 4 || t.size() != 3) {
          throw Error(ErrorCode::kInvalidArgument, "pose needs q[4] and t[3]");
        }
        Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
        if (quat.norm() < 1e-12) throw Error(ErrorCode::kInvalidArgument, "zero quaternion");
        quat.normalize();
        Pose pose;
        pose.rotation = quat.toRotationMatrix();
        pose.translation = Vec3(t[0], t[1], t[2]);
        g.track.poses.push_back(pose);
      }
    } else {
      g.track = PoseTrack::constant(g.calib.width());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("frame geometry: ") + e.what());
  }
  g.calib.validate();
  if (g.track.width() != g.calib.width()) {
    throw Error(ErrorCode::kDimensionMismatch, "pose count differs from azimuth count");
  }
  for (const Pose& p : g.track.poses) p.validate();
  return g;
}

FrameGeometry read_frame_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_frame_geometry(ss.str());
}

void write_frame_geometry(const std::string& path, const FrameGeometry& geometry) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << serialize_frame_geometry(geometry) << '\n';
}

}  // namespace rimg
