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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../support.h"
#include "rimg/error.h"
#include "rimg/geometry.h"

using namespace rimg;
using rimg::testing::deg;
using std::numbers::pi;

namespace {

void check_vec(const Vec3& got, const Vec3& want, double tol) {
  CHECK(got.x() == doctest::Approx(want.x()).epsilon(tol));
  CHECK(got.y() == doctest::Approx(want.y()).epsilon(tol));
  CHECK(got.z() == doctest::Approx(want.z()).epsilon(tol));
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace

TEST_CASE("unproject examples") {
  check_vec(unproject(1, 0, 0), {1, 0, 0}, 1e-12);
  Vec3 q = unproject(2, pi / 2, 0);
  CHECK(std::abs(q.x()) < 1e-12);
  CHECK(q.y() == doctest::Approx(2.0));
  // 5 cos(30deg) cos(45deg) = 3.0618621784789726 by hand evaluation.
  Vec3 p = unproject(5, pi / 4, pi / 6);
  CHECK(std::abs(p.x() - 3.0618621784789726) < 1e-12);
  CHECK(std::abs(p.y() - 3.0618621784789726) < 1e-12);
  CHECK(std::abs(p.z() - 2.5) < 1e-12);
}

TEST_CASE("project examples") {
  Spherical a = project({1, 0, 0});
  CHECK(a.range == 1.0);
  CHECK(a.azimuth == 0.0);
  CHECK(a.elevation == 0.0);

  Spherical pole = project({0, 0, 3});
  CHECK(pole.range == doctest::Approx(3.0));
  CHECK(pole.azimuth == 0.0);
  CHECK(pole.elevation == doctest::Approx(pi / 2));

  Spherical c = project({3.06186, 3.06186, 2.5});
  CHECK(c.range == doctest::Approx(5.0).epsilon(1e-5));
  CHECK(c.azimuth == doctest::Approx(pi / 4).epsilon(1e-9));
  CHECK(c.elevation == doctest::Approx(pi / 6).epsilon(1e-5));

  CHECK(project({-1, 0, 0}).azimuth == doctest::Approx(pi));
  CHECK(project({-1, -0.0, 0}).azimuth == doctest::Approx(pi));
}

TEST_CASE("project rejects the origin") {
  try {
    project({0, 0, 1e-13});
    FAIL("expected ZeroRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroRange);
  }
}

TEST_CASE("project inverts unproject on random samples") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> r(1e-3, 75.0);
  std::uniform_real_distribution<double> t(-pi, pi);
  std::uniform_real_distribution<double> a(-pi / 2 + 1e-6, pi / 2 - 1e-6);
  for (int k = 0; k < 20000; ++k) {
    double rr = r(rng), tt = t(rng), aa = a(rng);
    Spherical s = project(unproject(rr, tt, aa));
    CHECK(rel_err(s.range, rr) < 1e-9);
    CHECK(std::abs(wrap_angle(s.azimuth - tt)) < 1e-9);
    CHECK(std::abs(s.elevation - aa) < 1e-9);
    CHECK(s.azimuth > -pi);
    CHECK(s.azimuth <= pi);
  }
}

TEST_CASE("pose transforms") {
  Vec3 p(1, 2, 3);
  check_vec(to_global(p, Pose::identity()), p, 1e-15);
  Pose rot = Pose::from_yaw(pi / 2, Vec3::Zero());
  Vec3 g = to_global({1, 0, 0}, rot);
  CHECK(std::abs(g.x()) < 1e-15);
  CHECK(g.y() == doctest::Approx(1.0));
  check_vec(to_global({1, 0, 0}, Pose{Mat3::Identity(), {10, 0, 0}}), {11, 0, 0}, 1e-15);

  Pose any = Pose::from_yaw(0.7, {3, -2, 1.8});
  Vec3 back = to_sensor(to_global(p, any), any);
  CHECK((back - p).norm() < 1e-12);
}

TEST_CASE("pose validation") {
  Pose bad;
  bad.rotation(0, 0) = 2.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  Pose reflect;
  reflect.rotation(2, 2) = -1.0;
  CHECK_THROWS_AS(reflect.validate(), Error);
  CHECK_NOTHROW(Pose::from_yaw(1.0, {1, 2, 3}).validate());
}

TEST_CASE("calibration validation") {
  LidarCalibration c = rimg::testing::small_calibration(8, 16);
  CHECK_NOTHROW(c.validate());
  CHECK(c.elevations.front() == doctest::Approx(deg(2.4)));
  CHECK(c.elevations.back() == doctest::Approx(deg(-17.6)));
  LidarCalibration flat = c;
  flat.elevations[3] = flat.elevations[2];
  CHECK_THROWS_AS(flat.validate(), Error);
  // Azimuths may cross the +-pi seam.
  LidarCalibration seam;
  seam.elevations = {0.1, 0.0};
  seam.azimuths = {3.0, 3.1, -3.1, -3.0};
  CHECK_NOTHROW(seam.validate());
  seam.azimuths = {3.0, 3.1, 3.05, -3.0};
  CHECK_THROWS_AS(seam.validate(), Error);
}

TEST_CASE("image_to_point_cloud") {
  LidarCalibration c;
  c.elevations = {0.0};
  c.azimuths = {0.0};
  RangeImage one(1, 1);
  CHECK(image_to_point_cloud(one, c, PoseTrack::constant(1)).empty());
  one.set(0, 0, 1.0);
  auto pts = image_to_point_cloud(one, c, PoseTrack::constant(1));
  REQUIRE(pts.size() == 1);
  check_vec(pts[0], {1, 0, 0}, 1e-15);

  // 2x2 per-pixel composition, different pose per column.
  LidarCalibration c2;
  c2.elevations = {0.2, -0.1};
  c2.azimuths = {0.5, -0.5};
  PoseTrack track;
  track.poses = {Pose::from_yaw(0.3, {1, 2, 3}), Pose::from_yaw(-1.2, {0, -4, 1})};
  RangeImage img(2, 2);
  img.set(0, 0, 3.0);
  img.set(0, 1, 4.0);
  img.set(1, 0, 5.0);
  img.set(1, 1, 6.0);
  auto cloud = image_to_point_cloud(img, c2, track);
  REQUIRE(cloud.size() == 4);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double r = img.at(i, j), t = c2.azimuths[j], a = c2.elevations[i];
      Vec3 s(r * std::cos(a) * std::cos(t), r * std::cos(a) * std::sin(t), r * std::sin(a));
      Vec3 want = track.poses[j].rotation * s + track.poses[j].translation;
      CHECK((cloud[i * 2 + j] - want).norm() < 1e-12);
    }
  }
  CHECK_THROWS_AS(image_to_point_cloud(img, c2, PoseTrack::constant(3)), Error);
}

TEST_CASE("point cloud back to the quantized image") {
  std::mt19937_64 rng(7);
  LidarCalibration c = rimg::testing::small_calibration(16, 64);
  PoseTrack track;
  for (int j = 0; j < 64; ++j) track.poses.push_back(Pose::from_yaw(0.01 * j, {0.1 * j, 0.0, 1.8}));
  RangeImage q = quantize(rimg::testing::random_image(rng, 16, 64, 0.8), {0.02});
  auto cloud = image_to_point_cloud(q, c, track);
  std::vector<int> cols;
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 64; ++j) {
      if (q.is_valid(i, j)) cols.push_back(j);
    }
  }
  RangeImage back = point_cloud_to_image(cloud, cols, c, track, 0.02);
  CHECK(back.valid == q.valid);
  CHECK(back.ranges == q.ranges);
}

TEST_CASE("quantize examples") {
  CHECK(quantize_level(10.07, 0.1) == 101);
  CHECK(quantize_level(10.05, 0.1) == 101);
  CHECK(quantize_level(10.04, 0.1) == 100);
  CHECK(quantize_level(0.0, 0.3) == 0);
  CHECK(quantize_level(-0.05, 0.1) == -1);
  CHECK(quantize_level(0.25, 0.5) == 1);
  // 0.15 / 0.1 is 1.4999999999999998 in binary; still a tie.
  CHECK(quantize_level(0.15, 0.1) == 2);

  RangeImage img(1, 3);
  img.set(0, 0, 10.07);
  img.set(0, 2, 0.0);
  RangeImage q = quantize(img, {0.1});
  CHECK(q.at(0, 0) == doctest::Approx(10.1).epsilon(1e-12));
  CHECK(q.at(0, 2) == 0.0);
  CHECK(q.is_valid(0, 2));
  CHECK_FALSE(q.is_valid(0, 1));
  CHECK(q.at(0, 1) == 0.0);
  CHECK(q.precision == 0.1);
}

TEST_CASE("quantization spec bounds") {
  CHECK_NOTHROW(QuantizationSpec{1e-4}.validate());
  CHECK_NOTHROW(QuantizationSpec{0.5}.validate());
  CHECK_THROWS_AS(QuantizationSpec{0.6}.validate(), Error);
  CHECK_THROWS_AS(QuantizationSpec{0.0}.validate(), Error);
}

TEST_CASE("quantize is idempotent and bounded") {
  std::mt19937_64 rng(3);
  for (double p : {0.02, 0.1, 0.2, 0.37}) {
    RangeImage img = rimg::testing::random_image(rng, 20, 40);
    RangeImage q = quantize(img, {p});
    CHECK(quantize(q, {p}) == q);
    CHECK(q.valid == img.valid);
    for (size_t k = 0; k < img.size(); ++k) {
      if (img.valid[k]) CHECK(std::abs(q.ranges[k] - img.ranges[k]) <= p / 2 + 1e-12);
    }
  }
}

TEST_CASE("mean quantization displacement is a quarter step") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> r(0.0, 75.0);
  const double p = 0.1;
  double sum = 0.0;
  const int n = 1000000;
  for (int k = 0; k < n; ++k) {
    double x = r(rng);
    sum += std::abs(static_cast<double>(quantize_level(x, p)) * p - x);
  }
  double mean = sum / n;
  CHECK(mean == doctest::Approx(p / 4).epsilon(0.05));
}

TEST_CASE("wrap_angle") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(2 * pi + 0.5) == doctest::Approx(0.5));
  CHECK(wrap_angle(-pi) == doctest::Approx(pi));
  CHECK(wrap_angle(pi) == doctest::Approx(pi));
}
