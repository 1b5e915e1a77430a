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

#include <cstring>
#include <filesystem>
#include <random>

#include "../support.h"
#include "rimg/error.h"
#include "rimg/weights.h"

using namespace rimg;
using rimg::testing::nearest_angle_bundle;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("RWGT byte layout") {
  Bytes b = serialize_weights(nearest_angle_bundle(3));
  // Sizes and SHA-256 from an independent struct.pack/hashlib encoding.
  REQUIRE(b.size() == 194);
  CHECK(std::memcmp(b.data(), "RWGT", 4) == 0);
  CHECK(b[4] == 1);   // version
  CHECK(b[5] == 3);   // input_dim
  CHECK(b[6] == 99);  // num_anchors low byte
  CHECK(b[7] == 0);
  float norm;
  std::memcpy(&norm, b.data() + 8, 4);
  CHECK(norm == 75.0f);
  CHECK(b[12] == 5);  // layer count
  CHECK(b[13] == 1);  // first layer is pointwise
  CHECK(serialize_weights(nearest_angle_bundle(4)).size() == 210);
}

TEST_CASE("weight digest matches an independent SHA-256") {
  CHECK(weight_digest(nearest_angle_bundle(3)) == 0x3f078f75de3c8840ull);
  CHECK(weight_digest(nearest_angle_bundle(4)) == 0x5f4ae53de2cbccf1ull);
  CHECK(digest_hex(0x3f078f75de3c8840ull) == "3f078f75de3c8840");
  CHECK(digest_hex(0x1ull) == "0000000000000001");
}

TEST_CASE("RWGT round trip") {
  std::mt19937_64 rng(2);
  for (uint8_t dim : {3, 4}) {
    WeightBundle b = rimg::testing::random_bundle(rng, dim, dim == 3 ? 99 : 199);
    CHECK_NOTHROW(b.validate());
    WeightBundle back = parse_weights(serialize_weights(b));
    CHECK(back == b);
    CHECK(weight_digest(back) == weight_digest(b));
    CHECK(back.head_depth() == 2);
    CHECK(back.concat_index() == 4);
  }
}

TEST_CASE("shape validation") {
  auto bad = [](auto mutate) {
    WeightBundle b = nearest_angle_bundle(3);
    mutate(b);
    return code_of([&] { b.validate(); });
  };
  CHECK(bad([](WeightBundle& b) { b.input_dim = 5; }) == ErrorCode::kWeightShapeMismatch);
  CHECK(bad([](WeightBundle& b) { b.layers[0].cols = 4; }) == ErrorCode::kWeightShapeMismatch);
  CHECK(bad([](WeightBundle& b) { b.layers[0].weights.pop_back(); }) == ErrorCode::kWeightShapeMismatch);
  CHECK(bad([](WeightBundle& b) { b.layers[2].rows = 7; }) == ErrorCode::kWeightShapeMismatch);
  CHECK(bad([](WeightBundle& b) { b.layers[2].cols = 1; }) == ErrorCode::kWeightShapeMismatch);
  CHECK(bad([](WeightBundle& b) { b.layers.pop_back(); }) == ErrorCode::kWeightShapeMismatch);
  CHECK(bad([](WeightBundle& b) { b.layers.erase(b.layers.begin() + 1); }) ==
        ErrorCode::kWeightShapeMismatch);
  CHECK(bad([](WeightBundle& b) {
          b.layers[4] = rimg::testing::pointwise_layer(2, 8, std::vector<float>(16, 0.f), {0, 0});
        }) == ErrorCode::kWeightShapeMismatch);
  CHECK(bad([](WeightBundle& b) { b.normalization = 0.0f; }) == ErrorCode::kWeightShapeMismatch);
}

TEST_CASE("RWGT parse errors") {
  Bytes good = serialize_weights(nearest_angle_bundle(3));
  Bytes truncated(good.begin(), good.end() - 3);
  CHECK(code_of([&] { parse_weights(truncated); }) == ErrorCode::kCorruptStream);
  Bytes trailing = good;
  trailing.push_back(1);
  CHECK(code_of([&] { parse_weights(trailing); }) == ErrorCode::kCorruptStream);
  Bytes kind = good;
  kind[13] = 9;
  CHECK(code_of([&] { parse_weights(kind); }) == ErrorCode::kCorruptStream);
  // A huge declared layer must not allocate before the bounds check.
  Bytes huge = good;
  huge[14] = huge[15] = huge[16] = 0xff;
  CHECK(code_of([&] { parse_weights(huge); }) == ErrorCode::kCorruptStream);
}

TEST_CASE("registry") {
  WeightRegistry reg;
  uint64_t d = reg.add(nearest_angle_bundle(3));
  CHECK(d == weight_digest(nearest_angle_bundle(3)));
  CHECK(*reg.find(d) == nearest_angle_bundle(3));
  try {
    reg.find(0x1234);
    FAIL("expected UnknownWeights");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownWeights);
    CHECK(std::string(e.what()).find("0000000000001234") != std::string::npos);
  }

  auto dir = std::filesystem::temp_directory_path() / "rimg_weights_test";
  std::filesystem::create_directories(dir);
  write_weights((dir / "t.rwgt").string(), nearest_angle_bundle(4));
  write_file((dir / "ignored.txt").string(), Bytes{1, 2, 3});
  WeightRegistry from_dir;
  from_dir.add_directory(dir.string());
  CHECK(from_dir.find(weight_digest(nearest_angle_bundle(4)))->input_dim == 4);
  std::filesystem::remove_all(dir);
}
