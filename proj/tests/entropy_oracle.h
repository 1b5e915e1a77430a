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

// Cost oracles for the entropy coders, computed without the coder itself.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace rimg::testing {

// Ideal code length in bits of `symbols` under the adaptive order-0 model:
// 256 counts starting at one, the last entry an escape followed by 32 raw
// bits, +32 per coded entry, all counts halved (rounding up) once the total
// passes 2^20.
inline double adaptive_cross_entropy(const std::vector<uint32_t>& symbols) {
  std::array<double, 256> count;
  count.fill(1.0);
  double total = 256.0;
  double bits = 0.0;
  for (uint32_t s : symbols) {
    size_t e = s < 255 ? s : 255;
    bits += std::log2(total / count[e]);
    if (e == 255) bits += 32.0;
    count[e] += 32.0;
    total += 32.0;
    if (total > 1048576.0) {
      total = 0.0;
      for (double& c : count) {
        c = std::ceil(c / 2.0);
        total += c;
      }
    }
  }
  return bits;
}

// Empirical order-0 entropy in bits: sum over symbols of -log2(frequency).
inline double empirical_entropy(const std::vector<uint32_t>& symbols) {
  std::map<uint32_t, double> hist;
  for (uint32_t s : symbols) hist[s] += 1.0;
  double n = static_cast<double>(symbols.size());
  double bits = 0.0;
  for (const auto& [s, c] : hist) bits += c * std::log2(n / c);
  return bits;
}

}  // namespace rimg::testing
