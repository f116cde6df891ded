/*
 * Copyright 2026 The v2nc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>

namespace v2nc {

using Rng = std::mt19937_64;

/// Independent random streams hanging off one root seed.
enum class SeedStream : std::uint64_t {
  kSplit = 1,
  kInit = 2,
  kShuffle = 3,
  kPhantom = 4,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based derivation: (root, stream, counter) -> seed. Each subsystem
/// owns a stream, so adding draws in one never perturbs another.
inline std::uint64_t derive_seed(std::uint64_t root, SeedStream stream,
                                 std::uint64_t counter = 0) {
  return splitmix64(splitmix64(root ^ splitmix64(static_cast<std::uint64_t>(stream))) + counter);
}

}  // namespace v2nc
