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

// Independent reference implementations shared by the unit tests and the
// acceptance runner. None of them call into the code they check.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <random>
#include <vector>

#include "v2nc/volume_io.hpp"

namespace v2nc::testing {

/// O(P*N) pair counting, the definition of the Mann-Whitney statistic.
inline double auc_pairs(const std::vector<double>& s, const std::vector<int>& l) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (l[i] == 1 && l[j] == 0) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

/// 2 to 50 scores on a small grid so ties are common; both classes present.
inline void random_auc_instance(std::mt19937_64& rng, std::vector<double>& s, std::vector<int>& l) {
  const int n = std::uniform_int_distribution<int>(2, 50)(rng);
  const int grid = std::uniform_int_distribution<int>(2, 20)(rng);
  std::uniform_int_distribution<int> g(0, grid);
  std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.1, 0.9)(rng));
  s.resize(n);
  l.resize(n);
  for (int i = 0; i < n; ++i) {
    s[i] = g(rng) / static_cast<double>(grid);
    l[i] = coin(rng);
  }
  l[0] = 1;
  l[1] = 0;
}

/// Quantile by sorting and interpolating at position (n-1)q.
inline double quantile_oracle(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

/// Breadth-first flood fill from every unvisited foreground voxel over the
/// 26-neighbourhood; keeps the largest component, ties to the one holding the
/// smallest linear index.
inline Volume largest_component_oracle(const Volume& m) {
  const auto [X, Y, Z] = m.dims();
  const std::size_t n = m.size();
  std::vector<int> label(n, -1);
  std::vector<std::size_t> sizes;
  for (int z = 0; z < Z; ++z)
    for (int y = 0; y < Y; ++y)
      for (int x = 0; x < X; ++x) {
        if (m.at(x, y, z) == 0.0f || label[m.index(x, y, z)] >= 0) continue;
        const int id = static_cast<int>(sizes.size());
        std::size_t count = 0;
        std::deque<std::array<int, 3>> queue{{x, y, z}};
        label[m.index(x, y, z)] = id;
        while (!queue.empty()) {
          const auto [a, b, c] = queue.front();
          queue.pop_front();
          ++count;
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                const int u = a + dx, v = b + dy, w = c + dz;
                if (u < 0 || v < 0 || w < 0 || u >= X || v >= Y || w >= Z) continue;
                const std::size_t i = m.index(u, v, w);
                if (m.data()[i] == 0.0f || label[i] >= 0) continue;
                label[i] = id;
                queue.push_back({u, v, w});
              }
        }
        sizes.push_back(count);
      }
  // Components are discovered in linear-index order, so the first maximum
  // already holds the smallest index.
  int best = -1;
  for (std::size_t k = 0; k < sizes.size(); ++k)
    if (best < 0 || sizes[k] > sizes[best]) best = static_cast<int>(k);
  Volume out(m.dims(), m.spacing());
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = (best >= 0 && label[i] == best) ? 1.0f : 0.0f;
  return out;
}

/// Crop origin along one axis: box centre in double with halves rounded up
/// (or the volume centre for an empty box), minus half the window, clamped.
inline int crop_origin_oracle(bool empty, int lo, int hi, int dim, int size) {
  const double centre = empty ? std::floor(dim / 2.0) : std::floor((lo + hi) / 2.0 + 0.5);
  const double o = centre - size / 2;
  return static_cast<int>(std::clamp(o, 0.0, static_cast<double>(std::max(0, dim - size))));
}

}  // namespace v2nc::testing
