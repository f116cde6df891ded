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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "v2nc/errors.hpp"
#include "v2nc/pipeline.hpp"
#include "v2nc/rng.hpp"

namespace v2nc {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigInvalid("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigInvalid("batch_size must be >= 1");
  if (!(cfg.lr > 0.0f)) throw ConfigInvalid("lr must be > 0");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) throw ConfigInvalid("val_fraction must lie in (0, 1)");
  if (!(cfg.lambda_cls >= 0.0f)) throw ConfigInvalid("lambda_cls must be >= 0");
  if (cfg.w_pos && !(*cfg.w_pos > 0.0f)) throw ConfigInvalid("w_pos must be > 0");
  if (cfg.w_neg && !(*cfg.w_neg > 0.0f)) throw ConfigInvalid("w_neg must be > 0");
  if (!(cfg.binarize_threshold > 0.0f && cfg.binarize_threshold < 1.0f)) {
    throw ConfigInvalid("binarize_threshold must lie in (0, 1)");
  }
}

// ---- split -----------------------------------------------------------------

namespace {

// Fisher-Yates on raw engine output, so the permutation does not depend on
// the standard library's distribution implementations.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  shuffle_indices(idx, rng);
  return idx;
}

Split split_dataset(std::span<const StudyRecord> records, double val_fraction, std::uint64_t seed) {
  if (records.empty()) throw EmptyDataset("cannot split an empty dataset");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigInvalid("val_fraction must lie in (0, 1)");
  const std::size_t n = records.size();
  const auto order = shuffled_order(n, derive_seed(seed, SeedStream::kSplit));

  // Strata in shuffled order; each gives its first `quota` members to val.
  std::vector<std::size_t> strata[2];
  for (std::size_t i : order) strata[records[i].progression_3yr != 0 ? 1 : 0].push_back(i);
  const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
  std::size_t quota[2];
  double rest[2];
  std::size_t assigned = 0;
  for (int s = 0; s < 2; ++s) {
    const double exact = static_cast<double>(strata[s].size()) * val_fraction;
    quota[s] = static_cast<std::size_t>(std::floor(exact));
    rest[s] = exact - static_cast<double>(quota[s]);
    assigned += quota[s];
  }
  // Largest remainder until the overall count matches round(n * fraction).
  while (assigned < total) {
    int s = rest[1] > rest[0] ? 1 : 0;
    if (quota[s] >= strata[s].size()) s = 1 - s;
    ++quota[s];
    rest[s] = -1.0;
    ++assigned;
  }

  std::vector<bool> in_val(n, false);
  for (int s = 0; s < 2; ++s)
    for (std::size_t k = 0; k < quota[s]; ++k) in_val[strata[s][k]] = true;
  Split out;
  for (std::size_t i = 0; i < n; ++i) (in_val[i] ? out.val : out.train).push_back(records[i]);
  return out;
}

// ---- layout conversion -----------------------------------------------------

Tensor volume_to_tensor(const Volume& v) {
  const auto [X, Y, Z] = v.dims();
  std::vector<float> out(v.size());
  const auto src = v.data();
  std::size_t i = 0;
  for (int x = 0; x < X; ++x)
    for (int y = 0; y < Y; ++y)
      for (int z = 0; z < Z; ++z) out[i++] = src[v.index(x, y, z)];
  return Tensor::from({1, 1, X, Y, Z}, std::move(out));
}

Volume tensor_to_volume(const Tensor& t, Spacing3 spacing, int sample, int channel) {
  const Shape& s = t.shape();
  if (s.size() != 5 || sample < 0 || sample >= s[0] || channel < 0 || channel >= s[1]) {
    throw ShapeMismatch("tensor_to_volume: bad tensor " + shape_str(s));
  }
  Volume v({s[2], s[3], s[4]}, spacing);
  const auto src = t.values();
  const std::size_t inner = static_cast<std::size_t>(s[2]) * s[3] * s[4];
  std::size_t i = (static_cast<std::size_t>(sample) * s[1] + channel) * inner;
  for (int x = 0; x < s[2]; ++x)
    for (int y = 0; y < s[3]; ++y)
      for (int z = 0; z < s[4]; ++z) v.at(x, y, z) = src[i++];
  return v;
}

// ---- components and crops --------------------------------------------------

Volume largest_component(const Volume& mask) {
  const auto [X, Y, Z] = mask.dims();
  const auto m = mask.data();
  const std::size_t n = mask.size();
  std::vector<int> label(n, 0);
  std::vector<std::size_t> stack;
  int best_label = 0;
  std::size_t best_count = 0;
  int next = 0;
  // Scanning in index order, the first-labelled component of a given size is
  // the one with the smallest minimum index, so strict > settles ties.
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (m[seed] == 0.0f || label[seed] != 0) continue;
    ++next;
    std::size_t count = 0;
    label[seed] = next;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++count;
      const int x = static_cast<int>(i % X), y = static_cast<int>((i / X) % Y), z = static_cast<int>(i / X / Y);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy, nz = z + dz;
            if (nx < 0 || ny < 0 || nz < 0 || nx >= X || ny >= Y || nz >= Z) continue;
            const std::size_t j = mask.index(nx, ny, nz);
            if (m[j] != 0.0f && label[j] == 0) {
              label[j] = next;
              stack.push_back(j);
            }
          }
    }
    if (count > best_count) {
      best_count = count;
      best_label = next;
    }
  }
  Volume out(mask.dims(), mask.spacing());
  auto o = out.data();
  if (best_label != 0)
    for (std::size_t i = 0; i < n; ++i) o[i] = label[i] == best_label ? 1.0f : 0.0f;
  return out;
}

BoundingBox bounding_box(const Volume& mask) {
  BoundingBox b;
  const auto [X, Y, Z] = mask.dims();
  bool any = false;
  for (int z = 0; z < Z; ++z)
    for (int y = 0; y < Y; ++y)
      for (int x = 0; x < X; ++x) {
        if (mask.at(x, y, z) == 0.0f) continue;
        const Int3 p{x, y, z};
        for (int a = 0; a < 3; ++a) {
          b.lo[a] = any ? std::min(b.lo[a], p[a]) : p[a];
          b.hi[a] = any ? std::max(b.hi[a], p[a]) : p[a];
        }
        any = true;
      }
  return b;
}

Int3 crop_origin(const BoundingBox& box, const Dims3& dims, Int3 size) {
  Int3 o{};
  for (int a = 0; a < 3; ++a) {
    const int centre = box.empty() ? dims[a] / 2 : (box.lo[a] + box.hi[a] + 1) / 2;
    o[a] = std::clamp(centre - size[a] / 2, 0, std::max(0, dims[a] - size[a]));
  }
  return o;
}

CropVolume extract_crop(const Volume& t1c, const Volume& t2, const Volume& mask, Int3 size) {
  if (t1c.dims() != t2.dims() || t1c.dims() != mask.dims()) {
    throw ShapeMismatch("extract_crop: T1C, T2 and mask dims differ");
  }
  for (int a = 0; a < 3; ++a)
    if (size[a] < 1) throw ShapeMismatch("extract_crop: crop size must be positive");
  const Volume comp = largest_component(mask);
  const BoundingBox box = bounding_box(comp);
  CropVolume out;
  out.fallback_used = box.empty();
  out.origin = crop_origin(box, t1c.dims(), size);

  const auto& d = t1c.dims();
  const std::size_t inner = static_cast<std::size_t>(size[0]) * size[1] * size[2];
  std::vector<float> data(3 * inner, 0.0f);
  const Volume* src[3] = {&t1c, &t2, &comp};
  for (int x = 0; x < size[0]; ++x) {
    const int sx = out.origin[0] + x;
    if (sx >= d[0]) break;
    for (int y = 0; y < size[1]; ++y) {
      const int sy = out.origin[1] + y;
      if (sy >= d[1]) break;
      for (int z = 0; z < size[2]; ++z) {
        const int sz = out.origin[2] + z;
        if (sz >= d[2]) break;
        const std::size_t i = (static_cast<std::size_t>(x) * size[1] + y) * size[2] + z;
        for (int c = 0; c < 3; ++c) data[c * inner + i] = src[c]->at(sx, sy, sz);
      }
    }
  }
  out.data = Tensor::from({3, size[0], size[1], size[2]}, std::move(data));
  return out;
}

// ---- history ---------------------------------------------------------------

void write_history_csv(const History& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << "epoch,train_loss,val_metric\n";
  char line[96];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g\n", r.epoch, r.train_loss, r.val_metric);
    out << line;
  }
  if (!out) throw IoFailure("write failed for " + path.string());
}

}  // namespace v2nc
