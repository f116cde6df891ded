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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "test_util.hpp"
#include "v2nc/errors.hpp"
#include "v2nc/metrics.hpp"
#include "v2nc/phantom.hpp"

using namespace v2nc;
using v2nc::testing::TempDir;

namespace {

std::vector<char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Two-feature logistic regression by Newton iterations; returns fitted logits.
std::vector<double> logistic_fit(const std::vector<std::array<double, 2>>& x, const std::vector<int>& y) {
  double w[3] = {0, 0, 0};
  for (int it = 0; it < 50; ++it) {
    double g[3] = {0, 0, 0}, h[3][3] = {};
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double f[3] = {1.0, x[i][0], x[i][1]};
      const double p = 1.0 / (1.0 + std::exp(-(w[0] + w[1] * f[1] + w[2] * f[2])));
      for (int a = 0; a < 3; ++a) {
        g[a] += (y[i] - p) * f[a];
        for (int b = 0; b < 3; ++b) h[a][b] += p * (1 - p) * f[a] * f[b] + (a == b ? 1e-6 : 0.0);
      }
    }
    // Solve h * d = g by Cramer's rule.
    auto det3 = [](double m[3][3]) {
      return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double d = det3(h);
    for (int c = 0; c < 3; ++c) {
      double m[3][3];
      std::memcpy(m, h, sizeof m);
      for (int r = 0; r < 3; ++r) m[r][c] = g[r];
      w[c] += det3(m) / d;
    }
  }
  std::vector<double> out;
  for (const auto& xi : x) out.push_back(w[0] + w[1] * xi[0] + w[2] * xi[1]);
  return out;
}

}  // namespace

TEST_SUITE("phantom") {
  TEST_CASE("same (cfg, case_seed) is bit-identical; other seeds differ") {
    PhantomConfig cfg;
    cfg.seed = 9;
    const auto a = generate_case(cfg, 3), b = generate_case(cfg, 3), c = generate_case(cfg, 4);
    CHECK(a.t1c == b.t1c);
    CHECK(a.t2 == b.t2);
    CHECK(a.mask == b.mask);
    CHECK(a.record == b.record);
    CHECK_FALSE(a.t1c == c.t1c);
    cfg.seed = 10;
    CHECK_FALSE(generate_case(cfg, 3).t1c == a.t1c);
  }

  TEST_CASE("mask equals the brute-force ellipsoid membership set") {
    PhantomConfig cfg;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto pc = generate_case(cfg, s);
      long count = 0, agree = 0;
      const auto& e = pc.tumor;
      for (int z = 0; z < cfg.dims[2]; ++z)
        for (int y = 0; y < cfg.dims[1]; ++y)
          for (int x = 0; x < cfg.dims[0]; ++x) {
            const double q = std::pow((x - e.center[0]) / e.semi[0], 2) + std::pow((y - e.center[1]) / e.semi[1], 2) +
                             std::pow((z - e.center[2]) / e.semi[2], 2);
            const bool inside = q <= 1.0;
            count += inside;
            agree += inside == (pc.mask.at(x, y, z) == 1.0f);
          }
      CHECK(agree == static_cast<long>(pc.mask.size()));
      CHECK(count > 0);
      CHECK(std::abs(pc.volume_cc - count * 6.0 / 1000.0) < 1e-12);
      // 2-voxel margin on every side.
      for (int a = 0; a < 3; ++a) {
        CHECK(e.center[a] - e.semi[a] >= 2.0 - 1e-9);
        CHECK(e.center[a] + e.semi[a] <= cfg.dims[a] - 3.0 + 1e-9);
      }
    }
  }

  TEST_CASE("noiseless tumour voxels are exactly rim 1.0 / core 0.6 in T1C and 0.9 in T2") {
    PhantomConfig cfg;
    cfg.noise_sigma = 0.0;
    const auto pc = generate_case(cfg, 1);
    std::set<float> t1c_inside, t2_inside, outside;
    for (std::size_t i = 0; i < pc.mask.size(); ++i) {
      if (pc.mask.data()[i] == 1.0f) {
        t1c_inside.insert(pc.t1c.data()[i]);
        t2_inside.insert(pc.t2.data()[i]);
      } else {
        outside.insert(pc.t1c.data()[i]);
        outside.insert(pc.t2.data()[i]);
      }
    }
    CHECK(t1c_inside == std::set<float>{0.6f, 1.0f});
    CHECK(t2_inside == std::set<float>{0.9f});
    CHECK(outside == std::set<float>{0.0f});
    CHECK(pc.heterogeneity > 0.0);
    CHECK(pc.heterogeneity < 1.0);
  }

  TEST_CASE("t1c, t2 and mask share geometry; stages are quartile-balanced") {
    PhantomConfig cfg;
    int counts[4] = {0, 0, 0, 0};
    for (std::uint64_t s = 0; s < 400; ++s) {
      const auto pc = generate_case(cfg, s);
      CHECK(pc.t1c.same_geometry(pc.t2));
      CHECK(pc.t1c.same_geometry(pc.mask));
      REQUIRE(pc.record.t_stage.has_value());
      CHECK(pc.record.overall_stage == pc.record.t_stage);
      ++counts[*pc.record.t_stage];
    }
    for (int c : counts) {
      CHECK(c > 60);
      CHECK(c < 140);
    }
  }

  TEST_CASE("invalid configs are rejected") {
    PhantomConfig cfg;
    cfg.dims = {16, 48, 16};
    CHECK_THROWS_AS(generate_case(cfg, 0), ConfigInvalid);
    cfg = PhantomConfig{};
    cfg.dims = {48, 48, 8};
    CHECK_THROWS_AS(generate_case(cfg, 0), ConfigInvalid);
    cfg.radius_z_mm = {6.0, 9.0};
    CHECK_NOTHROW(generate_case(cfg, 0));
    cfg.noise_sigma = -1.0;
    CHECK_THROWS_AS(generate_case(cfg, 0), ConfigInvalid);
    cfg = PhantomConfig{};
    cfg.core_scale = {0.5, 1.2};
    CHECK_THROWS_AS(generate_case(cfg, 0), ConfigInvalid);
  }

  TEST_CASE("n=200: prevalence in [0.10, 0.35] and (volume, heterogeneity) logistic AUC >= 0.9") {
    PhantomConfig cfg;
    std::vector<std::array<double, 2>> x;
    std::vector<int> y;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const auto pc = generate_case(cfg, s);
      x.push_back({pc.volume_cc, pc.heterogeneity});
      y.push_back(pc.record.progression_3yr);
    }
    double prevalence = 0.0;
    for (int v : y) prevalence += v;
    prevalence /= 200.0;
    MESSAGE("prevalence " << prevalence);
    CHECK(prevalence >= 0.10);
    CHECK(prevalence <= 0.35);
    const double auc = roc_auc(logistic_fit(x, y), y);
    MESSAGE("logistic AUC " << auc);
    CHECK(auc >= 0.9);
  }

  TEST_CASE("generate_dataset: 10 unique ids, regenerates byte-identically") {
    TempDir a("phantom"), b("phantom");
    PhantomConfig cfg;
    cfg.dims = {32, 32, 12};
    cfg.radius_xy_mm = {3.0, 8.0};
    cfg.radius_z_mm = {6.0, 12.0};
    const auto sa = generate_dataset(cfg, 10, a.path());
    const auto sb = generate_dataset(cfg, 10, b.path());
    const auto recs = load_manifest(sa.manifest);
    REQUIRE(recs.size() == 10);
    std::set<std::string> ids;
    int pos = 0;
    for (const auto& r : recs) {
      ids.insert(r.case_id);
      pos += r.progression_3yr;
      REQUIRE(r.mask_path.has_value());
      CHECK(file_bytes(r.t1c_path) == file_bytes(b.path() / r.t1c_path.filename()));
      CHECK(file_bytes(*r.mask_path) == file_bytes(b.path() / r.mask_path->filename()));
    }
    CHECK(ids.size() == 10);
    CHECK(sa.positives == pos);
    CHECK(file_bytes(sa.manifest) == file_bytes(sb.manifest));
    CHECK_THROWS_AS(generate_dataset(cfg, 0, a.path()), ConfigInvalid);
  }
}
