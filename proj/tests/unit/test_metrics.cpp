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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "support/oracles.hpp"
#include "test_util.hpp"
#include "v2nc/errors.hpp"
#include "v2nc/metrics.hpp"

using namespace v2nc;
using v2nc::testing::auc_pairs;
using v2nc::testing::random_auc_instance;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Volume mask_from(std::initializer_list<int> ones, int n = 8) {
  Volume v({n, 1, 1}, {1, 1, 1});
  for (int i : ones) v.data()[i] = 1.0f;
  return v;
}

}  // namespace

TEST_SUITE("dice") {
  TEST_CASE("examples") {
    const auto a = mask_from({0, 1, 2, 3});
    CHECK(dice_binary(a, a) == 1.0);
    CHECK(dice_binary(a, mask_from({4, 5})) == 0.0);
    CHECK(dice_binary(a, mask_from({2, 3, 4, 5})) == 0.5);
    CHECK(dice_binary(mask_from({}), mask_from({})) == 1.0);
    CHECK_THROWS_AS(dice_binary(a, mask_from({}, 7)), ShapeMismatch);
  }

  TEST_CASE("symmetric and within [0, 1] on random masks") {
    std::mt19937_64 rng(1);
    std::bernoulli_distribution coin(0.3);
    for (int t = 0; t < 200; ++t) {
      Volume a({5, 4, 3}, {1, 1, 1}), b({5, 4, 3}, {1, 1, 1});
      for (auto& x : a.data()) x = coin(rng);
      for (auto& x : b.data()) x = coin(rng);
      const double d = dice_binary(a, b);
      CHECK(d == dice_binary(b, a));
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
  }
}

TEST_SUITE("median_iqr") {
  TEST_CASE("examples") {
    auto q = median_iqr(std::vector<double>{5});
    CHECK((q.median == 5 && q.q1 == 5 && q.q3 == 5));
    q = median_iqr(std::vector<double>{1, 2, 3, 4, 5});
    CHECK((q.median == 3 && q.q1 == 2 && q.q3 == 4));
    q = median_iqr(std::vector<double>{4, 1, 3, 2});
    CHECK((q.median == 2.5 && q.q1 == 1.75 && q.q3 == 3.25));
    CHECK_THROWS_AS(median_iqr(std::vector<double>{}), EmptyInput);
  }

  TEST_CASE("matches the sort/interpolation oracle exactly on 100 random lists") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> v(std::uniform_int_distribution<int>(1, 40)(rng));
      for (auto& x : v) x = std::normal_distribution<double>(0.0, 3.0)(rng);
      auto oracle = [&](double q) { return v2nc::testing::quantile_oracle(v, q); };
      const auto q = median_iqr(v);
      CHECK(q.median == oracle(0.5));
      CHECK(q.q1 == oracle(0.25));
      CHECK(q.q3 == oracle(0.75));
      CHECK(q.q1 <= q.median);
      CHECK(q.median <= q.q3);
    }
  }
}

TEST_SUITE("roc_auc") {
  TEST_CASE("examples") {
    CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 1, 0, 0}) == 1.0);
    CHECK(roc_auc(std::vector<double>{0.4, 0.4, 0.4}, std::vector<int>{1, 0, 0}) == 0.5);
    CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.3}, std::vector<int>{1, 0, 1}) == 0.5);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), SingleClass);
  }

  TEST_CASE("trapezoid, rank and pair-counting agree within 1e-12 on 100 tied instances") {
    std::mt19937_64 rng(3);
    std::vector<double> s;
    std::vector<int> l;
    for (int t = 0; t < 100; ++t) {
      random_auc_instance(rng, s, l);
      const double ref = auc_pairs(s, l);
      CHECK(std::abs(roc_auc_trapezoid(s, l) - ref) <= 1e-12);
      CHECK(std::abs(roc_auc(s, l) - ref) <= 1e-12);
    }
  }

  TEST_CASE("negation complements and monotone transforms preserve") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 100; ++t) {
      const int n = std::uniform_int_distribution<int>(2, 40)(rng);
      std::vector<double> s(n), neg(n), mono(n);
      std::vector<int> l(n);
      for (int i = 0; i < n; ++i) {
        s[i] = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
        l[i] = i % 2;
        neg[i] = -s[i];
        mono[i] = std::exp(2.0 * s[i]) + 7.0;
      }
      CHECK(std::abs(roc_auc(s, l) + roc_auc(neg, l) - 1.0) < 1e-12);
      CHECK(roc_auc(mono, l) == roc_auc(s, l));
    }
  }
}

TEST_SUITE("youden") {
  TEST_CASE("examples") {
    const auto op = youden_threshold(std::vector<double>{0.9, 0.8, 0.3, 0.2}, std::vector<int>{1, 1, 0, 0});
    CHECK(op.sensitivity == 1.0);
    CHECK(op.specificity == 1.0);
    CHECK(op.threshold > 0.3);
    CHECK(op.threshold <= 0.8);

    const auto flat = youden_threshold(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1});
    CHECK(flat.sensitivity + flat.specificity == 1.0);
    CHECK(flat.sensitivity == 1.0);  // tie broken towards sensitivity

    const auto one = youden_threshold(std::vector<double>{0.95, 0.7, 0.6, 0.1}, std::vector<int>{1, 0, 0, 0});
    CHECK(one.sensitivity == 1.0);
    CHECK(one.specificity == 1.0);
  }

  TEST_CASE("matches an exhaustive sweep over every score and +-inf") {
    std::mt19937_64 rng(5);
    std::vector<double> s;
    std::vector<int> l;
    for (int t = 0; t < 100; ++t) {
      random_auc_instance(rng, s, l);
      double best = -2.0;
      std::vector<double> cand(s.begin(), s.end());
      cand.push_back(kInf);
      for (double thr : cand) {
        const auto c = confusion_at(s, l, thr);
        best = std::max(best, c.sensitivity + c.specificity - 1.0);
      }
      const auto op = youden_threshold(s, l);
      CHECK(std::abs(op.sensitivity + op.specificity - 1.0 - best) < 1e-12);
      const auto c = confusion_at(s, l, op.threshold);
      CHECK(c.sensitivity == op.sensitivity);
      CHECK(c.specificity == op.specificity);
    }
  }

  TEST_CASE("threshold frozen on one set applies to fresh data with valid rates") {
    std::mt19937_64 rng(6);
    std::vector<double> s, s2;
    std::vector<int> l, l2;
    for (int t = 0; t < 50; ++t) {
      random_auc_instance(rng, s, l);
      random_auc_instance(rng, s2, l2);
      const auto c = confusion_at(s2, l2, youden_threshold(s, l).threshold);
      for (double r : {c.sensitivity, c.specificity, c.accuracy}) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
      }
    }
  }
}

TEST_SUITE("confusion_at") {
  TEST_CASE("examples") {
    const std::vector<double> s{0.9, 0.1};
    const std::vector<int> l{1, 0};
    auto c = confusion_at(s, l, -kInf);
    CHECK((c.sensitivity == 1.0 && c.specificity == 0.0));
    c = confusion_at(s, l, kInf);
    CHECK((c.sensitivity == 0.0 && c.specificity == 1.0));
    c = confusion_at(s, l, 0.5);
    CHECK((c.sensitivity == 1.0 && c.specificity == 1.0 && c.accuracy == 1.0));
  }
}

TEST_SUITE("report") {
  TEST_CASE("json round trip including infinite thresholds") {
    EvalReport r{"v2netcls", "val", {}, {}};
    r.per_case.push_back({"a", 0.8125, 0.25, 1, std::array<int, 3>{1, 2, 3}, false});
    r.per_case.push_back({"b", std::nullopt, 0.75, 0, std::nullopt, true});
    r.per_case.push_back({"c", 0.1 + 0.2, std::nullopt, std::nullopt, std::nullopt, std::nullopt});
    summarize_dice(r);
    r.aggregate.threshold = -kInf;
    CHECK(report_from_json(report_to_json(r)) == r);
    CHECK(*r.aggregate.median_dice == doctest::Approx(0.55625));
  }

  TEST_CASE("summaries and table csv") {
    v2nc::testing::TempDir dir("report");
    EvalReport r{"m", "d", {}, {}};
    for (int i = 0; i < 6; ++i) r.per_case.push_back({std::to_string(i), 0.5 + 0.1 * i, i / 6.0, i >= 3 ? 1 : 0, std::nullopt, std::nullopt});
    summarize_dice(r);
    summarize_scores(r);
    CHECK(*r.aggregate.auc == 1.0);
    CHECK(*r.aggregate.sensitivity == 1.0);
    summarize_scores(r, 0.95);
    CHECK(*r.aggregate.threshold == 0.95);
    CHECK(*r.aggregate.sensitivity == 0.0);
    write_report(r, dir / "r.json");
    CHECK(read_report(dir / "r.json") == r);
    const std::vector<EvalReport> rs{r};
    write_table_csv(rs, dir / "t.csv");
    std::ifstream in(dir / "t.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "model,dataset,median_dice,q1,q3");
    CHECK(row == "m,d,0.750000,0.625000,0.875000");
  }
}
