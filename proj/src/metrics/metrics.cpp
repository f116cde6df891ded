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

#include "v2nc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "v2nc/errors.hpp"

namespace v2nc {
namespace {

struct ClassCounts {
  long pos = 0;
  long neg = 0;
};

ClassCounts check_binary(std::span<const double> scores, std::span<const int> labels, const char* op) {
  if (scores.size() != labels.size()) {
    throw ShapeMismatch(std::string(op) + ": " + std::to_string(scores.size()) + " scores vs " +
                        std::to_string(labels.size()) + " labels");
  }
  ClassCounts c;
  for (int l : labels) {
    if (l == 1) {
      ++c.pos;
    } else if (l == 0) {
      ++c.neg;
    } else {
      throw ShapeMismatch(std::string(op) + ": labels must be 0 or 1");
    }
  }
  return c;
}

ClassCounts require_both(std::span<const double> scores, std::span<const int> labels, const char* op) {
  const auto c = check_binary(scores, labels, op);
  if (c.pos == 0 || c.neg == 0) throw SingleClass(std::string(op) + ": both classes must be present");
  return c;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

}  // namespace

double dice_binary(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeMismatch("dice_binary: sizes differ");
  long inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] == 1.0f, y = b[i] == 1.0f;
    na += x;
    nb += y;
    inter += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

double dice_binary(const Volume& a, const Volume& b) {
  if (a.dims() != b.dims()) throw ShapeMismatch("dice_binary: dims differ");
  return dice_binary(a.data(), b.data());
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw EmptyInput("quantile of an empty list");
  const double pos = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Quartiles median_iqr(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("median_iqr of an empty list");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  return {quantile_sorted(s, 0.5), quantile_sorted(s, 0.25), quantile_sorted(s, 0.75)};
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const auto c = require_both(scores, labels, "roc_auc");
  const auto idx = order_by_score(scores);
  // Twice the rank sum of positives, with tied groups sharing their mean rank.
  double rank_sum2 = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double twice_mean_rank = static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] == 1) rank_sum2 += twice_mean_rank;
    i = j;
  }
  const double p = static_cast<double>(c.pos), n = static_cast<double>(c.neg);
  return (rank_sum2 / 2.0 - p * (p + 1.0) / 2.0) / (p * n);
}

double roc_auc_trapezoid(std::span<const double> scores, std::span<const int> labels) {
  const auto c = require_both(scores, labels, "roc_auc_trapezoid");
  auto idx = order_by_score(scores);
  std::reverse(idx.begin(), idx.end());
  long tp = 0, fp = 0;
  long twice_area = 0;  // in units of 1/(P*N)
  for (std::size_t i = 0; i < idx.size();) {
    long dtp = 0, dfp = 0;
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? dtp : dfp) += 1;
      ++j;
    }
    twice_area += dfp * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return static_cast<double>(twice_area) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

OperatingPoint youden_threshold(std::span<const double> scores, std::span<const int> labels) {
  const auto c = require_both(scores, labels, "youden_threshold");
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> candidates{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
    candidates.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
  candidates.push_back(std::numeric_limits<double>::infinity());

  // J compared exactly as tp*N + tn*P.
  long best_j = -1, best_tp = -1, best_tn = 0;
  double best_thr = 0.0;
  for (double thr : candidates) {
    long tp = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool pred = scores[i] >= thr;
      tp += pred && labels[i] == 1;
      tn += !pred && labels[i] == 0;
    }
    const long j = tp * c.neg + tn * c.pos;
    if (j > best_j || (j == best_j && tp > best_tp)) {
      best_j = j;
      best_tp = tp;
      best_tn = tn;
      best_thr = thr;
    }
  }
  return {best_thr, static_cast<double>(best_tp) / static_cast<double>(c.pos),
          static_cast<double>(best_tn) / static_cast<double>(c.neg)};
}

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  const auto c = check_binary(scores, labels, "confusion_at");
  long tp = 0, tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    tp += pred && labels[i] == 1;
    tn += !pred && labels[i] == 0;
  }
  Confusion out;
  out.sensitivity = c.pos > 0 ? static_cast<double>(tp) / static_cast<double>(c.pos) : 0.0;
  out.specificity = c.neg > 0 ? static_cast<double>(tn) / static_cast<double>(c.neg) : 0.0;
  out.accuracy = scores.empty() ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(scores.size());
  return out;
}

void summarize_dice(EvalReport& report) {
  std::vector<double> d;
  for (const auto& c : report.per_case)
    if (c.dice) d.push_back(*c.dice);
  if (d.empty()) return;
  const auto q = median_iqr(d);
  report.aggregate.median_dice = q.median;
  report.aggregate.dice_q1 = q.q1;
  report.aggregate.dice_q3 = q.q3;
}

void summarize_scores(EvalReport& report, std::optional<double> frozen_threshold) {
  std::vector<double> s;
  std::vector<int> l;
  for (const auto& c : report.per_case) {
    if (c.score && c.label) {
      s.push_back(*c.score);
      l.push_back(*c.label);
    }
  }
  auto& a = report.aggregate;
  a.auc = roc_auc(s, l);
  const double thr = frozen_threshold ? *frozen_threshold : youden_threshold(s, l).threshold;
  const auto conf = confusion_at(s, l, thr);
  a.threshold = thr;
  a.sensitivity = conf.sensitivity;
  a.specificity = conf.specificity;
  a.accuracy = conf.accuracy;
}

}  // namespace v2nc
