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

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "v2nc/volume_io.hpp"

namespace v2nc {

/// 2|A n B| / (|A| + |B|) over voxels equal to 1; 1.0 when both are empty.
double dice_binary(const Volume& a, const Volume& b);
double dice_binary(std::span<const float> a, std::span<const float> b);

struct Quartiles {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

/// Quantile q of sorted data by linear interpolation at position (n-1)q.
double quantile_sorted(std::span<const double> sorted, double q);

/// Median and quartiles. Throws EmptyInput.
Quartiles median_iqr(std::span<const double> values);

/// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie), via average
/// ranks. Throws SingleClass unless both labels occur.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Area under the empirical ROC curve by the trapezoidal rule, stepping one
/// distinct score at a time (tied scores move diagonally).
double roc_auc_trapezoid(std::span<const double> scores, std::span<const int> labels);

struct OperatingPoint {
  double threshold = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

/// Threshold maximising sensitivity + specificity - 1 over midpoints between
/// adjacent distinct scores and +-infinity. Ties prefer higher sensitivity,
/// then the lower threshold. Positive means score >= threshold.
OperatingPoint youden_threshold(std::span<const double> scores, std::span<const int> labels);

struct Confusion {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;
};

/// Rates at a fixed threshold (score >= threshold is positive). A rate whose
/// class is absent is reported as 0.
Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold);

struct CaseResult {
  std::string case_id;
  std::optional<double> dice;
  std::optional<double> score;
  std::optional<int> label;
  std::optional<std::array<int, 3>> crop_origin;
  std::optional<bool> fallback_used;

  friend bool operator==(const CaseResult&, const CaseResult&) = default;
};

struct Aggregate {
  std::optional<double> median_dice;
  std::optional<double> dice_q1;
  std::optional<double> dice_q3;
  std::optional<double> auc;
  std::optional<double> threshold;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> accuracy;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct EvalReport {
  std::string model;
  std::string dataset;
  std::vector<CaseResult> per_case;
  Aggregate aggregate;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Fills the Dice aggregate from per-case Dice values, when any exist.
void summarize_dice(EvalReport& report);

/// Fills AUC and the operating point from per-case scores. With no frozen
/// threshold the Youden threshold on these cases is used. Requires both
/// labels among scored cases.
void summarize_scores(EvalReport& report, std::optional<double> frozen_threshold = std::nullopt);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
void write_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

/// model,dataset,median_dice,q1,q3 with a header line.
void write_table_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);

}  // namespace v2nc
