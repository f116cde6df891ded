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

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "v2nc/errors.hpp"
#include "v2nc/metrics.hpp"

namespace v2nc {
namespace {

using nlohmann::json;

// JSON has no infinities; the +-inf Youden thresholds are written as strings.
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double to_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    throw ParseError("expected a number, got \"" + s + "\"");
  }
  return j.get<double>();
}

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (!v) return;
  if constexpr (std::is_same_v<T, double>) {
    j[key] = number(*v);
  } else {
    j[key] = *v;
  }
}

template <typename T>
void get(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  if constexpr (std::is_same_v<T, double>) {
    out = to_number(j.at(key));
  } else {
    out = j.at(key).get<T>();
  }
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  json cases = json::array();
  for (const auto& c : r.per_case) {
    json jc{{"case_id", c.case_id}};
    put(jc, "dice", c.dice);
    put(jc, "score", c.score);
    put(jc, "label", c.label);
    put(jc, "crop_origin", c.crop_origin);
    put(jc, "fallback_used", c.fallback_used);
    cases.push_back(std::move(jc));
  }
  json agg = json::object();
  const auto& a = r.aggregate;
  put(agg, "median_dice", a.median_dice);
  put(agg, "dice_q1", a.dice_q1);
  put(agg, "dice_q3", a.dice_q3);
  put(agg, "auc", a.auc);
  put(agg, "threshold", a.threshold);
  put(agg, "sensitivity", a.sensitivity);
  put(agg, "specificity", a.specificity);
  put(agg, "accuracy", a.accuracy);
  const json j{{"model", r.model}, {"dataset", r.dataset}, {"per_case", cases}, {"aggregate", agg}};
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    EvalReport r;
    r.model = j.value("model", "");
    r.dataset = j.value("dataset", "");
    for (const auto& jc : j.at("per_case")) {
      CaseResult c;
      c.case_id = jc.at("case_id").get<std::string>();
      get(jc, "dice", c.dice);
      get(jc, "score", c.score);
      get(jc, "label", c.label);
      get(jc, "crop_origin", c.crop_origin);
      get(jc, "fallback_used", c.fallback_used);
      r.per_case.push_back(std::move(c));
    }
    const auto& ja = j.at("aggregate");
    auto& a = r.aggregate;
    get(ja, "median_dice", a.median_dice);
    get(ja, "dice_q1", a.dice_q1);
    get(ja, "dice_q3", a.dice_q3);
    get(ja, "auc", a.auc);
    get(ja, "threshold", a.threshold);
    get(ja, "sensitivity", a.sensitivity);
    get(ja, "specificity", a.specificity);
    get(ja, "accuracy", a.accuracy);
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("eval report: ") + e.what());
  }
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << report_to_json(report);
  if (!out) throw IoFailure("write failed: " + path.string());
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open report " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

void write_table_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << "model,dataset,median_dice,q1,q3\n" << std::setprecision(6) << std::fixed;
  for (const auto& r : reports) {
    const auto& a = r.aggregate;
    out << r.model << ',' << r.dataset << ',';
    if (a.median_dice) out << *a.median_dice << ',' << *a.dice_q1 << ',' << *a.dice_q3;
    else out << ",,";
    out << '\n';
  }
  if (!out) throw IoFailure("write failed: " + path.string());
}

}  // namespace v2nc
