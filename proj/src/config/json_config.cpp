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

#include "v2nc/json_config.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <type_traits>

#include "v2nc/errors.hpp"

namespace v2nc {
namespace {

using nlohmann::json;

template <class T>
using FieldMap = std::map<std::string, std::function<void(const json&, T&)>>;

template <class T>
void apply_fields(const json& j, T& c, const FieldMap<T>& fields, const std::string& section) {
  if (!j.is_object()) throw ConfigInvalid(section + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigInvalid(section + ": unknown key \"" + key + "\"");
    try {
      it->second(value, c);
    } catch (const json::exception& e) {
      throw ConfigInvalid(section + "." + key + ": " + e.what());
    } catch (const ConfigInvalid& e) {
      throw ConfigInvalid(section + "." + key + ": " + e.what());
    }
  }
}

// Plain get_to() would let a float silently truncate into an int field.
template <class V>
void get_strict(const json& j, V& out) {
  if constexpr (std::is_same_v<V, bool>) {
    if (!j.is_boolean()) throw ConfigInvalid("expected a boolean");
  } else if constexpr (std::is_integral_v<V>) {
    if (!j.is_number_integer()) throw ConfigInvalid("expected an integer");
    if (std::is_unsigned_v<V> && j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0) {
      throw ConfigInvalid("expected a non-negative integer");
    }
  } else if constexpr (std::is_floating_point_v<V>) {
    if (!j.is_number()) throw ConfigInvalid("expected a number");
  }
  j.get_to(out);
}

template <class V, std::size_t N>
void get_strict(const json& j, std::array<V, N>& out) {
  if (!j.is_array() || j.size() != N) throw ConfigInvalid("expected an array of " + std::to_string(N));
  for (std::size_t i = 0; i < N; ++i) get_strict(j[i], out[i]);
}

void get_strict(const json& j, Range& out) {
  std::array<double, 2> v{};
  get_strict(j, v);
  out = {v[0], v[1]};
}

void get_strict(const json& j, ProgressionSignal& out) {
  const FieldMap<ProgressionSignal> fields{
      {"a_vol", [](const json& v, ProgressionSignal& s) { get_strict(v, s.a_vol); }},
      {"v0", [](const json& v, ProgressionSignal& s) { get_strict(v, s.v0); }},
      {"a_het", [](const json& v, ProgressionSignal& s) { get_strict(v, s.a_het); }},
      {"bias", [](const json& v, ProgressionSignal& s) { get_strict(v, s.bias); }},
  };
  apply_fields(j, out, fields, "signal");
}

void get_strict(const json& j, std::optional<float>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  float v = 0.0f;
  get_strict(j, v);
  out = v;
}

void get_strict(const json& j, std::filesystem::path& out) {
  if (!j.is_string()) throw ConfigInvalid("expected a string path");
  out = j.get<std::string>();
}

#define V2NC_FIELD(T, name) \
  { #name, [](const json& v, T& c) { get_strict(v, c.name); } }

const FieldMap<SegNetConfig>& seg_fields() {
  static const FieldMap<SegNetConfig> m{
      V2NC_FIELD(SegNetConfig, base_channels),       V2NC_FIELD(SegNetConfig, depth),
      V2NC_FIELD(SegNetConfig, convs_per_level),     V2NC_FIELD(SegNetConfig, kernel),
      V2NC_FIELD(SegNetConfig, dual_encoder),        V2NC_FIELD(SegNetConfig, cls_route),
      V2NC_FIELD(SegNetConfig, num_overall_classes), V2NC_FIELD(SegNetConfig, num_t_classes),
      V2NC_FIELD(SegNetConfig, cls_hidden),          V2NC_FIELD(SegNetConfig, input_shape),
  };
  return m;
}

const FieldMap<ClsNetConfig>& cls_fields() {
  static const FieldMap<ClsNetConfig> m{
      V2NC_FIELD(ClsNetConfig, in_channels),
      V2NC_FIELD(ClsNetConfig, stem_channels),
      V2NC_FIELD(ClsNetConfig, stage_blocks),
      V2NC_FIELD(ClsNetConfig, input_shape),
  };
  return m;
}

const FieldMap<PhantomConfig>& phantom_fields() {
  static const FieldMap<PhantomConfig> m{
      V2NC_FIELD(PhantomConfig, dims),         V2NC_FIELD(PhantomConfig, spacing),
      V2NC_FIELD(PhantomConfig, noise_sigma),  V2NC_FIELD(PhantomConfig, radius_xy_mm),
      V2NC_FIELD(PhantomConfig, radius_z_mm),  V2NC_FIELD(PhantomConfig, core_scale),
      V2NC_FIELD(PhantomConfig, t1c_rim),      V2NC_FIELD(PhantomConfig, t1c_core),
      V2NC_FIELD(PhantomConfig, t2_tumor),     V2NC_FIELD(PhantomConfig, signal),
      V2NC_FIELD(PhantomConfig, seed),
  };
  return m;
}

const FieldMap<TrainConfig>& train_fields() {
  static const FieldMap<TrainConfig> m{
      V2NC_FIELD(TrainConfig, seed),         V2NC_FIELD(TrainConfig, epochs),
      V2NC_FIELD(TrainConfig, batch_size),   V2NC_FIELD(TrainConfig, lr),
      V2NC_FIELD(TrainConfig, val_fraction), V2NC_FIELD(TrainConfig, lambda_cls),
      V2NC_FIELD(TrainConfig, w_pos),        V2NC_FIELD(TrainConfig, w_neg),
      V2NC_FIELD(TrainConfig, binarize_threshold), V2NC_FIELD(TrainConfig, checkpoint_dir),
  };
  return m;
}

#undef V2NC_FIELD

json range_json(Range r) { return json::array({r.lo, r.hi}); }

json optional_json(const std::optional<float>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void to_json(json& j, const SegNetConfig& c) {
  j = json{{"base_channels", c.base_channels},
           {"depth", c.depth},
           {"convs_per_level", c.convs_per_level},
           {"kernel", c.kernel},
           {"dual_encoder", c.dual_encoder},
           {"cls_route", c.cls_route},
           {"num_overall_classes", c.num_overall_classes},
           {"num_t_classes", c.num_t_classes},
           {"cls_hidden", c.cls_hidden},
           {"input_shape", c.input_shape}};
}

void to_json(json& j, const ClsNetConfig& c) {
  j = json{{"in_channels", c.in_channels},
           {"stem_channels", c.stem_channels},
           {"stage_blocks", c.stage_blocks},
           {"input_shape", c.input_shape}};
}

void to_json(json& j, const PhantomConfig& c) {
  j = json{{"dims", c.dims},
           {"spacing", c.spacing},
           {"noise_sigma", c.noise_sigma},
           {"radius_xy_mm", range_json(c.radius_xy_mm)},
           {"radius_z_mm", range_json(c.radius_z_mm)},
           {"core_scale", range_json(c.core_scale)},
           {"t1c_rim", c.t1c_rim},
           {"t1c_core", c.t1c_core},
           {"t2_tumor", c.t2_tumor},
           {"signal",
            {{"a_vol", c.signal.a_vol}, {"v0", c.signal.v0}, {"a_het", c.signal.a_het}, {"bias", c.signal.bias}}},
           {"seed", c.seed}};
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"seed", c.seed},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"lr", c.lr},
           {"val_fraction", c.val_fraction},
           {"lambda_cls", c.lambda_cls},
           {"w_pos", optional_json(c.w_pos)},
           {"w_neg", optional_json(c.w_neg)},
           {"binarize_threshold", c.binarize_threshold},
           {"checkpoint_dir", c.checkpoint_dir.string()}};
}

void merge_json(const json& j, SegNetConfig& c) { apply_fields(j, c, seg_fields(), "seg_net"); }
void merge_json(const json& j, ClsNetConfig& c) { apply_fields(j, c, cls_fields(), "cls_net"); }
void merge_json(const json& j, PhantomConfig& c) { apply_fields(j, c, phantom_fields(), "phantom"); }
void merge_json(const json& j, TrainConfig& c) { apply_fields(j, c, train_fields(), "train"); }

void from_json(const json& j, SegNetConfig& c) {
  c = SegNetConfig{};
  merge_json(j, c);
}

void from_json(const json& j, ClsNetConfig& c) {
  c = ClsNetConfig{};
  merge_json(j, c);
}

void from_json(const json& j, PhantomConfig& c) {
  c = PhantomConfig{};
  merge_json(j, c);
}

void from_json(const json& j, TrainConfig& c) {
  c = TrainConfig{};
  merge_json(j, c);
}

}  // namespace v2nc
