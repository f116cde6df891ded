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

// JSON forms of every configuration struct. Decoding starts from the
// struct's defaults, overrides only the keys present, and throws
// ConfigInvalid on unknown keys or ill-typed values.

#pragma once

#include <json.hpp>

#include "v2nc/networks.hpp"
#include "v2nc/phantom.hpp"
#include "v2nc/pipeline.hpp"

namespace v2nc {

void to_json(nlohmann::json& j, const SegNetConfig& c);
void from_json(const nlohmann::json& j, SegNetConfig& c);

void to_json(nlohmann::json& j, const ClsNetConfig& c);
void from_json(const nlohmann::json& j, ClsNetConfig& c);

void to_json(nlohmann::json& j, const PhantomConfig& c);
void from_json(const nlohmann::json& j, PhantomConfig& c);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Applies the keys of `j` on top of `c` (same rules as from_json).
void merge_json(const nlohmann::json& j, SegNetConfig& c);
void merge_json(const nlohmann::json& j, ClsNetConfig& c);
void merge_json(const nlohmann::json& j, PhantomConfig& c);
void merge_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace v2nc
