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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2nc/networks.hpp"
#include "v2nc/phantom.hpp"
#include "v2nc/pipeline.hpp"

namespace v2nc {

/// Everything a command can be configured with, one JSON section per
/// component:
///
///   {"seg_train": {...}, "cls_train": {...}, "seg_net": {...},
///    "cls_net": {...}, "phantom": {...},
///    "paths": {"out_dir": "...", "manifest": "..."}}
struct RunConfig {
  TrainConfig seg_train;
  TrainConfig cls_train;
  SegNetConfig seg_net;
  ClsNetConfig cls_net;
  PhantomConfig phantom;
  std::filesystem::path out_dir = "runs";
  std::filesystem::path manifest;

  RunConfig();
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);
/// Overlays the keys present in j; unknown keys raise ConfigInvalid.
void merge_json(const nlohmann::json& j, RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the v2nc tool. Subcommands: gen-phantom, train-seg,
/// train-cls, evaluate, predict. Returns 0 on success, 1 on a pipeline error
/// and 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace v2nc
