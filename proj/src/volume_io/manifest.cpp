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

#include <fstream>
#include <set>

#include <json.hpp>

#include "v2nc/errors.hpp"
#include "v2nc/volume_io.hpp"

namespace v2nc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void fail(const fs::path& file, int line, const std::string& what) {
  throw ParseError(file.string() + ": line " + std::to_string(line) + ": " + what);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string require_string(const json& j, const char* key, const fs::path& file, int line) {
  if (!j.contains(key)) fail(file, line, std::string("missing required key \"") + key + "\"");
  if (!j[key].is_string()) fail(file, line, std::string("key \"") + key + "\" must be a string");
  return j[key].get<std::string>();
}

std::optional<int> optional_stage(const json& j, const char* key, const fs::path& file, int line) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number_integer()) fail(file, line, std::string("key \"") + key + "\" must be an integer");
  const int v = j[key].get<int>();
  if (v < 0 || v > 3) fail(file, line, std::string("key \"") + key + "\" must be in 0..3");
  return v;
}

}  // namespace

std::vector<StudyRecord> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();

  std::vector<StudyRecord> records;
  std::set<std::string> seen;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(path, line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(path, line, "record must be a JSON object");

    StudyRecord r;
    r.case_id = require_string(j, "case_id", path, line);
    r.t1c_path = resolve(base, require_string(j, "t1c", path, line));
    r.t2_path = resolve(base, require_string(j, "t2", path, line));
    if (!j.contains("progression")) fail(path, line, "missing required key \"progression\"");
    const json& prog = j["progression"];
    if (!prog.is_number_integer() || (prog.get<int>() != 0 && prog.get<int>() != 1)) {
      fail(path, line, "key \"progression\" must be 0 or 1");
    }
    r.progression_3yr = prog.get<int>();
    if (j.contains("mask") && !j["mask"].is_null()) {
      r.mask_path = resolve(base, require_string(j, "mask", path, line));
    }
    r.overall_stage = optional_stage(j, "overall_stage", path, line);
    r.t_stage = optional_stage(j, "t_stage", path, line);
    if (j.contains("split") && j["split"].is_string()) r.split_tag = j["split"].get<std::string>();

    if (!seen.insert(r.case_id).second) throw DuplicateCaseId(r.case_id);
    records.push_back(std::move(r));
  }
  return records;
}

void write_manifest(const std::vector<StudyRecord>& records, const fs::path& path) {
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) {
    if (base.empty()) return p.generic_string();
    const fs::path r = p.lexically_relative(base);
    if (r.empty() || *r.begin() == "..") return p.generic_string();
    return r.generic_string();
  };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  for (const auto& r : records) {
    json j;
    j["case_id"] = r.case_id;
    j["t1c"] = rel(r.t1c_path);
    j["t2"] = rel(r.t2_path);
    if (r.mask_path) j["mask"] = rel(*r.mask_path);
    if (r.overall_stage) j["overall_stage"] = *r.overall_stage;
    if (r.t_stage) j["t_stage"] = *r.t_stage;
    j["progression"] = r.progression_3yr;
    if (r.split_tag) j["split"] = *r.split_tag;
    out << j.dump() << '\n';
  }
  if (!out) throw IoFailure("write failed: " + path.string());
}

}  // namespace v2nc
