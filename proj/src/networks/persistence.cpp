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
#include <fstream>
#include <string>

#include "v2nc/errors.hpp"
#include "v2nc/json_config.hpp"
#include "v2nc/networks.hpp"

namespace v2nc {

using nlohmann::json;

// ---- ParamSet --------------------------------------------------------------

Tensor& ParamSet::add(std::string name, Tensor t) {
  for (const auto& p : items_)
    if (p.name == name) throw ConfigInvalid("duplicate parameter name " + name);
  items_.push_back({std::move(name), std::move(t)});
  return items_.back().tensor;
}

std::vector<Tensor> ParamSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.tensor);
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.tensor.numel();
  return n;
}

std::vector<NamedTensor> ParamSet::to_named() const {
  std::vector<NamedTensor> out;
  out.reserve(items_.size());
  for (const auto& p : items_) {
    const auto v = p.tensor.values();
    out.push_back({p.name, p.tensor.shape(), std::vector<float>(v.begin(), v.end())});
  }
  return out;
}

void ParamSet::load(std::span<const NamedTensor> named) {
  if (named.size() != items_.size()) {
    throw ShapeMismatch("checkpoint holds " + std::to_string(named.size()) + " tensors, network has " +
                        std::to_string(items_.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto& p = items_[i];
    if (named[i].name != p.name || named[i].shape != p.tensor.shape()) {
      throw ShapeMismatch("checkpoint tensor " + std::to_string(i) + " is " + named[i].name + " " +
                          shape_str(named[i].shape) + ", network expects " + p.name + " " +
                          shape_str(p.tensor.shape()));
    }
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    std::ranges::copy(named[i].values, items_[i].tensor.mutable_values().begin());
  }
}

void ParamSet::zero_grad() {
  for (auto& p : items_) p.tensor.zero_grad();
}

// ---- checkpoints -----------------------------------------------------------

namespace {

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoFailure("write failed for " + path.string());
}

json read_sidecar(const std::filesystem::path& checkpoint, const std::string& kind) {
  const auto path = sidecar_path(checkpoint);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("layout_version") || !j.contains("config") || !j.contains("kind")) {
    throw ParseError(path.string() + ": missing kind, layout_version or config");
  }
  if (j["kind"] != kind) throw ParseError(path.string() + ": expected a " + kind + " checkpoint");
  if (j["layout_version"] != kLayoutVersion) {
    throw CheckpointVersionMismatch(path.string() + ": layout version " + j["layout_version"].dump() +
                                    ", this build reads " + std::to_string(kLayoutVersion));
  }
  return j;
}

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoFailure("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".json";
  return p;
}

void save_segnet(const SegNet& net, const std::filesystem::path& path) {
  ensure_parent(path);
  save_checkpoint(path, net.params().to_named());
  write_json({{"kind", "segmentation"},
              {"arch", arch_name(net.config())},
              {"layout_version", kLayoutVersion},
              {"config", net.config()}},
             sidecar_path(path));
}

SegNet load_segnet(const std::filesystem::path& path) {
  const json j = read_sidecar(path, "segmentation");
  SegNetConfig cfg;
  try {
    cfg = j["config"].get<SegNetConfig>();
  } catch (const ConfigInvalid& e) {
    throw ParseError(sidecar_path(path).string() + ": " + e.what());
  }
  SegNet net(cfg, 0);
  net.params().load(load_checkpoint(path));
  return net;
}

void save_classifier(const ResNet3d& net, const std::filesystem::path& path, std::optional<double> threshold) {
  ensure_parent(path);
  save_checkpoint(path, net.params().to_named());
  json j{{"kind", "classifier"}, {"arch", "resnet18_3d"}, {"layout_version", kLayoutVersion}, {"config", net.config()}};
  if (threshold) {
    // Youden thresholds may be +-inf, which JSON numbers cannot carry.
    if (std::isinf(*threshold)) {
      j["threshold"] = *threshold > 0 ? "inf" : "-inf";
    } else {
      j["threshold"] = *threshold;
    }
  }
  write_json(j, sidecar_path(path));
}

LoadedClassifier load_classifier(const std::filesystem::path& path) {
  const json j = read_sidecar(path, "classifier");
  ClsNetConfig cfg;
  try {
    cfg = j["config"].get<ClsNetConfig>();
  } catch (const ConfigInvalid& e) {
    throw ParseError(sidecar_path(path).string() + ": " + e.what());
  }
  LoadedClassifier out{ResNet3d(cfg, 0), std::nullopt};
  out.net.params().load(load_checkpoint(path));
  if (j.contains("threshold")) {
    const auto& t = j["threshold"];
    if (t.is_number()) {
      out.threshold = t.get<double>();
    } else if (t == "inf" || t == "-inf") {
      out.threshold = t == "inf" ? HUGE_VAL : -HUGE_VAL;
    } else {
      throw ParseError(sidecar_path(path).string() + ": bad threshold");
    }
  }
  return out;
}

}  // namespace v2nc
