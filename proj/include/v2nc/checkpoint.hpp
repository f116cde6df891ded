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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "v2nc/tensor.hpp"

namespace v2nc {

/// Binary container layout (all integers little-endian):
///   "V2NC" | u32 version | u32 count |
///   count x { u16 name_len | name bytes | u8 dtype (0 = f32) | u8 ndim |
///             ndim x u32 dim | raw f32 payload }
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors);
/// Throws ParseError on malformed bytes, CheckpointVersionMismatch on a
/// version other than kCheckpointVersion.
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace v2nc
