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

#include "v2nc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "v2nc/errors.hpp"

namespace v2nc {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors) {
  Writer w;
  w.put_raw("V2NC", 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.name.size() > 0xffff) throw ConfigInvalid("tensor name too long: " + t.name);
    if (t.shape.size() > 0xff) throw ConfigInvalid("too many dims in " + t.name);
    if (numel(t.shape) != t.values.size()) throw ShapeMismatch("checkpoint tensor " + t.name + " size mismatch");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_raw(t.name.data(), t.name.size());
    w.put<std::uint8_t>(0);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put_raw(t.values.data(), t.values.size() * sizeof(float));
  }
  return std::move(w.bytes);
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4), "V2NC", 4) != 0) throw ParseError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                                    std::to_string(kCheckpointVersion));
  }
  const auto count = r.get<std::uint32_t>();
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto len = r.get<std::uint16_t>();
    const auto* name = r.take(len);
    t.name.assign(reinterpret_cast<const char*>(name), len);
    if (r.get<std::uint8_t>() != 0) throw ParseError("unsupported dtype for tensor " + t.name);
    const auto ndim = r.get<std::uint8_t>();
    for (int d = 0; d < ndim; ++d) t.shape.push_back(static_cast<int>(r.get<std::uint32_t>()));
    t.values.resize(numel(t.shape));
    std::memcpy(t.values.data(), r.take(t.values.size() * sizeof(float)), t.values.size() * sizeof(float));
    out.push_back(std::move(t));
  }
  if (!r.done()) throw ParseError("trailing bytes after checkpoint payload");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return decode_checkpoint(bytes);
  } catch (const CheckpointVersionMismatch& e) {
    throw CheckpointVersionMismatch(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace v2nc
