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
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "v2nc/errors.hpp"
#include "v2nc/volume_io.hpp"

namespace v2nc {
namespace {

// Byte offsets inside the 348-byte NIfTI-1 header.
constexpr std::size_t kSizeofHdr = 0;
constexpr std::size_t kDim = 40;
constexpr std::size_t kDatatype = 70;
constexpr std::size_t kBitpix = 72;
constexpr std::size_t kPixdim = 76;
constexpr std::size_t kVoxOffset = 108;
constexpr std::size_t kSclSlope = 112;
constexpr std::size_t kSclInter = 116;
constexpr std::size_t kXyztUnits = 123;
constexpr std::size_t kDescrip = 148;
constexpr std::size_t kMagic = 344;
constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

template <typename T>
T load_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void store_le(unsigned char* p, T v) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  std::memcpy(p, &v, sizeof(T));
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Volume read_nifti(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const std::string where = path.string() + ": ";
  if (bytes.size() < kHeaderSize) throw MalformedHeader(where + "file shorter than 348-byte header");
  const unsigned char* h = bytes.data();

  if (load_le<std::int32_t>(h + kSizeofHdr) != 348) {
    throw MalformedHeader(where + "sizeof_hdr != 348 (big-endian or not NIfTI-1)");
  }
  if (std::memcmp(h + kMagic, "n+1\0", 4) != 0) {
    throw MalformedHeader(where + "magic is not \"n+1\" (only single-file .nii is supported)");
  }

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = load_le<std::int16_t>(h + kDim + 2 * i);
  if (dim[0] != 3) throw MalformedHeader(where + "dim[0] must be 3, got " + std::to_string(dim[0]));
  Dims3 dims{dim[1], dim[2], dim[3]};
  for (int d : dims) {
    if (d < 1) throw MalformedHeader(where + "non-positive dimension");
  }

  Spacing3 spacing{};
  for (int i = 0; i < 3; ++i) {
    const float p = load_le<float>(h + kPixdim + 4 * (i + 1));
    if (!(p > 0.0f) || !std::isfinite(p)) throw MalformedHeader(where + "pixdim must be positive");
    spacing[i] = p;
  }

  const auto datatype = load_le<std::int16_t>(h + kDatatype);
  std::size_t bytes_per_voxel = 0;
  switch (datatype) {
    case kDtUint8: bytes_per_voxel = 1; break;
    case kDtInt16: bytes_per_voxel = 2; break;
    case kDtFloat32: bytes_per_voxel = 4; break;
    default:
      throw UnsupportedDatatype(where + "datatype " + std::to_string(datatype) +
                                " (supported: 2 uint8, 4 int16, 16 float32)");
  }

  const float vox_offset_f = load_le<float>(h + kVoxOffset);
  if (!(vox_offset_f >= static_cast<float>(kDataOffset))) {
    throw MalformedHeader(where + "vox_offset < 352");
  }
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);
  const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (bytes.size() < vox_offset + count * bytes_per_voxel) {
    throw TruncatedData(where + "payload has " +
                        std::to_string(bytes.size() > vox_offset ? bytes.size() - vox_offset : 0) +
                        " bytes, expected " + std::to_string(count * bytes_per_voxel));
  }

  const float slope = load_le<float>(h + kSclSlope);
  const float inter = load_le<float>(h + kSclInter);
  // Identity scaling is skipped so -0.0f survives a round trip.
  const bool scale = slope != 0.0f && std::isfinite(slope) && std::isfinite(inter) &&
                     !(slope == 1.0f && inter == 0.0f);

  std::vector<float> data(count);
  const unsigned char* payload = h + vox_offset;
  for (std::size_t i = 0; i < count; ++i) {
    float v = 0.0f;
    switch (datatype) {
      case kDtUint8: v = static_cast<float>(payload[i]); break;
      case kDtInt16: v = static_cast<float>(load_le<std::int16_t>(payload + 2 * i)); break;
      default: v = load_le<float>(payload + 4 * i); break;
    }
    if (scale) v = slope * v + inter;
    if (!std::isfinite(v)) throw MalformedHeader(where + "non-finite voxel value");
    data[i] = v;
  }
  return Volume(dims, spacing, std::move(data));
}

void write_nifti(const Volume& vol, const std::filesystem::path& path) {
  const auto& dims = vol.dims();
  std::vector<unsigned char> buf(kDataOffset + vol.size() * 4, 0);
  unsigned char* h = buf.data();

  store_le<std::int32_t>(h + kSizeofHdr, 348);
  store_le<std::int16_t>(h + kDim, 3);
  for (int i = 0; i < 3; ++i) store_le<std::int16_t>(h + kDim + 2 * (i + 1), static_cast<std::int16_t>(dims[i]));
  for (int i = 4; i < 8; ++i) store_le<std::int16_t>(h + kDim + 2 * i, 1);
  store_le<std::int16_t>(h + kDatatype, kDtFloat32);
  store_le<std::int16_t>(h + kBitpix, 32);
  store_le<float>(h + kPixdim, 1.0f);
  for (int i = 0; i < 3; ++i) store_le<float>(h + kPixdim + 4 * (i + 1), vol.spacing()[i]);
  for (int i = 4; i < 8; ++i) store_le<float>(h + kPixdim + 4 * i, 1.0f);
  store_le<float>(h + kVoxOffset, static_cast<float>(kDataOffset));
  store_le<float>(h + kSclSlope, 1.0f);
  store_le<float>(h + kSclInter, 0.0f);
  h[kXyztUnits] = 2;  // NIFTI_UNITS_MM
  std::memcpy(h + kDescrip, "v2nc", 4);
  std::memcpy(h + kMagic, "n+1\0", 4);

  unsigned char* payload = h + kDataOffset;
  const auto data = vol.data();
  for (std::size_t i = 0; i < data.size(); ++i) store_le<float>(payload + 4 * i, data[i]);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

}  // namespace v2nc
