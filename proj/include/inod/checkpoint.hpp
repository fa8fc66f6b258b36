// Copyright 2026 The INoD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Checkpoint file layout (all integers little-endian):
//
//   "INOD"                      4-byte magic
//   u32 version                 currently 1
//   u32 entry count
//   per entry:
//     u32 name length, name bytes (UTF-8)
//     u32 rank, u64 extent[rank]
//     u8  dtype                 1 = float32, 2 = float64
//     u64 offset                absolute file offset of the raw data
//   raw tensor data, row-major, little-endian IEEE-754

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <type_traits>
#include <vector>

#include "inod/encoder.hpp"
#include "inod/errors.hpp"
#include "inod/image.hpp"
#include "inod/tensor.hpp"

namespace inod {

inline constexpr char kCheckpointMagic[4] = {'I', 'N', 'O', 'D'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::kFloat32 : DType::kFloat64;
}

inline std::size_t dtype_size(DType d) { return d == DType::kFloat32 ? 4 : 8; }

struct CheckpointEntry {
  std::string name;
  Shape shape;
  DType dtype = DType::kFloat32;
  std::vector<double> values;
};

namespace detail {

inline void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void seek(std::size_t p) {
    if (p > bytes_.size()) throw FormatError("checkpoint offset beyond end of file");
    pos_ = p;
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename T>
std::string encode_checkpoint(const std::vector<NamedTensor<T>>& tensors) {
  std::string table;
  std::size_t table_size = 12;
  for (const auto& t : tensors) table_size += 4 + t.name.size() + 4 + 8 * t.value.rank() + 1 + 8;

  std::string out(kCheckpointMagic, 4);
  detail::put_le(out, kCheckpointVersion, 4);
  detail::put_le(out, tensors.size(), 4);
  std::uint64_t offset = table_size;
  for (const auto& t : tensors) {
    detail::put_le(out, t.name.size(), 4);
    out += t.name;
    detail::put_le(out, t.value.rank(), 4);
    for (auto e : t.value.shape()) detail::put_le(out, e, 8);
    out.push_back(static_cast<char>(dtype_of<T>()));
    detail::put_le(out, offset, 8);
    offset += t.value.size() * sizeof(T);
  }
  for (const auto& t : tensors) {
    for (T v : t.value.data()) {
      using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
      detail::put_le(out, std::bit_cast<Bits>(v), sizeof(T));
    }
  }
  return out;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Network<T>& net) {
  detail::write_file(path, encode_checkpoint(net.parameters()));
}

inline std::vector<CheckpointEntry> decode_checkpoint(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (r.str(4) != std::string(kCheckpointMagic, 4)) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const auto version = r.le(4);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.le(4);
  std::vector<CheckpointEntry> entries;
  std::vector<std::uint64_t> offsets;
  for (std::uint64_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.name = r.str(r.le(4));
    const auto rank = r.le(4);
    if (rank == 0 || rank > 4) throw FormatError("checkpoint entry '" + e.name + "' has bad rank");
    for (std::uint64_t k = 0; k < rank; ++k) {
      const auto extent = r.le(8);
      if (extent == 0 || extent > (1ull << 32)) throw FormatError("bad extent in " + e.name);
      e.shape.push_back(extent);
    }
    const auto d = r.le(1);
    if (d != 1 && d != 2) throw FormatError("unknown dtype in checkpoint entry '" + e.name + "'");
    e.dtype = static_cast<DType>(d);
    offsets.push_back(r.le(8));
    entries.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    r.seek(offsets[i]);
    const std::size_t n = shape_size(e.shape);
    r.need(n * dtype_size(e.dtype));
    e.values.resize(n);
    for (auto& v : e.values) {
      if (e.dtype == DType::kFloat32) {
        v = std::bit_cast<float>(static_cast<std::uint32_t>(r.le(4)));
      } else {
        v = std::bit_cast<double>(r.le(8));
      }
    }
  }
  return entries;
}

inline std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

// Copies checkpoint values into a network built from its own config; names
// and shapes must agree exactly.
template <typename T>
void load_checkpoint(Network<T>& net, const std::vector<CheckpointEntry>& entries) {
  auto& params = net.parameters();
  if (entries.size() != params.size()) {
    throw ConfigError("checkpoint has " + std::to_string(entries.size()) +
                      " tensors, the configured network has " + std::to_string(params.size()));
  }
  for (const auto& e : entries) {
    const std::size_t i = net.index_of(e.name);
    if (params[i].value.shape() != e.shape) {
      throw ConfigError("checkpoint tensor '" + e.name + "' has shape " + shape_str(e.shape) +
                        ", configured network expects " + shape_str(params[i].value.shape()));
    }
    std::vector<T> vals(e.values.begin(), e.values.end());
    params[i].value = Tensor<T>(e.shape, std::move(vals));
  }
}

template <typename T>
Network<T> load_checkpoint(const std::filesystem::path& path, const EncoderConfig& cfg) {
  Network<T> net(cfg);
  load_checkpoint(net, read_checkpoint(path));
  return net;
}

}  // namespace inod
