// Copyright 2026 The motas-lab Authors
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

// Binary container of id-keyed fixed-dimension float vectors.
//
//   offset 0   "MTAS" (4D 54 41 53)
//   offset 4   u32 LE version (1)
//   offset 8   u32 LE dim
//   offset 12  u32 LE row count
//   then per row: u32 LE id length, id bytes (UTF-8), dim x f32 LE
//
// The file length is fully determined by the header and the id lengths.
// Model checkpoints are a concatenation of such blocks, one per distinct
// parameter size.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "motas/error.hpp"

namespace motas {

inline constexpr std::uint32_t kCacheVersion = 1;
inline constexpr std::size_t kCacheHeaderBytes = 16;

class CacheError : public DataError {
 public:
  enum class Kind { kIo, kBadMagic, kVersionMismatch, kTruncated, kTrailingBytes, kDuplicateId,
                    kDimensionMismatch };
  CacheError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct CacheRow {
  std::string id;
  std::vector<float> values;
};

class FeatureCache {
 public:
  explicit FeatureCache(std::uint32_t dim = 0) : dim_(dim) {}

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  void add(std::string id, std::vector<float> values);
  const std::vector<float>* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  const std::vector<CacheRow>& rows() const { return rows_; }

 private:
  std::uint32_t dim_;
  std::vector<CacheRow> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<unsigned char> encode_cache(const FeatureCache& cache);
// Decodes one block starting at `offset`; advances offset past it.
FeatureCache decode_cache(std::span<const unsigned char> bytes, std::size_t& offset,
                          const std::string& context);

void write_cache(const std::filesystem::path& path, const FeatureCache& cache);
// Rejects trailing bytes after the single block.
FeatureCache read_cache(const std::filesystem::path& path);

void write_cache_blocks(const std::filesystem::path& path, std::span<const FeatureCache> blocks);
std::vector<FeatureCache> read_cache_blocks(const std::filesystem::path& path);

}  // namespace motas
