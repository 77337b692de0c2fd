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

#include "motas/feature_cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace motas {

namespace {

constexpr unsigned char kMagic[4] = {0x4D, 0x54, 0x41, 0x53};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<unsigned char>(v >> shift));
}

std::uint32_t get_u32(std::span<const unsigned char> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError(CacheError::Kind::kIo, "cannot open cache file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CacheError(CacheError::Kind::kIo, "cannot write cache file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CacheError(CacheError::Kind::kIo, "short write to " + path.string());
}

}  // namespace

void FeatureCache::add(std::string id, std::vector<float> values) {
  if (values.size() != dim_)
    throw CacheError(CacheError::Kind::kDimensionMismatch,
                     "row '" + id + "' has " + std::to_string(values.size()) +
                         " values, cache dim is " + std::to_string(dim_));
  if (index_.contains(id))
    throw CacheError(CacheError::Kind::kDuplicateId, "duplicate cache id '" + id + "'");
  index_.emplace(id, rows_.size());
  rows_.push_back({std::move(id), std::move(values)});
}

const std::vector<float>* FeatureCache::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &rows_[it->second].values;
}

std::vector<unsigned char> encode_cache(const FeatureCache& cache) {
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCacheVersion);
  put_u32(out, cache.dim());
  put_u32(out, static_cast<std::uint32_t>(cache.size()));
  for (const auto& row : cache.rows()) {
    put_u32(out, static_cast<std::uint32_t>(row.id.size()));
    out.insert(out.end(), row.id.begin(), row.id.end());
    for (float v : row.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

FeatureCache decode_cache(std::span<const unsigned char> bytes, std::size_t& offset,
                          const std::string& context) {
  const auto truncated = [&](const std::string& where) {
    return CacheError(CacheError::Kind::kTruncated, context + ": truncated " + where);
  };
  if (bytes.size() - offset < kCacheHeaderBytes) {
    if (bytes.size() - offset >= 4 && std::memcmp(bytes.data() + offset, kMagic, 4) != 0)
      throw CacheError(CacheError::Kind::kBadMagic, context + ": bad magic");
    throw truncated("header");
  }
  if (std::memcmp(bytes.data() + offset, kMagic, 4) != 0)
    throw CacheError(CacheError::Kind::kBadMagic, context + ": bad magic");
  const std::uint32_t version = get_u32(bytes, offset + 4);
  if (version != kCacheVersion)
    throw CacheError(CacheError::Kind::kVersionMismatch,
                     context + ": version " + std::to_string(version) + ", expected " +
                         std::to_string(kCacheVersion));
  const std::uint32_t dim = get_u32(bytes, offset + 8);
  const std::uint32_t count = get_u32(bytes, offset + 12);
  std::size_t pos = offset + kCacheHeaderBytes;
  FeatureCache cache(dim);
  const std::size_t payload = static_cast<std::size_t>(dim) * 4;
  for (std::uint32_t r = 0; r < count; ++r) {
    if (bytes.size() - pos < 4) throw truncated("row " + std::to_string(r) + " id length");
    const std::size_t id_len = get_u32(bytes, pos);
    pos += 4;
    if (bytes.size() - pos < id_len) throw truncated("row " + std::to_string(r) + " id");
    std::string id(reinterpret_cast<const char*>(bytes.data() + pos), id_len);
    pos += id_len;
    if (bytes.size() - pos < payload) throw truncated("row '" + id + "' values");
    std::vector<float> values(dim);
    for (std::uint32_t i = 0; i < dim; ++i)
      values[i] = std::bit_cast<float>(get_u32(bytes, pos + 4 * static_cast<std::size_t>(i)));
    pos += payload;
    if (cache.contains(id))
      throw CacheError(CacheError::Kind::kDuplicateId, context + ": duplicate id '" + id + "'");
    cache.add(std::move(id), std::move(values));
  }
  offset = pos;
  return cache;
}

void write_cache(const std::filesystem::path& path, const FeatureCache& cache) {
  spill(path, encode_cache(cache));
}

FeatureCache read_cache(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  std::size_t offset = 0;
  FeatureCache cache = decode_cache(bytes, offset, path.string());
  if (offset != bytes.size())
    throw CacheError(CacheError::Kind::kTrailingBytes,
                     path.string() + ": " + std::to_string(bytes.size() - offset) +
                         " bytes after the declared rows");
  return cache;
}

void write_cache_blocks(const std::filesystem::path& path, std::span<const FeatureCache> blocks) {
  std::vector<unsigned char> bytes;
  for (const auto& block : blocks) {
    auto encoded = encode_cache(block);
    bytes.insert(bytes.end(), encoded.begin(), encoded.end());
  }
  spill(path, bytes);
}

std::vector<FeatureCache> read_cache_blocks(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  std::vector<FeatureCache> blocks;
  std::size_t offset = 0;
  while (offset < bytes.size()) blocks.push_back(decode_cache(bytes, offset, path.string()));
  return blocks;
}

}  // namespace motas
