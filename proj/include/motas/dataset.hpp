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

// Turning manifest records into model inputs.
//
// A cache directory holds one file per slot, <dir>/<slot>.cache:
//   w2v       deep speech embedding (d_w)
//   text      transcript embedding (d_t)
//   mfcc      MFCC embedding (d_m), or
//   mfcc_seq  flattened T x n_mfcc sequences for the built-in BiLSTM
//   spec      spectrogram embedding (d_s), or
//   spec_img  flattened 224 x 224 images for the built-in patch encoder
// A record's "caches" entry for a slot replaces the directory file.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motas/encoders.hpp"
#include "motas/experiment_config.hpp"
#include "motas/feature_cache.hpp"
#include "motas/manifest.hpp"
#include "motas/model.hpp"

namespace motas {

inline constexpr std::array<std::string_view, 6> kCacheSlots = {"w2v",  "text",     "mfcc",
                                                                 "mfcc_seq", "spec", "spec_img"};

class CacheSet {
 public:
  CacheSet() = default;
  explicit CacheSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  // In-memory slot, takes precedence over the directory.
  void put(std::string slot, FeatureCache cache);

  // nullptr when the slot has no file.
  const FeatureCache* slot(std::string_view name);
  const FeatureCache& file(const std::filesystem::path& path);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::shared_ptr<FeatureCache>, std::less<>> slots_;
  std::map<std::string, std::shared_ptr<FeatureCache>> files_;
};

// Throws DataError naming the record and slot when an input is missing.
SampleFeatures resolve_features(const ManifestRecord& record, const std::filesystem::path& base_dir,
                                CacheSet& caches, const ModelConfig& config);
std::vector<SampleFeatures> resolve_features(std::span<const ManifestRecord> records,
                                             const std::filesystem::path& base_dir, CacheSet& caches,
                                             const ModelConfig& config);

std::vector<ManifestRecord> select_split(const Manifest& manifest, Split split);

enum class RawFeature { kMfcc, kSpec };
RawFeature parse_raw_feature(std::string_view text);
std::string_view cache_slot(RawFeature feature);  // "mfcc_seq" or "spec_img"

struct ExtractResult {
  FeatureCache cache;
  std::vector<std::string> skipped_silent;
};

// Each record's audio is padded or cut to one 5 s segment; silent
// segments are skipped. MFCC rows hold T x n_mfcc values, image rows
// 224 x 224.
ExtractResult extract_features(const Manifest& manifest, RawFeature feature,
                               const dsp::FrameConfig& frames);

// Desk-scale stand-in for a real cohort: Gaussian embeddings whose class
// means differ along fixed directions, plus pairing-based synthetic
// training items built from the donors' embeddings.
struct SynthCohortSpec {
  std::size_t train_subjects = 100;
  std::size_t test_subjects = 60;
  SynthSpec embedding;
  std::uint64_t seed = 0;
  std::vector<double> factors = {1.0, 1.5, 2.0, 2.5, 3.0};
  // Noise added to donor embeddings when building a synthetic item.
  double jitter = 0.3;
};

struct SynthCohort {
  std::vector<ManifestRecord> train;
  std::vector<ManifestRecord> test;
  std::map<double, std::vector<ManifestRecord>> augmented;  // factor -> train split incl. synthetic
  std::map<std::string, FeatureCache> caches;                // slot -> rows for every id
};

SynthCohort make_synth_cohort(const SynthCohortSpec& spec);

// Writes test.jsonl, train_x<factor>.jsonl, caches/<slot>.cache and a
// grid.json holding the seven-cell ablation layout restricted to the
// factors present.
void write_synth_cohort(const std::filesystem::path& dir, const SynthCohort& cohort);

std::string factor_tag(double factor);  // 1.5 -> "1.5", 2 -> "2"

}  // namespace motas
