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

#include "motas/dataset.hpp"

#include <cstdio>

#include "motas/ablation.hpp"
#include "motas/augmentation.hpp"
#include "motas/error.hpp"
#include "motas/rng.hpp"

namespace motas {

namespace fs = std::filesystem;

void CacheSet::put(std::string slot, FeatureCache cache) {
  slots_[std::move(slot)] = std::make_shared<FeatureCache>(std::move(cache));
}

const FeatureCache* CacheSet::slot(std::string_view name) {
  if (auto it = slots_.find(name); it != slots_.end()) return it->second.get();
  if (dir_.empty()) return nullptr;
  const fs::path path = dir_ / (std::string(name) + ".cache");
  if (!fs::exists(path)) return nullptr;
  auto cache = std::make_shared<FeatureCache>(read_cache(path));
  const FeatureCache* out = cache.get();
  slots_.emplace(std::string(name), std::move(cache));
  return out;
}

const FeatureCache& CacheSet::file(const fs::path& path) {
  const std::string key = path.lexically_normal().string();
  auto it = files_.find(key);
  if (it == files_.end())
    it = files_.emplace(key, std::make_shared<FeatureCache>(read_cache(path))).first;
  return *it->second;
}

namespace {

std::vector<double> to_double(const std::vector<float>& v) { return {v.begin(), v.end()}; }

}  // namespace

SampleFeatures resolve_features(const ManifestRecord& record, const fs::path& base_dir,
                                CacheSet& caches, const ModelConfig& config) {
  const std::string& id = record.item.id;
  const auto lookup = [&](std::string_view slot, std::size_t dim) -> const std::vector<float>& {
    const FeatureCache* cache = nullptr;
    if (auto it = record.caches.find(std::string(slot)); it != record.caches.end()) {
      fs::path p(it->second);
      if (!p.is_absolute() && !base_dir.empty()) p = base_dir / p;
      cache = &caches.file(p);
    } else {
      cache = caches.slot(slot);
    }
    if (!cache)
      throw DataError("record '" + id + "': no cache for slot '" + std::string(slot) + "'");
    const std::vector<float>* row = cache->find(id);
    if (!row)
      throw DataError("record '" + id + "': missing embedding in slot '" + std::string(slot) + "'");
    if (dim != 0 && row->size() != dim)
      throw DataError("record '" + id + "': slot '" + std::string(slot) + "' has dim " +
                      std::to_string(row->size()) + ", expected " + std::to_string(dim));
    return *row;
  };

  SampleFeatures s;
  s.bundle.sample_id = id;
  s.bundle.label = record.item.label;
  s.bundle.source = record.item.source;
  s.subject = record.item.subject_key();
  const auto& d = config.dims;
  s.bundle.x_w = to_double(lookup("w2v", d.d_w));
  s.bundle.x_t = to_double(lookup("text", d.d_t));
  if (config.mfcc_encoder) {
    const auto& flat = lookup("mfcc_seq", 0);
    const std::size_t n = config.mfcc_shape.n_mfcc;
    if (flat.empty() || flat.size() % n != 0)
      throw DataError("record '" + id + "': mfcc_seq length " + std::to_string(flat.size()) +
                      " is not a multiple of " + std::to_string(n));
    dsp::MfccSequence seq(flat.size() / n, n);
    std::copy(flat.begin(), flat.end(), seq.data.begin());
    s.mfcc_sequence = std::move(seq);
  } else {
    s.bundle.x_m = to_double(lookup("mfcc", d.d_m));
  }
  if (config.spec_encoder) {
    const auto& flat = lookup("spec_img", dsp::kImageSize * dsp::kImageSize);
    dsp::SpectrogramImage img(dsp::kImageSize, dsp::kImageSize);
    std::copy(flat.begin(), flat.end(), img.data.begin());
    s.spec_pooled = patch_pool(img);
  } else {
    s.bundle.x_s = to_double(lookup("spec", d.d_s));
  }
  return s;
}

std::vector<SampleFeatures> resolve_features(std::span<const ManifestRecord> records,
                                             const fs::path& base_dir, CacheSet& caches,
                                             const ModelConfig& config) {
  std::vector<SampleFeatures> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(resolve_features(r, base_dir, caches, config));
  return out;
}

std::vector<ManifestRecord> select_split(const Manifest& manifest, Split split) {
  std::vector<ManifestRecord> out;
  for (const auto& r : manifest.records)
    if (r.split == split) out.push_back(r);
  return out;
}

RawFeature parse_raw_feature(std::string_view text) {
  if (text == "mfcc") return RawFeature::kMfcc;
  if (text == "spec") return RawFeature::kSpec;
  throw InvalidArgument("unknown feature '" + std::string(text) + "', expected mfcc or spec");
}

std::string_view cache_slot(RawFeature feature) {
  return feature == RawFeature::kMfcc ? "mfcc_seq" : "spec_img";
}

ExtractResult extract_features(const Manifest& manifest, RawFeature feature,
                               const dsp::FrameConfig& frames) {
  ExtractResult out;
  bool sized = false;
  for (const auto& r : manifest.records) {
    if (r.item.audio.empty()) throw DataError("record '" + r.item.id + "' has no audio");
    const dsp::AudioClip clip = dsp::pad_or_split(dsp::load_wav(manifest.resolve(r.item.audio))).front();
    if (dsp::is_silent(clip)) {
      out.skipped_silent.push_back(r.item.id);
      continue;
    }
    const dsp::Matrix m =
        feature == RawFeature::kMfcc ? dsp::compute_mfcc(clip, frames) : dsp::compute_spectrogram(clip, frames);
    if (!sized) {
      out.cache = FeatureCache(static_cast<std::uint32_t>(m.data.size()));
      sized = true;
    }
    if (m.data.size() != out.cache.dim())
      throw DataError("record '" + r.item.id + "': feature size " + std::to_string(m.data.size()) +
                      " differs from earlier records (" + std::to_string(out.cache.dim()) +
                      "); mixed sample rates?");
    out.cache.add(r.item.id, std::vector<float>(m.data.begin(), m.data.end()));
  }
  return out;
}

std::string factor_tag(double factor) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", factor);
  return buf;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

void store(SynthCohort& cohort, const std::string& id, const EmbeddingBundle& b) {
  const std::pair<const char*, const std::vector<double>*> slots[] = {
      {"w2v", &b.x_w}, {"mfcc", &b.x_m}, {"spec", &b.x_s}, {"text", &b.x_t}};
  for (const auto& [slot, values] : slots) {
    auto it = cohort.caches.try_emplace(slot, FeatureCache(static_cast<std::uint32_t>(values->size()))).first;
    it->second.add(id, to_float(*values));
  }
}

EmbeddingBundle lookup_bundle(const SynthCohort& cohort, const std::string& id) {
  EmbeddingBundle b;
  const auto get = [&](const char* slot) {
    const auto* row = cohort.caches.at(slot).find(id);
    return std::vector<double>(row->begin(), row->end());
  };
  b.x_w = get("w2v");
  b.x_m = get("mfcc");
  b.x_s = get("spec");
  b.x_t = get("text");
  return b;
}

}  // namespace

SynthCohort make_synth_cohort(const SynthCohortSpec& spec) {
  if (spec.train_subjects < 4 || spec.test_subjects < 2)
    throw InvalidArgument("synthetic cohort needs >= 4 train and >= 2 test subjects");
  SynthCohort cohort;
  const auto make = [&](const char* prefix, std::size_t n, std::uint64_t stream_base, Split split,
                        std::vector<ManifestRecord>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "%s%03zu", prefix, i);
      ManifestRecord r;
      r.item.id = id;
      r.item.label = i % 2 == 0 ? Label::kAD : Label::kCN;
      r.split = split;
      const EmbeddingBundle b =
          synth_embeddings(mix_seed(spec.seed, stream_base + i), r.item.label, spec.embedding);
      store(cohort, r.item.id, b);
      out.push_back(std::move(r));
    }
  };
  make("tr", spec.train_subjects, 1000, Split::kTrain, cohort.train);
  make("te", spec.test_subjects, 1000000, Split::kTest, cohort.test);

  std::vector<CohortItem> real;
  for (const auto& r : cohort.train) real.push_back(r.item);
  for (double factor : spec.factors) {
    const PairPlan plan = plan_pairs(real, factor, mix_seed(spec.seed, 7));
    auto& records = cohort.augmented[factor];
    records = cohort.train;
    for (const auto& p : plan.records) {
      ManifestRecord r;
      r.item.id = p.synth_id;
      r.item.label = p.label;
      r.item.source = Source::kSynthetic;
      r.item.voice_of = p.voice_id;
      r.item.transcript_of = p.transcript_id;
      r.item.subject = p.voice_id;
      r.split = Split::kTrain;
      if (!cohort.caches.at("w2v").contains(p.synth_id)) {
        // Speech channels follow the voice donor, text follows the transcript donor.
        const EmbeddingBundle voice = lookup_bundle(cohort, p.voice_id);
        const EmbeddingBundle donor = lookup_bundle(cohort, p.transcript_id);
        Rng rng(mix_seed(spec.seed, fnv1a(p.synth_id)));
        EmbeddingBundle b;
        const auto jittered = [&](const std::vector<double>& v) {
          std::vector<double> out(v);
          for (auto& x : out) x += spec.jitter * rng.normal();
          return out;
        };
        b.x_w = jittered(voice.x_w);
        b.x_m = jittered(voice.x_m);
        b.x_s = jittered(voice.x_s);
        b.x_t = jittered(donor.x_t);
        store(cohort, p.synth_id, b);
      }
      records.push_back(std::move(r));
    }
  }
  return cohort;
}

void write_synth_cohort(const fs::path& dir, const SynthCohort& cohort) {
  fs::create_directories(dir / "caches");
  write_manifest(dir / "test.jsonl", cohort.test);
  for (const auto& [factor, records] : cohort.augmented)
    write_manifest(dir / ("train_x" + factor_tag(factor) + ".jsonl"), records);
  for (const auto& [slot, cache] : cohort.caches) write_cache(dir / "caches" / (slot + ".cache"), cache);

  Grid grid;
  grid.test_manifest = "test.jsonl";
  grid.caches = "caches";
  for (GridCell cell : table3_cells()) {
    if (!cohort.augmented.count(cell.factor)) continue;
    cell.train_manifest = "train_x" + factor_tag(cell.factor) + ".jsonl";
    grid.cells.push_back(cell);
  }
  write_text_file(dir / "grid.json", grid_to_json(grid).dump(2) + "\n");
}

}  // namespace motas
