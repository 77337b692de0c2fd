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

// The full classifier: optional built-in encoders, one compressor per
// modality (MoE or, for the ablation baseline, a linear projection),
// fusion with the deep speech embedding, and the MLP head.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motas/encoders.hpp"
#include "motas/fusion.hpp"
#include "motas/moe.hpp"

namespace motas {

struct ModelConfig {
  EmbeddingDims dims;
  std::size_t d_e = 128;
  std::size_t k = 3;
  std::size_t expert_hidden = 64;
  bool moe_enabled = true;
  std::size_t mlp_hidden1 = 256;
  std::size_t mlp_hidden2 = 64;
  double dropout = 0.3;
  // Built-in encoders; when off the modality arrives as a ready embedding.
  bool mfcc_encoder = false;
  MfccEncoder::Shape mfcc_shape;  // out_dim is forced to dims.d_m
  bool spec_encoder = false;

  std::size_t fusion_dim() const { return 3 * d_e + dims.d_w; }
};

// Maps one modality to d_e: the MoE layer, or a linear projection when
// the mixture is ablated.
class Compressor {
 public:
  Compressor() = default;
  Compressor(Modality modality, const ModelConfig& config, Rng& rng);

  Modality modality() const { return modality_; }
  bool is_moe() const { return moe_.has_value(); }
  const MoEModalityLayer& moe() const { return *moe_; }
  MoEModalityLayer& moe() { return *moe_; }

  grad::Var forward(const grad::Var& x) const;
  void collect(std::vector<grad::Var>& out) const;

 private:
  Modality modality_ = Modality::kMfcc;
  std::optional<MoEModalityLayer> moe_;
  grad::Linear projection_;
};

// Everything the model can consume for one segment.
struct SampleFeatures {
  EmbeddingBundle bundle;  // x_m / x_s may be empty when raw inputs are used
  std::string subject;
  std::optional<dsp::MfccSequence> mfcc_sequence;
  std::vector<double> spec_pooled;  // kPooledDim values when an image is used
};

class MotasModel {
 public:
  MotasModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  // Probabilities (B x 1) for the selected samples.
  grad::Var forward(std::span<const SampleFeatures> samples, std::span<const std::size_t> indices,
                    bool training, Rng& rng) const;
  // Fused representation only (B x fusion_dim).
  grad::Var fused(std::span<const SampleFeatures> samples,
                  std::span<const std::size_t> indices) const;

  std::vector<double> predict_proba(std::span<const SampleFeatures> samples) const;

  std::vector<grad::Var> parameters() const;

  const Compressor& compressor(Modality m) const;
  Compressor& compressor(Modality m);
  MlpParams& mlp() { return mlp_; }
  const MlpParams& mlp() const { return mlp_; }
  std::optional<MfccEncoder>& mfcc_encoder() { return mfcc_encoder_; }
  std::optional<SpecFallbackEncoder>& spec_encoder() { return spec_encoder_; }

 private:
  ModelConfig config_;
  std::optional<MfccEncoder> mfcc_encoder_;
  std::optional<SpecFallbackEncoder> spec_encoder_;
  Compressor mfcc_, spec_, text_;
  MlpParams mlp_;
};

// Summed binary cross-entropy over the selected samples.
grad::Var loss_batch(const MotasModel& model, std::span<const SampleFeatures> samples,
                     std::span<const std::size_t> indices, bool training, Rng& rng);

// Parameters go to `path` as cache blocks keyed by parameter name (float32);
// the model config goes to `path` + ".json".
void save_model(const std::filesystem::path& path, const MotasModel& model);
MotasModel load_model(const std::filesystem::path& path);

std::string model_config_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace motas
