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

// Sources of the four per-sample modality vectors: the trainable BiLSTM
// over MFCC frames, a patch-pooling stand-in for the image encoder,
// externally exported embeddings read from a feature cache, and a seeded
// Gaussian generator for self-contained experiments.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "motas/audio_dsp.hpp"
#include "motas/feature_cache.hpp"
#include "motas/layers.hpp"
#include "motas/types.hpp"

namespace motas {

struct EmbeddingBundle {
  std::vector<double> x_w;  // deep speech embedding, bypasses compression
  std::vector<double> x_m;
  std::vector<double> x_s;
  std::vector<double> x_t;
  std::string sample_id;
  Label label = Label::kCN;
  Source source = Source::kReal;

  const std::vector<double>& of(Modality m) const;
  std::vector<double>& of(Modality m);
};

// Throws InvalidArgument naming the first bad modality.
void validate(const EmbeddingBundle& bundle, const EmbeddingDims& dims);

struct LstmParams {
  grad::Var w_ih;  // 4H x in
  grad::Var w_hh;  // 4H x H
  grad::Var bias;  // 4H, gates (i, f, g, o)
};

// Two stacked bidirectional LSTM layers and a projection of the top layer's
// final forward and backward states.
class MfccEncoder {
 public:
  struct Shape {
    std::size_t n_mfcc = 13;
    std::size_t hidden = 128;
    std::size_t layers = 2;
    std::size_t out_dim = 128;
  };

  MfccEncoder() = default;
  // Forget-gate bias 1, everything else uniform in +-1/sqrt(fan_in).
  MfccEncoder(const Shape& shape, Rng& rng, const std::string& prefix = "enc.mfcc");
  static MfccEncoder zeros(const Shape& shape, const std::string& prefix = "enc.mfcc");

  const Shape& shape() const { return shape_; }

  // All sequences must share their frame count; returns B x out_dim.
  grad::Var encode_batch(std::span<const dsp::MfccSequence* const> seqs) const;
  // Handles ragged batches by encoding each sequence on its own.
  grad::Var encode(std::span<const dsp::MfccSequence* const> seqs) const;

  void collect(std::vector<grad::Var>& out) const;

  // layer-major, direction-minor: [l0 fwd, l0 bwd, l1 fwd, l1 bwd, ...]
  std::vector<LstmParams>& cells() { return cells_; }
  grad::Linear& projection() { return projection_; }

 private:
  Shape shape_;
  std::vector<LstmParams> cells_;
  grad::Linear projection_;
};

std::vector<double> encode_mfcc(const dsp::MfccSequence& seq, const MfccEncoder& encoder);

inline constexpr std::size_t kPatchSize = 16;
inline constexpr std::size_t kPooledDim = (dsp::kImageSize / kPatchSize) * (dsp::kImageSize / kPatchSize);

// 16x16 patch means in row-major patch order (196 values).
std::vector<double> patch_pool(const dsp::SpectrogramImage& image);

class SpecFallbackEncoder {
 public:
  SpecFallbackEncoder() = default;
  SpecFallbackEncoder(std::size_t out_dim, Rng& rng, const std::string& prefix = "enc.spec");

  // pooled: B x kPooledDim
  grad::Var encode_pooled(const grad::Tensor& pooled) const;
  void collect(std::vector<grad::Var>& out) const { projection_.collect(out); }
  grad::Linear& projection() { return projection_; }

 private:
  grad::Linear projection_;
};

std::vector<double> encode_spectrogram_fallback(const dsp::SpectrogramImage& image,
                                                const SpecFallbackEncoder& encoder);

// Fetches an exported embedding, checking presence and dimension.
std::vector<double> load_external_embedding(const FeatureCache& cache, const std::string& sample_id,
                                            std::size_t expected_dim);

struct SynthSpec {
  EmbeddingDims dims;
  // Class-mean separation along u for (w, mfcc, spec, text).
  std::array<double, 4> separation = {6.0, 6.0, 6.0, 6.0};
  std::uint64_t direction_seed = 0x6d6f746173ULL;

  static SynthSpec uniform(double separation, EmbeddingDims dims = {});
};

// x = N(0, I) + (+-separation/2) u per modality; AD takes the + sign.
EmbeddingBundle synth_embeddings(std::uint64_t seed, Label label, const SynthSpec& spec);

// Unit-norm class direction for slot 0..3 = (w, mfcc, spec, text).
std::vector<double> synth_direction(const SynthSpec& spec, std::size_t slot);

}  // namespace motas
