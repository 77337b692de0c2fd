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

// Per-modality mixture of experts with dense softmax gating.
//
// Each compressed modality owns k one-hidden-layer experts and a linear
// gate over the raw modality vector; the output is the gate-weighted sum of
// all expert outputs. Modalities never share parameters.

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "motas/encoders.hpp"
#include "motas/layers.hpp"
#include "motas/types.hpp"

namespace motas {

struct ExpertParams {
  grad::Linear fc1;  // h x d_x
  grad::Linear fc2;  // d_e x h
};

struct GatingParams {
  grad::Linear logits;  // k x d_x
};

struct MoEShape {
  std::size_t d_in = 0;
  std::size_t hidden = 64;
  std::size_t d_out = 128;
  std::size_t k = 3;
};

// x: B x d_x -> B x d_e
grad::Var expert_forward(const grad::Var& x, const ExpertParams& expert);
// x: B x d_x -> B x k, rows on the probability simplex
grad::Var gate(const grad::Var& x, const GatingParams& gating);

class MoEModalityLayer {
 public:
  MoEModalityLayer() = default;
  MoEModalityLayer(Modality modality, const MoEShape& shape, Rng& rng);
  // All parameters zero; tests fill in what they need.
  static MoEModalityLayer zeros(Modality modality, const MoEShape& shape);

  Modality modality() const { return modality_; }
  const MoEShape& shape() const { return shape_; }
  std::size_t k() const { return experts_.size(); }

  std::vector<ExpertParams>& experts() { return experts_; }
  const std::vector<ExpertParams>& experts() const { return experts_; }
  GatingParams& gating() { return gate_; }
  const GatingParams& gating() const { return gate_; }

  // Throws if the input is tagged with another modality or has the wrong width.
  grad::Var forward(Modality input_modality, const grad::Var& x) const;

  void collect(std::vector<grad::Var>& out) const;

 private:
  Modality modality_ = Modality::kMfcc;
  MoEShape shape_;
  std::vector<ExpertParams> experts_;
  GatingParams gate_;
};

std::string moe_prefix(Modality modality);

// Single-vector conveniences.
std::vector<double> expert_forward(std::span<const double> x, const ExpertParams& expert);
std::vector<double> gate(std::span<const double> x, const GatingParams& gating);
std::vector<double> moe_forward(Modality input_modality, std::span<const double> x,
                                const MoEModalityLayer& layer);

struct MoELayers {
  MoEModalityLayer mfcc;
  MoEModalityLayer spec;
  MoEModalityLayer text;

  const MoEModalityLayer& of(Modality m) const;
};

// Compresses (x_m, x_s, x_t) independently; x_w is not touched. Every
// modality is validated before any is evaluated.
std::array<std::vector<double>, 3> moe_apply_all(const EmbeddingBundle& bundle,
                                                 const MoELayers& layers);

}  // namespace motas
