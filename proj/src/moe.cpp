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

#include "motas/moe.hpp"

namespace motas {

using grad::Tensor;
using grad::Var;

namespace {

std::vector<double> to_vector(const Var& v) {
  return {v.value().values().begin(), v.value().values().end()};
}

Var row_input(std::span<const double> x) {
  return Var(Tensor::row(std::vector<double>(x.begin(), x.end())));
}

}  // namespace

std::string moe_prefix(Modality modality) { return "moe." + std::string(to_string(modality)); }

Var expert_forward(const Var& x, const ExpertParams& expert) {
  return expert.fc2(grad::relu(expert.fc1(x)));
}

Var gate(const Var& x, const GatingParams& gating) {
  return grad::softmax_rows(gating.logits(x));
}

MoEModalityLayer::MoEModalityLayer(Modality modality, const MoEShape& shape, Rng& rng)
    : modality_(modality), shape_(shape) {
  if (shape.k == 0 || shape.d_in == 0 || shape.hidden == 0 || shape.d_out == 0)
    throw InvalidArgument("MoE layer sizes must be positive");
  const std::string prefix = moe_prefix(modality);
  for (std::size_t i = 0; i < shape.k; ++i) {
    const std::string name = prefix + ".expert" + std::to_string(i);
    ExpertParams e;
    e.fc1 = grad::Linear(shape.d_in, shape.hidden, name + ".fc1", rng);
    e.fc2 = grad::Linear(shape.hidden, shape.d_out, name + ".fc2", rng);
    experts_.push_back(std::move(e));
  }
  gate_.logits = grad::Linear(shape.d_in, shape.k, prefix + ".gate", rng);
}

MoEModalityLayer MoEModalityLayer::zeros(Modality modality, const MoEShape& shape) {
  if (shape.k == 0 || shape.d_in == 0 || shape.hidden == 0 || shape.d_out == 0)
    throw InvalidArgument("MoE layer sizes must be positive");
  MoEModalityLayer layer;
  layer.modality_ = modality;
  layer.shape_ = shape;
  const std::string prefix = moe_prefix(modality);
  for (std::size_t i = 0; i < shape.k; ++i) {
    const std::string name = prefix + ".expert" + std::to_string(i);
    layer.experts_.push_back({grad::Linear::zeros(shape.d_in, shape.hidden, name + ".fc1"),
                              grad::Linear::zeros(shape.hidden, shape.d_out, name + ".fc2")});
  }
  layer.gate_.logits = grad::Linear::zeros(shape.d_in, shape.k, prefix + ".gate");
  return layer;
}

Var MoEModalityLayer::forward(Modality input_modality, const Var& x) const {
  if (input_modality != modality_)
    throw InvalidArgument("MoE layer for " + std::string(to_string(modality_)) + " fed a " +
                          std::string(to_string(input_modality)) + " input");
  if (x.cols() != shape_.d_in)
    throw InvalidArgument(moe_prefix(modality_) + ": input width " + std::to_string(x.cols()) +
                          ", expected " + std::to_string(shape_.d_in));
  std::vector<Var> outputs;
  outputs.reserve(experts_.size());
  for (const auto& e : experts_) outputs.push_back(expert_forward(x, e));
  return grad::weighted_sum(gate(x, gate_), outputs);
}

void MoEModalityLayer::collect(std::vector<Var>& out) const {
  for (const auto& e : experts_) {
    e.fc1.collect(out);
    e.fc2.collect(out);
  }
  gate_.logits.collect(out);
}

std::vector<double> expert_forward(std::span<const double> x, const ExpertParams& expert) {
  return to_vector(expert_forward(row_input(x), expert));
}

std::vector<double> gate(std::span<const double> x, const GatingParams& gating) {
  return to_vector(gate(row_input(x), gating));
}

std::vector<double> moe_forward(Modality input_modality, std::span<const double> x,
                                const MoEModalityLayer& layer) {
  return to_vector(layer.forward(input_modality, row_input(x)));
}

const MoEModalityLayer& MoELayers::of(Modality m) const {
  switch (m) {
    case Modality::kMfcc: return mfcc;
    case Modality::kSpec: return spec;
    case Modality::kText: return text;
  }
  return text;
}

std::array<std::vector<double>, 3> moe_apply_all(const EmbeddingBundle& bundle,
                                                 const MoELayers& layers) {
  for (Modality m : kCompressedModalities) {
    const auto& layer = layers.of(m);
    if (layer.modality() != m)
      throw InvalidArgument("moe_apply_all: layer slot " + std::string(to_string(m)) +
                            " holds a " + std::string(to_string(layer.modality())) + " layer");
    if (bundle.of(m).size() != layer.shape().d_in)
      throw InvalidArgument("moe_apply_all: " + std::string(to_string(m)) + " input has dim " +
                            std::to_string(bundle.of(m).size()) + ", layer expects " +
                            std::to_string(layer.shape().d_in));
  }
  std::array<std::vector<double>, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    const Modality m = kCompressedModalities[i];
    out[i] = moe_forward(m, bundle.of(m), layers.of(m));
  }
  return out;
}

}  // namespace motas
