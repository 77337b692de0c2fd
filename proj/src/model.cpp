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

#include "motas/model.hpp"

#include <fstream>
#include <map>
#include "json.hpp"
#include <sstream>

namespace motas {

using grad::Tensor;
using grad::Var;
using nlohmann::json;

namespace {

// Independent init streams so that toggling one component leaves the
// initial values of the others unchanged.
enum Stream : std::uint64_t {
  kStreamMfccEncoder = 11,
  kStreamSpecEncoder = 12,
  kStreamCompressor = 20,
  kStreamMlp = 31,
};

Tensor gather(std::span<const SampleFeatures> samples, std::span<const std::size_t> indices,
              std::size_t width, const char* what,
              const std::vector<double>& (*pick)(const SampleFeatures&)) {
  Tensor out(indices.size(), width);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& s = samples[indices[b]];
    const auto& v = pick(s);
    if (v.size() != width)
      throw InvalidArgument("sample '" + s.bundle.sample_id + "': " + what + " has dim " +
                            std::to_string(v.size()) + ", expected " + std::to_string(width));
    std::copy(v.begin(), v.end(), out.values().begin() + static_cast<std::ptrdiff_t>(b * width));
  }
  return out;
}

}  // namespace

Compressor::Compressor(Modality modality, const ModelConfig& config, Rng& rng)
    : modality_(modality) {
  const std::size_t d_in = config.dims.of(modality);
  if (config.moe_enabled) {
    moe_.emplace(modality, MoEShape{d_in, config.expert_hidden, config.d_e, config.k}, rng);
  } else {
    projection_ = grad::Linear(d_in, config.d_e, "proj." + std::string(to_string(modality)), rng);
  }
}

Var Compressor::forward(const Var& x) const {
  if (moe_) return moe_->forward(modality_, x);
  return projection_(x);
}

void Compressor::collect(std::vector<Var>& out) const {
  if (moe_)
    moe_->collect(out);
  else
    projection_.collect(out);
}

MotasModel::MotasModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  if (config.d_e == 0 || config.dims.d_w == 0 || config.dims.d_m == 0 || config.dims.d_s == 0 ||
      config.dims.d_t == 0)
    throw InvalidArgument("model dimensions must be positive");
  if (config.mfcc_encoder) {
    Rng rng(mix_seed(seed, kStreamMfccEncoder));
    auto shape = config.mfcc_shape;
    shape.out_dim = config.dims.d_m;
    config_.mfcc_shape = shape;
    mfcc_encoder_.emplace(shape, rng);
  }
  if (config.spec_encoder) {
    Rng rng(mix_seed(seed, kStreamSpecEncoder));
    spec_encoder_.emplace(config.dims.d_s, rng);
  }
  Rng rng_m(mix_seed(seed, kStreamCompressor + 0));
  Rng rng_s(mix_seed(seed, kStreamCompressor + 1));
  Rng rng_t(mix_seed(seed, kStreamCompressor + 2));
  mfcc_ = Compressor(Modality::kMfcc, config, rng_m);
  spec_ = Compressor(Modality::kSpec, config, rng_s);
  text_ = Compressor(Modality::kText, config, rng_t);
  Rng rng_mlp(mix_seed(seed, kStreamMlp));
  mlp_ = MlpParams(MlpShape{config.fusion_dim(), config.mlp_hidden1, config.mlp_hidden2,
                            config.dropout},
                   rng_mlp);
}

const Compressor& MotasModel::compressor(Modality m) const {
  switch (m) {
    case Modality::kMfcc: return mfcc_;
    case Modality::kSpec: return spec_;
    case Modality::kText: return text_;
  }
  return text_;
}

Compressor& MotasModel::compressor(Modality m) {
  return const_cast<Compressor&>(std::as_const(*this).compressor(m));
}

Var MotasModel::fused(std::span<const SampleFeatures> samples,
                      std::span<const std::size_t> indices) const {
  if (indices.empty()) throw InvalidArgument("model forward: empty batch");
  const auto& d = config_.dims;
  Var x_w(gather(samples, indices, d.d_w, "x_w",
                 [](const SampleFeatures& s) -> const std::vector<double>& { return s.bundle.x_w; }));
  Var x_t(gather(samples, indices, d.d_t, "x_t",
                 [](const SampleFeatures& s) -> const std::vector<double>& { return s.bundle.x_t; }));

  Var x_m;
  if (mfcc_encoder_) {
    std::vector<const dsp::MfccSequence*> seqs;
    for (std::size_t i : indices) {
      if (!samples[i].mfcc_sequence)
        throw InvalidArgument("sample '" + samples[i].bundle.sample_id + "' has no MFCC sequence");
      seqs.push_back(&*samples[i].mfcc_sequence);
    }
    x_m = mfcc_encoder_->encode(seqs);
  } else {
    x_m = Var(gather(samples, indices, d.d_m, "x_m",
                     [](const SampleFeatures& s) -> const std::vector<double>& { return s.bundle.x_m; }));
  }

  Var x_s;
  if (spec_encoder_) {
    x_s = spec_encoder_->encode_pooled(
        gather(samples, indices, kPooledDim, "pooled spectrogram",
               [](const SampleFeatures& s) -> const std::vector<double>& { return s.spec_pooled; }));
  } else {
    x_s = Var(gather(samples, indices, d.d_s, "x_s",
                     [](const SampleFeatures& s) -> const std::vector<double>& { return s.bundle.x_s; }));
  }

  return fuse(mfcc_.forward(x_m), spec_.forward(x_s), text_.forward(x_t), x_w);
}

Var MotasModel::forward(std::span<const SampleFeatures> samples,
                        std::span<const std::size_t> indices, bool training, Rng& rng) const {
  return mlp_forward(fused(samples, indices), mlp_, training, rng);
}

std::vector<double> MotasModel::predict_proba(std::span<const SampleFeatures> samples) const {
  constexpr std::size_t kChunk = 64;
  std::vector<double> probs;
  probs.reserve(samples.size());
  Rng unused(0);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(samples.size(), start + kChunk); ++i) idx.push_back(i);
    Var p = forward(samples, idx, false, unused);
    probs.insert(probs.end(), p.value().values().begin(), p.value().values().end());
  }
  return probs;
}

std::vector<Var> MotasModel::parameters() const {
  std::vector<Var> out;
  if (mfcc_encoder_) mfcc_encoder_->collect(out);
  if (spec_encoder_) spec_encoder_->collect(out);
  mfcc_.collect(out);
  spec_.collect(out);
  text_.collect(out);
  mlp_.collect(out);
  return out;
}

Var loss_batch(const MotasModel& model, std::span<const SampleFeatures> samples,
               std::span<const std::size_t> indices, bool training, Rng& rng) {
  if (indices.empty()) throw InvalidArgument("loss_batch: empty batch");
  std::vector<double> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) labels.push_back(label_value(samples[i].bundle.label));
  return grad::bce_loss(model.forward(samples, indices, training, rng), labels);
}

std::string model_config_json(const ModelConfig& c) {
  json j = {
      {"d_w", c.dims.d_w},
      {"d_m", c.dims.d_m},
      {"d_s", c.dims.d_s},
      {"d_t", c.dims.d_t},
      {"d_e", c.d_e},
      {"k", c.k},
      {"expert_hidden", c.expert_hidden},
      {"moe_enabled", c.moe_enabled},
      {"mlp_hidden1", c.mlp_hidden1},
      {"mlp_hidden2", c.mlp_hidden2},
      {"dropout_p", c.dropout},
      {"mfcc_encoder", c.mfcc_encoder},
      {"spec_encoder", c.spec_encoder},
      {"lstm", {{"n_mfcc", c.mfcc_shape.n_mfcc}, {"hidden", c.mfcc_shape.hidden},
                {"layers", c.mfcc_shape.layers}}},
  };
  return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    c.dims.d_w = j.at("d_w");
    c.dims.d_m = j.at("d_m");
    c.dims.d_s = j.at("d_s");
    c.dims.d_t = j.at("d_t");
    c.d_e = j.at("d_e");
    c.k = j.at("k");
    c.expert_hidden = j.at("expert_hidden");
    c.moe_enabled = j.at("moe_enabled");
    c.mlp_hidden1 = j.at("mlp_hidden1");
    c.mlp_hidden2 = j.at("mlp_hidden2");
    c.dropout = j.at("dropout_p");
    c.mfcc_encoder = j.at("mfcc_encoder");
    c.spec_encoder = j.at("spec_encoder");
    c.mfcc_shape.n_mfcc = j.at("lstm").at("n_mfcc");
    c.mfcc_shape.hidden = j.at("lstm").at("hidden");
    c.mfcc_shape.layers = j.at("lstm").at("layers");
    c.mfcc_shape.out_dim = c.dims.d_m;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model config: ") + e.what());
  }
  return c;
}

void save_model(const std::filesystem::path& path, const MotasModel& model) {
  std::map<std::size_t, FeatureCache> by_size;
  for (const auto& p : model.parameters()) {
    const std::size_t n = p.value().size();
    auto it = by_size.try_emplace(n, FeatureCache(static_cast<std::uint32_t>(n))).first;
    std::vector<float> values(p.value().values().begin(), p.value().values().end());
    it->second.add(p.name(), std::move(values));
  }
  std::vector<FeatureCache> blocks;
  for (auto& [_, block] : by_size) blocks.push_back(std::move(block));
  write_cache_blocks(path, blocks);
  std::ofstream cfg(path.string() + ".json");
  if (!cfg) throw DataError("cannot write " + path.string() + ".json");
  cfg << model_config_json(model.config()) << "\n";
}

MotasModel load_model(const std::filesystem::path& path) {
  std::ifstream cfg(path.string() + ".json");
  if (!cfg) throw DataError("missing model config " + path.string() + ".json");
  std::stringstream text;
  text << cfg.rdbuf();
  MotasModel model(model_config_from_json(text.str()), 0);
  const auto blocks = read_cache_blocks(path);
  for (auto& p : model.parameters()) {
    const std::vector<float>* stored = nullptr;
    for (const auto& block : blocks)
      if ((stored = block.find(p.name()))) break;
    if (!stored) throw DataError(path.string() + ": checkpoint lacks parameter " + p.name());
    if (stored->size() != p.value().size())
      throw DataError(path.string() + ": parameter " + p.name() + " has " +
                      std::to_string(stored->size()) + " values, model expects " +
                      std::to_string(p.value().size()));
    auto dst = p.mutable_value().values();
    std::copy(stored->begin(), stored->end(), dst.begin());
  }
  return model;
}

}  // namespace motas
