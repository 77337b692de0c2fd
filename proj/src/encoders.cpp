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

#include "motas/encoders.hpp"

#include <algorithm>
#include <cmath>

namespace motas {

using grad::Tensor;
using grad::Var;

const std::vector<double>& EmbeddingBundle::of(Modality m) const {
  switch (m) {
    case Modality::kMfcc: return x_m;
    case Modality::kSpec: return x_s;
    case Modality::kText: return x_t;
  }
  return x_t;
}

std::vector<double>& EmbeddingBundle::of(Modality m) {
  return const_cast<std::vector<double>&>(std::as_const(*this).of(m));
}

void validate(const EmbeddingBundle& bundle, const EmbeddingDims& dims) {
  const auto check = [&](const std::vector<double>& v, std::size_t dim, const char* name) {
    if (v.size() != dim)
      throw InvalidArgument("bundle '" + bundle.sample_id + "': " + name + " has dim " +
                            std::to_string(v.size()) + ", expected " + std::to_string(dim));
    if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }))
      throw InvalidArgument("bundle '" + bundle.sample_id + "': " + name + " is not finite");
  };
  check(bundle.x_w, dims.d_w, "x_w");
  check(bundle.x_m, dims.d_m, "x_m");
  check(bundle.x_s, dims.d_s, "x_s");
  check(bundle.x_t, dims.d_t, "x_t");
}

namespace {

const char* direction_name(std::size_t d) { return d == 0 ? "fwd" : "bwd"; }

LstmParams make_cell(std::size_t in, std::size_t hidden, const std::string& name, Rng* rng) {
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(in));
  const double h_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  Tensor w_ih(4 * hidden, in), w_hh(4 * hidden, hidden), bias(1, 4 * hidden);
  if (rng) {
    w_ih = grad::uniform_tensor(4 * hidden, in, in_bound, *rng);
    w_hh = grad::uniform_tensor(4 * hidden, hidden, h_bound, *rng);
    bias = grad::uniform_tensor(1, 4 * hidden, h_bound, *rng);
    for (std::size_t j = hidden; j < 2 * hidden; ++j) bias[j] = 1.0;
  }
  return {Var::parameter(std::move(w_ih), name + ".w_ih"),
          Var::parameter(std::move(w_hh), name + ".w_hh"),
          Var::parameter(std::move(bias), name + ".bias")};
}

}  // namespace

MfccEncoder::MfccEncoder(const Shape& shape, Rng& rng, const std::string& prefix) : shape_(shape) {
  if (shape.layers == 0 || shape.hidden == 0 || shape.n_mfcc == 0 || shape.out_dim == 0)
    throw InvalidArgument("MfccEncoder: all sizes must be positive");
  for (std::size_t l = 0; l < shape.layers; ++l) {
    const std::size_t in = l == 0 ? shape.n_mfcc : 2 * shape.hidden;
    for (std::size_t d = 0; d < 2; ++d)
      cells_.push_back(make_cell(in, shape.hidden,
                                 prefix + ".l" + std::to_string(l) + "." + direction_name(d), &rng));
  }
  projection_ = grad::Linear(2 * shape.hidden, shape.out_dim, prefix + ".proj", rng);
}

MfccEncoder MfccEncoder::zeros(const Shape& shape, const std::string& prefix) {
  MfccEncoder enc;
  enc.shape_ = shape;
  for (std::size_t l = 0; l < shape.layers; ++l) {
    const std::size_t in = l == 0 ? shape.n_mfcc : 2 * shape.hidden;
    for (std::size_t d = 0; d < 2; ++d)
      enc.cells_.push_back(make_cell(
          in, shape.hidden, prefix + ".l" + std::to_string(l) + "." + direction_name(d), nullptr));
  }
  enc.projection_ = grad::Linear::zeros(2 * shape.hidden, shape.out_dim, prefix + ".proj");
  return enc;
}

Var MfccEncoder::encode_batch(std::span<const dsp::MfccSequence* const> seqs) const {
  if (seqs.empty()) throw InvalidArgument("encode_mfcc: empty batch");
  const std::size_t batch = seqs.size();
  const std::size_t frames = seqs[0]->rows;
  if (frames == 0) throw InvalidArgument("encode_mfcc: empty sequence");
  for (const auto* s : seqs) {
    if (s->rows != frames) throw InvalidArgument("encode_mfcc: batch mixes sequence lengths");
    if (s->cols != shape_.n_mfcc)
      throw InvalidArgument("encode_mfcc: sequence has " + std::to_string(s->cols) +
                            " coefficients, encoder expects " + std::to_string(shape_.n_mfcc));
  }

  std::vector<Var> inputs;
  inputs.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    Tensor step(batch, shape_.n_mfcc);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto row = seqs[b]->row(t);
      std::copy(row.begin(), row.end(), step.values().begin() + static_cast<std::ptrdiff_t>(b * shape_.n_mfcc));
    }
    inputs.emplace_back(std::move(step));
  }

  const std::size_t hidden = shape_.hidden;
  const auto run = [&](const std::vector<Var>& xs, const LstmParams& p, bool reverse) {
    std::vector<Var> hs(frames);
    Var h(Tensor(batch, hidden)), c(Tensor(batch, hidden));
    for (std::size_t s = 0; s < frames; ++s) {
      const std::size_t t = reverse ? frames - 1 - s : s;
      Var out = grad::lstm_cell(xs[t], h, c, p.w_ih, p.w_hh, p.bias);
      h = grad::slice_cols(out, 0, hidden);
      c = grad::slice_cols(out, hidden, 2 * hidden);
      hs[t] = h;
    }
    return hs;
  };

  std::vector<Var> fwd, bwd;
  for (std::size_t l = 0; l < shape_.layers; ++l) {
    fwd = run(inputs, cells_[2 * l], false);
    bwd = run(inputs, cells_[2 * l + 1], true);
    if (l + 1 < shape_.layers) {
      for (std::size_t t = 0; t < frames; ++t) {
        const Var parts[2] = {fwd[t], bwd[t]};
        inputs[t] = grad::concat_cols(parts);
      }
    }
  }
  const Var finals[2] = {fwd[frames - 1], bwd[0]};
  return projection_(grad::concat_cols(finals));
}

Var MfccEncoder::encode(std::span<const dsp::MfccSequence* const> seqs) const {
  if (seqs.empty()) throw InvalidArgument("encode_mfcc: empty batch");
  const bool uniform = std::all_of(seqs.begin(), seqs.end(),
                                   [&](const auto* s) { return s->rows == seqs[0]->rows; });
  if (uniform) return encode_batch(seqs);
  std::vector<Var> rows;
  for (const auto* s : seqs) rows.push_back(encode_batch(std::span(&s, 1)));
  return grad::concat_rows(rows);
}

void MfccEncoder::collect(std::vector<Var>& out) const {
  for (const auto& cell : cells_) {
    out.push_back(cell.w_ih);
    out.push_back(cell.w_hh);
    out.push_back(cell.bias);
  }
  projection_.collect(out);
}

std::vector<double> encode_mfcc(const dsp::MfccSequence& seq, const MfccEncoder& encoder) {
  const dsp::MfccSequence* ptr = &seq;
  Var out = encoder.encode_batch(std::span(&ptr, 1));
  return {out.value().values().begin(), out.value().values().end()};
}

std::vector<double> patch_pool(const dsp::SpectrogramImage& image) {
  if (image.rows != dsp::kImageSize || image.cols != dsp::kImageSize)
    throw InvalidArgument("patch_pool: image must be 224x224, got " + std::to_string(image.rows) +
                          "x" + std::to_string(image.cols));
  constexpr std::size_t grid = dsp::kImageSize / kPatchSize;
  std::vector<double> pooled(kPooledDim, 0.0);
  for (std::size_t r = 0; r < dsp::kImageSize; ++r)
    for (std::size_t c = 0; c < dsp::kImageSize; ++c)
      pooled[(r / kPatchSize) * grid + c / kPatchSize] += image(r, c);
  for (auto& v : pooled) v /= static_cast<double>(kPatchSize * kPatchSize);
  return pooled;
}

SpecFallbackEncoder::SpecFallbackEncoder(std::size_t out_dim, Rng& rng, const std::string& prefix)
    : projection_(kPooledDim, out_dim, prefix + ".proj", rng) {}

Var SpecFallbackEncoder::encode_pooled(const Tensor& pooled) const {
  if (pooled.cols() != kPooledDim)
    throw InvalidArgument("spectrogram encoder expects " + std::to_string(kPooledDim) +
                          " pooled features, got " + std::to_string(pooled.cols()));
  return projection_(Var(pooled));
}

std::vector<double> encode_spectrogram_fallback(const dsp::SpectrogramImage& image,
                                                const SpecFallbackEncoder& encoder) {
  Var out = encoder.encode_pooled(Tensor::row(patch_pool(image)));
  return {out.value().values().begin(), out.value().values().end()};
}

std::vector<double> load_external_embedding(const FeatureCache& cache, const std::string& sample_id,
                                            std::size_t expected_dim) {
  const auto* row = cache.find(sample_id);
  if (!row) throw DataError("missing embedding for '" + sample_id + "'");
  if (cache.dim() != expected_dim)
    throw DataError("embedding dimension mismatch for '" + sample_id + "': cache has " +
                    std::to_string(cache.dim()) + ", expected " + std::to_string(expected_dim));
  return {row->begin(), row->end()};
}

SynthSpec SynthSpec::uniform(double separation, EmbeddingDims dims) {
  SynthSpec spec;
  spec.dims = dims;
  spec.separation.fill(separation);
  return spec;
}

std::vector<double> synth_direction(const SynthSpec& spec, std::size_t slot) {
  const std::size_t dims[4] = {spec.dims.d_w, spec.dims.d_m, spec.dims.d_s, spec.dims.d_t};
  Rng rng(mix_seed(spec.direction_seed, slot));
  std::vector<double> u(dims[slot]);
  double norm = 0.0;
  for (auto& v : u) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : u) v /= norm;
  return u;
}

EmbeddingBundle synth_embeddings(std::uint64_t seed, Label label, const SynthSpec& spec) {
  for (double s : spec.separation)
    if (!(s >= 0.0)) throw InvalidArgument("synth_embeddings: separation must be >= 0");
  Rng rng(seed);
  const double sign = label == Label::kAD ? 1.0 : -1.0;
  EmbeddingBundle bundle;
  bundle.label = label;
  bundle.source = Source::kReal;
  std::vector<double>* slots[4] = {&bundle.x_w, &bundle.x_m, &bundle.x_s, &bundle.x_t};
  for (std::size_t slot = 0; slot < 4; ++slot) {
    const auto u = synth_direction(spec, slot);
    const double shift = sign * spec.separation[slot] / 2.0;
    auto& x = *slots[slot];
    x.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) x[i] = rng.normal() + shift * u[i];
  }
  return bundle;
}

}  // namespace motas
