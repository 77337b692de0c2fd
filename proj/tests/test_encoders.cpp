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


#include <cmath>

#include "doctest.h"
#include "motas/encoders.hpp"
#include "motas/error.hpp"
#include "motas/optim.hpp"
#include "test_util.hpp"

using namespace motas;
using grad::Var;

namespace {

dsp::MfccSequence random_sequence(std::size_t frames, std::size_t n, Rng& rng) {
  dsp::MfccSequence s(frames, n);
  for (auto& v : s.data) v = rng.uniform(-1.0, 1.0);
  return s;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar LSTM with one unit; p = (w_i, w_f, w_g, w_o, u_i, u_f, u_g, u_o, b_i, b_f, b_g, b_o).
double scalar_lstm(const std::vector<double>& xs, const double* p, bool reverse) {
  double h = 0.0, c = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const double x = xs[reverse ? xs.size() - 1 - s : s];
    const double i = sig(p[0] * x + p[4] * h + p[8]);
    const double f = sig(p[1] * x + p[5] * h + p[9]);
    const double g = std::tanh(p[2] * x + p[6] * h + p[10]);
    const double o = sig(p[3] * x + p[7] * h + p[11]);
    c = f * c + i * g;
    h = o * std::tanh(c);
  }
  return h;
}

}  // namespace

TEST_CASE("bidirectional encoder matches a scalar recurrence") {
  MfccEncoder::Shape shape{1, 1, 1, 2};
  MfccEncoder enc = MfccEncoder::zeros(shape);
  Rng rng(5);
  double params[2][12];
  for (std::size_t d = 0; d < 2; ++d) {
    auto& cell = enc.cells()[d];
    for (std::size_t j = 0; j < 12; ++j) params[d][j] = rng.uniform(-1.5, 1.5);
    for (std::size_t gate = 0; gate < 4; ++gate) {
      cell.w_ih.mutable_value()[gate] = params[d][gate];
      cell.w_hh.mutable_value()[gate] = params[d][4 + gate];
      cell.bias.mutable_value()[gate] = params[d][8 + gate];
    }
  }
  enc.projection().weight.mutable_value()(0, 0) = 1.0;
  enc.projection().weight.mutable_value()(1, 1) = 1.0;

  const dsp::MfccSequence seq = random_sequence(7, 1, rng);
  const auto out = encode_mfcc(seq, enc);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == doctest::Approx(scalar_lstm(seq.data, params[0], false)).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(scalar_lstm(seq.data, params[1], true)).epsilon(1e-14));
}

TEST_CASE("encoder output shapes and forget-gate bias") {
  Rng rng(1);
  MfccEncoder::Shape shape{13, 8, 2, 5};
  MfccEncoder enc(shape, rng);
  CHECK(enc.cells().size() == 4);
  CHECK(enc.cells()[2].w_ih.cols() == 16);
  for (std::size_t j = 8; j < 16; ++j) CHECK(enc.cells()[0].bias.value()[j] == 1.0);
  const auto a = random_sequence(6, 13, rng);
  const auto b = random_sequence(6, 13, rng);
  const dsp::MfccSequence* batch[] = {&a, &b};
  const Var out = enc.encode_batch(batch);
  CHECK(out.rows() == 2);
  CHECK(out.cols() == 5);
  const auto single = encode_mfcc(b, enc);
  CHECK(testing::max_abs_diff(out.value().row_span(1), single) < 1e-14);

  std::vector<Var> params;
  enc.collect(params);
  CHECK(params.size() == 4 * 3 + 2);
}

TEST_CASE("ragged batches are encoded one sequence at a time") {
  Rng rng(2);
  MfccEncoder enc(MfccEncoder::Shape{3, 4, 1, 2}, rng);
  const auto a = random_sequence(3, 3, rng);
  const auto b = random_sequence(5, 3, rng);
  const dsp::MfccSequence* batch[] = {&a, &b};
  CHECK_THROWS_AS(enc.encode_batch(batch), InvalidArgument);
  const Var out = enc.encode(batch);
  CHECK(testing::max_abs_diff(out.value().row_span(0), encode_mfcc(a, enc)) == 0.0);
  CHECK(testing::max_abs_diff(out.value().row_span(1), encode_mfcc(b, enc)) == 0.0);

  const auto wrong = random_sequence(3, 4, rng);
  CHECK_THROWS_AS(encode_mfcc(wrong, enc), InvalidArgument);
}

TEST_CASE("two-layer encoder gradients match finite differences") {
  Rng rng(8);
  MfccEncoder enc(MfccEncoder::Shape{3, 3, 2, 2}, rng);
  const auto a = random_sequence(4, 3, rng);
  const auto b = random_sequence(4, 3, rng);
  const dsp::MfccSequence* batch[] = {&a, &b};
  std::vector<Var> params;
  enc.collect(params);
  const auto result = grad::grad_check([&] { return grad::sum(grad::tanh(enc.encode_batch(batch))); }, params);
  INFO(result.worst_param, " ", result.worst_index, " ", result.analytic, " ", result.numeric);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("patch pooling averages 16x16 blocks") {
  dsp::SpectrogramImage img(dsp::kImageSize, dsp::kImageSize);
  for (std::size_t r = 0; r < dsp::kImageSize; ++r)
    for (std::size_t c = 0; c < dsp::kImageSize; ++c) img(r, c) = static_cast<double>((r / 16) * 14 + c / 16);
  const auto pooled = patch_pool(img);
  REQUIRE(pooled.size() == kPooledDim);
  CHECK(kPooledDim == 196);
  for (std::size_t i = 0; i < kPooledDim; ++i) CHECK(pooled[i] == static_cast<double>(i));
  CHECK_THROWS_AS(patch_pool(dsp::SpectrogramImage(10, 10)), InvalidArgument);
}

TEST_CASE("external embeddings are checked for presence and width") {
  FeatureCache cache(3);
  cache.add("a", {1.0f, 2.0f, 3.0f});
  CHECK(load_external_embedding(cache, "a", 3) == std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(load_external_embedding(cache, "b", 3), DataError);
  CHECK_THROWS_AS(load_external_embedding(cache, "a", 4), DataError);
}

TEST_CASE("synthetic embeddings separate along unit directions") {
  const SynthSpec spec = SynthSpec::uniform(6.0, EmbeddingDims{16, 8, 12, 10});
  for (std::size_t slot = 0; slot < 4; ++slot) {
    const auto u = synth_direction(spec, slot);
    double norm = 0.0;
    for (double v : u) norm += v * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Projection onto u averages to +-3 over many draws.
  const auto u = synth_direction(spec, 1);
  double ad = 0.0, cn = 0.0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const auto a = synth_embeddings(mix_seed(1, i), Label::kAD, spec);
    const auto c = synth_embeddings(mix_seed(2, i), Label::kCN, spec);
    for (std::size_t j = 0; j < u.size(); ++j) {
      ad += a.x_m[j] * u[j];
      cn += c.x_m[j] * u[j];
    }
  }
  CHECK(ad / n == doctest::Approx(3.0).epsilon(0.05));
  CHECK(cn / n == doctest::Approx(-3.0).epsilon(0.05));

  const auto x = synth_embeddings(42, Label::kAD, spec);
  const auto y = synth_embeddings(42, Label::kAD, spec);
  CHECK(x.x_t == y.x_t);
  CHECK_NOTHROW(validate(x, spec.dims));
  EmbeddingBundle bad = x;
  bad.x_s.pop_back();
  CHECK_THROWS_AS(validate(bad, spec.dims), InvalidArgument);
}
