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

#pragma once

#include <span>
#include <vector>

#include "motas/layers.hpp"

namespace motas {

struct MlpShape {
  std::size_t in = 3 * 128 + 768;
  std::size_t hidden1 = 256;
  std::size_t hidden2 = 64;
  double dropout = 0.3;
};

// FC1 -> ReLU -> FC2 -> ReLU -> Dropout -> FC3 -> sigmoid.
//
// Dropout sits after FC2's ReLU. With an inverted-dropout mask (entries 0
// or 1/(1-p), never negative) the mask commutes with ReLU, so this is the
// same function as applying dropout to FC2's output before the ReLU.
struct MlpParams {
  grad::Linear fc1;
  grad::Linear fc2;
  grad::Linear fc3;
  double dropout = 0.3;

  MlpParams() = default;
  MlpParams(const MlpShape& shape, Rng& rng);
  static MlpParams zeros(const MlpShape& shape);

  std::size_t in_dim() const { return fc1.in_dim(); }
  void collect(std::vector<grad::Var>& out) const;
};

// [m | s | t | w], widths (d_e, d_e, d_e, d_w).
std::vector<double> fuse(std::span<const double> m, std::span<const double> s,
                         std::span<const double> t, std::span<const double> w, std::size_t d_e,
                         std::size_t d_w);
grad::Var fuse(const grad::Var& m, const grad::Var& s, const grad::Var& t, const grad::Var& w);

// x: B x in -> B x 1 probabilities.
grad::Var mlp_forward(const grad::Var& x, const MlpParams& params, bool training, Rng& rng);
double mlp_forward(std::span<const double> x, const MlpParams& params, bool training, Rng& rng);

// 1 (AD) iff prob >= threshold; ties go to the positive class.
inline int predict(double prob, double threshold = 0.5) { return prob >= threshold ? 1 : 0; }

}  // namespace motas
