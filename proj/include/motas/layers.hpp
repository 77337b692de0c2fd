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

#include <string>
#include <vector>

#include "motas/rng.hpp"
#include "motas/tensor.hpp"

namespace motas::grad {

// Uniform(-bound, bound) fill.
Tensor uniform_tensor(std::size_t rows, std::size_t cols, double bound, Rng& rng);

// Fully connected layer, weight stored out x in.
struct Linear {
  Var weight;
  Var bias;

  Linear() = default;
  // Weights and bias uniform in +-1/sqrt(in).
  Linear(std::size_t in, std::size_t out, const std::string& name, Rng& rng);
  static Linear zeros(std::size_t in, std::size_t out, const std::string& name);

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
  Var operator()(const Var& x) const { return linear(x, weight, bias); }
  void collect(std::vector<Var>& out) const {
    out.push_back(weight);
    out.push_back(bias);
  }
};

}  // namespace motas::grad
