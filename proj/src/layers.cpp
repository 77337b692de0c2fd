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

#include "motas/layers.hpp"

#include <cmath>

namespace motas::grad {

Tensor uniform_tensor(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Linear::Linear(std::size_t in, std::size_t out, const std::string& name, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = Var::parameter(uniform_tensor(out, in, bound, rng), name + ".weight");
  bias = Var::parameter(uniform_tensor(1, out, bound, rng), name + ".bias");
}

Linear Linear::zeros(std::size_t in, std::size_t out, const std::string& name) {
  Linear l;
  l.weight = Var::parameter(Tensor(out, in), name + ".weight");
  l.bias = Var::parameter(Tensor(1, out), name + ".bias");
  return l;
}

}  // namespace motas::grad
