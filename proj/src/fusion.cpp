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

#include "motas/fusion.hpp"

#include "motas/error.hpp"

namespace motas {

using grad::Tensor;
using grad::Var;

MlpParams::MlpParams(const MlpShape& shape, Rng& rng)
    : fc1(shape.in, shape.hidden1, "mlp.fc1", rng),
      fc2(shape.hidden1, shape.hidden2, "mlp.fc2", rng),
      fc3(shape.hidden2, 1, "mlp.fc3", rng),
      dropout(shape.dropout) {
  if (!(shape.dropout >= 0.0 && shape.dropout < 1.0))
    throw InvalidArgument("MLP dropout must be in [0, 1)");
}

MlpParams MlpParams::zeros(const MlpShape& shape) {
  MlpParams p;
  p.fc1 = grad::Linear::zeros(shape.in, shape.hidden1, "mlp.fc1");
  p.fc2 = grad::Linear::zeros(shape.hidden1, shape.hidden2, "mlp.fc2");
  p.fc3 = grad::Linear::zeros(shape.hidden2, 1, "mlp.fc3");
  p.dropout = shape.dropout;
  return p;
}

void MlpParams::collect(std::vector<Var>& out) const {
  fc1.collect(out);
  fc2.collect(out);
  fc3.collect(out);
}

std::vector<double> fuse(std::span<const double> m, std::span<const double> s,
                         std::span<const double> t, std::span<const double> w, std::size_t d_e,
                         std::size_t d_w) {
  if (m.size() != d_e || s.size() != d_e || t.size() != d_e || w.size() != d_w)
    throw InvalidArgument("fuse: got widths (" + std::to_string(m.size()) + ", " +
                          std::to_string(s.size()) + ", " + std::to_string(t.size()) + ", " +
                          std::to_string(w.size()) + "), expected (" + std::to_string(d_e) +
                          " x3, " + std::to_string(d_w) + ")");
  std::vector<double> out;
  out.reserve(3 * d_e + d_w);
  for (auto part : {m, s, t, w}) out.insert(out.end(), part.begin(), part.end());
  return out;
}

Var fuse(const Var& m, const Var& s, const Var& t, const Var& w) {
  if (m.cols() != s.cols() || m.cols() != t.cols())
    throw InvalidArgument("fuse: compressed modalities disagree on width");
  const Var parts[4] = {m, s, t, w};
  return grad::concat_cols(parts);
}

Var mlp_forward(const Var& x, const MlpParams& params, bool training, Rng& rng) {
  if (x.cols() != params.in_dim())
    throw InvalidArgument("mlp_forward: input width " + std::to_string(x.cols()) + ", expected " +
                          std::to_string(params.in_dim()));
  Var h1 = grad::relu(params.fc1(x));
  Var h2 = grad::relu(params.fc2(h1));
  Var dropped = grad::dropout(h2, params.dropout, training, rng);
  return grad::sigmoid(params.fc3(dropped));
}

double mlp_forward(std::span<const double> x, const MlpParams& params, bool training, Rng& rng) {
  Var in(Tensor::row(std::vector<double>(x.begin(), x.end())));
  return mlp_forward(in, params, training, rng).item();
}

}  // namespace motas
