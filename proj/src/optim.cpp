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

#include "motas/optim.hpp"

#include <cmath>
#include <numeric>

#include "motas/error.hpp"
#include "motas/rng.hpp"

namespace motas::grad {

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t step, const AdamConfig& config) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
    throw InvalidArgument("adam_update: buffer sizes disagree");
  if (step == 0) throw InvalidArgument("adam_update: step count starts at 1");
  const double m_corr = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double v_corr = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grads[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / m_corr;
    const double v_hat = v[i] / v_corr;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

void adam_step(std::span<Var> params, AdamState& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value().size(), 0.0);
      state.v.emplace_back(p.value().size(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw InvalidArgument("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                          " parameters, got " + std::to_string(params.size()));
  ++state.t;
  std::vector<double> zeros;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    if (state.m[k].size() != p.value().size())
      throw InvalidArgument("adam_step: shape mismatch for " + p.name());
    std::span<const double> g = p.grad();
    if (g.empty()) {
      zeros.assign(p.value().size(), 0.0);
      g = zeros;
    }
    adam_update(p.mutable_value().values(), g, state.m[k], state.v[k], state.t, state.config);
  }
}

void zero_grads(std::span<Var> params) {
  for (auto& p : params) p.zero_grad();
}

GradCheckResult grad_check(const std::function<Var()>& loss, std::span<Var> params,
                           const GradCheckOptions& options) {
  zero_grads(params);
  Var root = loss();
  root.backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    if (p.has_grad())
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    else
      analytic.emplace_back(p.value().size(), 0.0);
  }
  root = Var();
  zero_grads(params);

  auto probe = [&](const char* where) {
    const double f = loss().item();
    if (!std::isfinite(f)) throw InvalidArgument(std::string("grad_check: non-finite loss at ") + where);
    return f;
  };

  GradCheckResult result;
  result.max_rel_error = 0.0;
  Rng rng(options.seed);
  const double h = options.step;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].mutable_value().values();
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.max_coords_per_param);
    }
    for (std::size_t i : coords) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = probe("+h");
      values[i] = saved - h;
      const double down = probe("-h");
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[k][i], numeric);
      ++result.coords_checked;
      if (err > result.max_rel_error || result.worst_param.empty()) {
        if (err >= result.max_rel_error) {
          result.max_rel_error = err;
          result.worst_param = params[k].name();
          result.worst_index = i;
          result.analytic = analytic[k][i];
          result.numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace motas::grad
