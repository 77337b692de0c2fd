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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "motas/tensor.hpp"

namespace motas::grad {

struct AdamConfig {
  double lr = 0.0067;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

// Bias-corrected Adam on raw buffers; `step` is the 1-based step count.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t step, const AdamConfig& config);

// One step over every parameter using the gradients stored on the Vars.
// A parameter that received no gradient is treated as having a zero one.
void adam_step(std::span<Var> params, AdamState& state);

void zero_grads(std::span<Var> params);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

struct GradCheckOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise a seeded sample per parameter.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

// Compares reverse-mode gradients of `loss` against central differences.
// `loss` must rebuild the graph from the current parameter values on every
// call and be deterministic (no dropout noise).
GradCheckResult grad_check(const std::function<Var()>& loss, std::span<Var> params,
                           const GradCheckOptions& options = {});

inline double relative_error(double a, double b) {
  const double denom = std::max(1e-8, std::abs(a) + std::abs(b));
  return std::abs(a - b) / denom;
}

}  // namespace motas::grad
