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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "motas/experiment_config.hpp"
#include "motas/metrics.hpp"
#include "motas/model.hpp"

namespace motas {

struct TrainedModel {
  MotasModel model;
  std::vector<double> loss_history;  // mean per-sample loss of each epoch
  double train_accuracy = 0.0;       // segment level, after the final epoch
  std::optional<std::size_t> best_epoch;  // set when a validation split was used
};

// One seed: init from `seed`, reshuffle every epoch, minibatch Adam on the
// summed binary cross-entropy of each batch.
TrainedModel train_model(const ExperimentConfig& config, std::span<const SampleFeatures> train,
                         std::uint64_t seed);

struct Evaluation {
  MetricsReport report;
  std::vector<std::string> subjects;  // first-appearance order
  std::vector<double> subject_probs;
  std::vector<int> subject_labels;
};

// Segment probabilities -> per-subject aggregate -> threshold -> metrics.
Evaluation evaluate_probabilities(std::span<const double> segment_probs,
                                  std::span<const SampleFeatures> samples,
                                  const ExperimentConfig& config);
Evaluation evaluate(const MotasModel& model, std::span<const SampleFeatures> test,
                    const ExperimentConfig& config);

double segment_accuracy(const MotasModel& model, std::span<const SampleFeatures> samples,
                        double threshold = 0.5);

struct SeedResult {
  std::uint64_t seed = 0;
  MetricsReport report;
  std::vector<double> loss_history;
  double train_accuracy = 0.0;
  std::optional<std::size_t> best_epoch;
};

struct RunResult {
  nlohmann::json config;
  std::vector<SeedResult> seeds;
  AveragedMetrics averaged;

  nlohmann::json to_json() const;
  static RunResult from_json(const nlohmann::json& j);
};

nlohmann::json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);

// Trains and evaluates once per configured seed. `on_model` sees each
// trained model (e.g. to save the first one).
RunResult run_experiment(const ExperimentConfig& config, std::span<const SampleFeatures> train,
                         std::span<const SampleFeatures> test,
                         const std::function<void(std::uint64_t, const MotasModel&)>& on_model = {});

}  // namespace motas
