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
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "motas/audio_dsp.hpp"
#include "motas/augmentation.hpp"
#include "motas/metrics.hpp"
#include "motas/model.hpp"

namespace motas {

struct ExperimentConfig {
  ModelConfig model;
  double augmentation_factor = 1.0;
  double lr = 0.0067;
  std::size_t batch_size = 32;
  std::size_t epochs = 60;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double threshold = 0.5;
  Aggregation aggregation = Aggregation::kMeanProb;
  // Fraction of real training subjects held out to pick the best epoch; 0 disables.
  double val_fraction = 0.0;
  std::uint64_t plan_seed = 0;  // pairing seed for the synth command

  dsp::FrameConfig frames;
  ExternalToolConfig tools;
  // run-tts / run-asr exit with status 3 when more than this fraction fails.
  double max_failure_fraction = 0.5;

  // Throws InvalidArgument on the first violated constraint.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

// MOTAS_SEED replaces the seed list with that single seed.
ExperimentConfig with_seed_override(ExperimentConfig config);

}  // namespace motas
