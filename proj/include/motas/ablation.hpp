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

// The (MoE on/off) x (augmentation factor) grid and the factor curve.
//
// Grid file:
//   {"test_manifest": "test.jsonl", "caches": "caches",
//    "cells": [{"id": 1, "factor": 1, "moe": false, "train_manifest": "train_x1.jsonl"}, ...]}
// Paths are relative to the grid file.

#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "motas/experiment_config.hpp"
#include "motas/trainer.hpp"

namespace motas {

struct GridCell {
  int id = 0;
  double factor = 1.0;
  bool moe_enabled = true;
  std::string train_manifest;
};

struct Grid {
  std::string test_manifest;
  std::string caches;
  std::vector<GridCell> cells;
  std::filesystem::path base_dir;
};

// IDs 1-7: (1, off) (1, on) (2, off) (2, on) (1.5, on) (2.5, on) (3, on).
std::vector<GridCell> table3_cells();

Grid grid_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Grid load_grid(const std::filesystem::path& path);
nlohmann::json grid_to_json(const Grid& grid);

struct CellResult {
  GridCell cell;
  RunResult result;
};

// Cells run in ascending id order, each averaged over the config's seeds.
std::vector<CellResult> ablate(const ExperimentConfig& base, const Grid& grid,
                               const std::function<void(const CellResult&)>& on_cell = {});

// id,factor,moe,accuracy_mean,accuracy_sd,f1_ad_mean,f1_cn_mean
std::string ablation_csv(std::span<const CellResult> cells);

struct CurvePoint {
  double factor = 1.0;
  double accuracy_mean = 0.0;
  double accuracy_sd = 0.0;
};

// Header "factor,accuracy_mean,accuracy_sd", one row per factor, ascending.
std::string emit_curve(std::span<const CurvePoint> points);
std::vector<CurvePoint> parse_curve(const std::string& csv);

// MoE-enabled runs keyed by their augmentation factor.
std::vector<CurvePoint> curve_from_results(std::span<const RunResult> results);
// Every *.json file in `dir`, in file-name order.
std::vector<RunResult> load_results(const std::filesystem::path& dir);

}  // namespace motas
