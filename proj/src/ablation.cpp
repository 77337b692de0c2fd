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

#include "motas/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "motas/dataset.hpp"
#include "motas/error.hpp"

namespace motas {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<GridCell> table3_cells() {
  return {{1, 1.0, false, ""}, {2, 1.0, true, ""}, {3, 2.0, false, ""}, {4, 2.0, true, ""},
          {5, 1.5, true, ""},  {6, 2.5, true, ""}, {7, 3.0, true, ""}};
}

Grid grid_from_json(const json& j, const fs::path& base_dir) {
  Grid g;
  g.base_dir = base_dir;
  try {
    g.test_manifest = j.at("test_manifest").get<std::string>();
    g.caches = j.value("caches", std::string("caches"));
    std::set<int> ids;
    for (const auto& c : j.at("cells")) {
      GridCell cell;
      cell.id = c.at("id").get<int>();
      cell.factor = c.at("factor").get<double>();
      cell.moe_enabled = c.at("moe").get<bool>();
      cell.train_manifest = c.value("train_manifest", std::string());
      if (!(cell.factor >= 1.0))
        throw DataError("grid cell " + std::to_string(cell.id) + ": factor must be >= 1");
      if (!ids.insert(cell.id).second) throw DataError("grid: duplicate cell id " + std::to_string(cell.id));
      g.cells.push_back(std::move(cell));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("grid: ") + e.what());
  }
  if (g.cells.empty()) throw DataError("grid: no cells");
  return g;
}

Grid load_grid(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return grid_from_json(j, path.parent_path());
}

json grid_to_json(const Grid& grid) {
  json cells = json::array();
  for (const auto& c : grid.cells)
    cells.push_back({{"id", c.id}, {"factor", c.factor}, {"moe", c.moe_enabled},
                     {"train_manifest", c.train_manifest}});
  return {{"test_manifest", grid.test_manifest}, {"caches", grid.caches}, {"cells", cells}};
}

std::vector<CellResult> ablate(const ExperimentConfig& base, const Grid& grid,
                               const std::function<void(const CellResult&)>& on_cell) {
  if (grid.cells.empty()) throw InvalidArgument("ablate: empty grid");
  const auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || grid.base_dir.empty() ? path : grid.base_dir / path;
  };
  std::vector<GridCell> cells = grid.cells;
  std::stable_sort(cells.begin(), cells.end(),
                   [](const GridCell& a, const GridCell& b) { return a.id < b.id; });
  for (const auto& cell : cells) {
    if (cell.train_manifest.empty() || !fs::exists(resolve(cell.train_manifest)))
      throw DataError("missing augmented manifest for factor " + factor_tag(cell.factor) +
                      " (cell " + std::to_string(cell.id) + ")");
  }

  CacheSet caches(resolve(grid.caches));
  const Manifest test_manifest = parse_manifest(resolve(grid.test_manifest));
  const auto test_records = select_split(test_manifest, Split::kTest);
  const auto test = resolve_features(test_records, test_manifest.base_dir, caches, base.model);

  std::vector<CellResult> out;
  for (const auto& cell : cells) {
    ExperimentConfig config = base;
    config.model.moe_enabled = cell.moe_enabled;
    config.augmentation_factor = cell.factor;
    const Manifest train_manifest = parse_manifest(resolve(cell.train_manifest));
    const auto train_records = select_split(train_manifest, Split::kTrain);
    const auto train = resolve_features(train_records, train_manifest.base_dir, caches, config.model);
    CellResult r{cell, run_experiment(config, train, test)};
    if (on_cell) on_cell(r);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string ablation_csv(std::span<const CellResult> cells) {
  std::string out = "id,factor,moe,accuracy_mean,accuracy_sd,f1_ad_mean,f1_cn_mean\n";
  for (const auto& c : cells) {
    const auto& a = c.result.averaged;
    out += std::to_string(c.cell.id) + "," + factor_tag(c.cell.factor) + "," +
           (c.cell.moe_enabled ? "1" : "0") + "," + num(a.mean.accuracy) + "," + num(a.sd.accuracy) +
           "," + num(a.mean.f1_ad) + "," + num(a.mean.f1_cn) + "\n";
  }
  return out;
}

std::string emit_curve(std::span<const CurvePoint> points) {
  std::vector<CurvePoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const CurvePoint& a, const CurvePoint& b) { return a.factor < b.factor; });
  std::string out = "factor,accuracy_mean,accuracy_sd\n";
  for (const auto& p : sorted)
    out += factor_tag(p.factor) + "," + num(p.accuracy_mean) + "," + num(p.accuracy_sd) + "\n";
  return out;
}

std::vector<CurvePoint> parse_curve(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "factor,accuracy_mean,accuracy_sd")
    throw DataError("curve CSV: unexpected header");
  std::vector<CurvePoint> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    CurvePoint p;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf%c", &p.factor, &p.accuracy_mean, &p.accuracy_sd, &tail) != 3)
      throw DataError("curve CSV line " + std::to_string(line_no) + ": expected three numbers");
    out.push_back(p);
  }
  return out;
}

std::vector<CurvePoint> curve_from_results(std::span<const RunResult> results) {
  std::vector<CurvePoint> out;
  std::set<double> seen;
  for (const auto& r : results) {
    if (!r.config.value("moe_enabled", true)) continue;
    const double factor = r.config.value("augmentation_factor", 1.0);
    if (!seen.insert(factor).second)
      throw DataError("two MoE-enabled results for factor " + factor_tag(factor));
    out.push_back({factor, r.averaged.mean.accuracy, r.averaged.sd.accuracy});
  }
  if (out.empty()) throw DataError("no MoE-enabled results to plot");
  std::sort(out.begin(), out.end(),
            [](const CurvePoint& a, const CurvePoint& b) { return a.factor < b.factor; });
  return out;
}

std::vector<RunResult> load_results(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RunResult> out;
  for (const auto& f : files) {
    try {
      out.push_back(RunResult::from_json(json::parse(read_text_file(f))));
    } catch (const json::parse_error& e) {
      throw DataError(f.string() + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(f.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace motas
