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

#include "motas/cli.hpp"

#include <cstdio>
#include <sstream>

#include "CLI11.hpp"
#include "motas/ablation.hpp"
#include "motas/augmentation.hpp"
#include "motas/dataset.hpp"
#include "motas/error.hpp"
#include "motas/experiment_config.hpp"
#include "motas/trainer.hpp"

namespace motas {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig config_or_default(const std::string& path) {
  ExperimentConfig c = path.empty() ? ExperimentConfig{} : load_config(path);
  return with_seed_override(c);
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

void check_budget(std::size_t failures, std::size_t total, double max_fraction, const char* stage) {
  if (total == 0) return;
  const double frac = static_cast<double>(failures) / static_cast<double>(total);
  if (frac > max_fraction) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: %zu of %zu jobs failed (%.1f%%, budget %.1f%%)", stage, failures,
                  total, 100.0 * frac, 100.0 * max_fraction);
    throw ToolBudgetExceeded(buf);
  }
}

std::vector<ManifestRecord> as_train_records(const std::vector<CohortItem>& items) {
  std::vector<ManifestRecord> out;
  for (const auto& item : items) {
    ManifestRecord r;
    r.item = item;
    r.split = Split::kTrain;
    out.push_back(std::move(r));
  }
  return out;
}

std::string metrics_table(const AveragedMetrics& a, std::size_t seeds) {
  std::ostringstream os;
  const auto names = MetricsReport::names();
  const auto mean = a.mean.values(), sd = a.sd.values();
  os << "metric          mean(%)   sd(%)   over " << seeds << " seed(s)\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof line, "%-14s %8s %7s\n", std::string(names[i]).c_str(),
                  format_percent(mean[i]).c_str(), format_percent(sd[i]).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal speech classifier with mixture-of-experts compression and TTS augmentation"};
  app.require_subcommand(1);

  std::string manifest, config_path, out_path, caches, model_path, plan_path, cmd, out_dir, grid_path,
      results_dir, feature, failures_path, synth_manifest, summary_path, results_out;
  double factor = 1.0;
  std::uint64_t seed = 0;
  double timeout = 0.0;
  int retries = -1, jobs = 0;

  auto* extract = app.add_subcommand("extract", "Compute MFCC sequences or spectrogram images into a cache");
  extract->add_option("--manifest", manifest)->required();
  extract->add_option("--feature", feature)->required()->check(CLI::IsMember({"mfcc", "spec"}));
  extract->add_option("--config", config_path);
  extract->add_option("--out-cache", out_path)->required();

  auto* plan_aug = app.add_subcommand("plan-aug", "Plan intra-class (voice, transcript) pairs");
  plan_aug->add_option("--manifest", manifest)->required();
  plan_aug->add_option("--factor", factor)->required();
  plan_aug->add_option("--seed", seed)->required();
  plan_aug->add_option("--out", out_path)->required();

  const auto tool_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path);
    sub->add_option("--timeout", timeout, "seconds per attempt");
    sub->add_option("--retries", retries);
    sub->add_option("--jobs", jobs, "concurrent tool processes");
    sub->add_option("--failures", failures_path, "failure report (default <out-dir>/failures.jsonl)");
  };
  auto* run_tts = app.add_subcommand("run-tts", "Synthesize planned pairs with an external TTS command");
  run_tts->add_option("--plan", plan_path)->required();
  run_tts->add_option("--manifest", manifest)->required();
  run_tts->add_option("--cmd", cmd, "template with {voice_audio} {text} {out}");
  run_tts->add_option("--out-dir", out_dir)->required();
  run_tts->add_option("--out-manifest", out_path, "default <out-dir>/synthetic.jsonl");
  tool_flags(run_tts);

  auto* run_asr = app.add_subcommand("run-asr", "Transcribe items with an external ASR command");
  run_asr->add_option("--manifest", manifest)->required();
  run_asr->add_option("--cmd", cmd, "template with {audio} {out}");
  run_asr->add_option("--out-dir", out_dir)->required();
  run_asr->add_option("--out-manifest", out_path, "default <out-dir>/transcribed.jsonl");
  tool_flags(run_asr);

  auto* merge = app.add_subcommand("merge", "Merge real and synthetic manifests");
  merge->add_option("--real", manifest)->required();
  merge->add_option("--synthetic", synth_manifest)->required();
  merge->add_option("--out", out_path)->required();
  merge->add_option("--summary", summary_path);

  auto* train = app.add_subcommand("train", "Train over the configured seeds and evaluate on the test split");
  train->add_option("--config", config_path);
  train->add_option("--manifest", manifest)->required();
  train->add_option("--caches", caches)->required();
  train->add_option("--out-model", model_path)->required();
  train->add_option("--out-result", out_path)->required();
  std::string test_manifest;
  train->add_option("--test-manifest", test_manifest, "test records, when --manifest holds none");

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on the test split");
  eval->add_option("--model", model_path)->required();
  eval->add_option("--manifest", manifest)->required();
  eval->add_option("--caches", caches)->required();
  eval->add_option("--config", config_path, "threshold and aggregation");
  eval->add_option("--out-report", out_path)->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "Run the MoE x augmentation grid");
  ablate_cmd->add_option("--config", config_path);
  ablate_cmd->add_option("--grid", grid_path)->required();
  ablate_cmd->add_option("--out-csv", out_path)->required();
  ablate_cmd->add_option("--results-dir", results_out, "also write one result JSON per cell");

  auto* curve = app.add_subcommand("curve", "Accuracy versus augmentation factor");
  curve->add_option("--results", results_dir)->required();
  curve->add_option("--out-csv", out_path)->required();

  std::size_t n_train = 100, n_test = 60;
  double separation = 6.0, jitter = 0.3;
  std::string informative = "all", dims_text;
  std::vector<double> factors = {1.0, 1.5, 2.0, 2.5, 3.0};
  auto* synth = app.add_subcommand("synth", "Write a synthetic embedding cohort with augmented manifests");
  synth->add_option("--out-dir", out_dir)->required();
  synth->add_option("--train", n_train);
  synth->add_option("--test", n_test);
  synth->add_option("--separation", separation);
  synth->add_option("--informative", informative)->check(CLI::IsMember({"all", "w2v", "mfcc", "spec", "text"}));
  synth->add_option("--jitter", jitter);
  synth->add_option("--seed", seed);
  synth->add_option("--factors", factors)->delimiter(',');
  synth->add_option("--dims", dims_text, "d_w,d_m,d_s,d_t");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*extract) {
      const ExperimentConfig config = config_or_default(config_path);
      const Manifest m = parse_manifest(manifest);
      const RawFeature f = parse_raw_feature(feature);
      ExtractResult r = extract_features(m, f, config.frames);
      write_cache(out_path, r.cache);
      for (const auto& id : r.skipped_silent) err << "skipped silent segment " << id << "\n";
      err << "wrote " << r.cache.size() << " rows of dim " << r.cache.dim() << " (slot "
          << cache_slot(f) << ") to " << out_path << "\n";
    } else if (*plan_aug) {
      const Manifest m = parse_manifest(manifest);
      const auto items = m.items(Split::kTrain);
      const PairPlan plan = plan_pairs(items, factor, seed);
      check_plan(plan, items);
      write_plan(out_path, plan);
      err << "planned " << plan.records.size() << " synthetic items\n";
    } else if (*run_tts || *run_asr) {
      const ExperimentConfig config = config_or_default(config_path);
      ExternalToolConfig tools = with_env_overrides(config.tools);
      if (timeout > 0.0) tools.timeout_s = timeout;
      if (retries >= 0) tools.max_retries = retries;
      if (jobs > 0) tools.concurrency = jobs;
      const Manifest m = parse_manifest(manifest);
      const fs::path dir(out_dir);
      const fs::path report = failures_path.empty() ? dir / "failures.jsonl" : fs::path(failures_path);
      if (*run_tts) {
        if (!cmd.empty()) tools.tts_command_template = cmd;
        const PairPlan plan = read_plan(plan_path);
        const auto items = m.items(Split::kTrain);
        TtsResult r = run_tts_jobs(plan, items, tools, dir, m.base_dir);
        write_manifest(out_path.empty() ? dir / "synthetic.jsonl" : fs::path(out_path),
                       as_train_records(r.items));
        write_failure_report(report, r.failures);
        err << "synthesized " << r.items.size() << " of " << plan.records.size() << " items, "
            << r.failures.size() << " failed\n";
        check_budget(r.failures.size(), plan.records.size(), config.max_failure_fraction, "run-tts");
      } else {
        if (!cmd.empty()) tools.asr_command_template = cmd;
        const auto items = m.items();
        AsrResult r = run_asr_jobs(items, tools, dir, m.base_dir);
        std::vector<ManifestRecord> records = m.records;
        std::size_t invalid = 0;
        for (std::size_t i = 0; i < records.size(); ++i) {
          records[i].item = r.items[i];
          invalid += !r.items[i].valid;
        }
        write_manifest(out_path.empty() ? dir / "transcribed.jsonl" : fs::path(out_path), records);
        write_failure_report(report, r.failures);
        err << "transcribed " << items.size() - r.failures.size() << " of " << items.size() << " items, "
            << invalid << " marked invalid\n";
        check_budget(r.failures.size(), items.size(), config.max_failure_fraction, "run-asr");
      }
    } else if (*merge) {
      const Manifest real = parse_manifest(manifest);
      const Manifest synthetic = parse_manifest(synth_manifest);
      const auto real_train = real.items(Split::kTrain);
      // Synthetic paths are stored resolved against their own manifest.
      std::vector<CohortItem> synth_items;
      for (const auto& r : synthetic.records) {
        if (r.item.source != Source::kSynthetic)
          throw DataError("merge: '" + r.item.id + "' in the synthetic manifest is not synthetic");
        CohortItem item = r.item;
        if (!item.audio.empty()) item.audio = synthetic.resolve(item.audio).string();
        if (!item.transcript.empty()) item.transcript = synthetic.resolve(item.transcript).string();
        synth_items.push_back(std::move(item));
      }
      const AugmentedManifest merged = merge_augmented(real_train, synth_items);
      std::vector<ManifestRecord> records;
      for (const auto& r : real.records)
        if (r.split == Split::kTest || r.item.valid) records.push_back(r);
      for (const auto& item : merged.items)
        if (item.source == Source::kSynthetic) records.push_back(as_train_records({item}).front());
      write_manifest(out_path, records);
      if (!summary_path.empty()) write_text_file(summary_path, merged.summary_json() + "\n");
      err << merged.summary_json() << "\n";
    } else if (*train) {
      const ExperimentConfig config = config_or_default(config_path);
      const Manifest m = parse_manifest(manifest);
      CacheSet cache_set(caches);
      const auto train_records = select_split(m, Split::kTrain);
      const Manifest tm = test_manifest.empty() ? m : parse_manifest(test_manifest);
      const auto test_records = select_split(tm, Split::kTest);
      if (test_records.empty()) throw DataError("no test records to evaluate on");
      const auto train_set = resolve_features(train_records, m.base_dir, cache_set, config.model);
      const auto test_set = resolve_features(test_records, tm.base_dir, cache_set, config.model);
      bool saved = false;
      const RunResult result = run_experiment(config, train_set, test_set,
                                              [&](std::uint64_t s, const MotasModel& model) {
                                                err << "seed " << s << " trained\n";
                                                if (!saved) save_model(model_path, model);
                                                saved = true;
                                              });
      write_json(out_path, result.to_json());
      out << metrics_table(result.averaged, result.seeds.size());
    } else if (*eval) {
      ExperimentConfig config = config_or_default(config_path);
      const MotasModel model = load_model(model_path);
      config.model = model.config();
      const Manifest m = parse_manifest(manifest);
      CacheSet cache_set(caches);
      const auto test_records = select_split(m, Split::kTest);
      const auto test_set = resolve_features(test_records, m.base_dir, cache_set, config.model);
      const Evaluation ev = evaluate(model, test_set, config);
      json subjects = json::array();
      for (std::size_t i = 0; i < ev.subjects.size(); ++i)
        subjects.push_back({{"subject", ev.subjects[i]},
                            {"label", ev.subject_labels[i]},
                            {"probability", ev.subject_probs[i]}});
      write_json(out_path, {{"metrics", report_to_json(ev.report)},
                            {"aggregation", std::string(to_string(config.aggregation))},
                            {"threshold", config.threshold},
                            {"subjects", subjects}});
      AveragedMetrics single{ev.report, {}};
      out << metrics_table(single, 1);
    } else if (*ablate_cmd) {
      const ExperimentConfig config = config_or_default(config_path);
      const Grid grid = load_grid(grid_path);
      if (!results_out.empty()) fs::create_directories(results_out);
      const auto cells = ablate(config, grid, [&](const CellResult& c) {
        err << "cell " << c.cell.id << " (factor " << factor_tag(c.cell.factor)
            << ", moe " << (c.cell.moe_enabled ? "on" : "off") << "): accuracy "
            << format_percent(c.result.averaged.mean.accuracy) << "%\n";
        if (!results_out.empty())
          write_json(fs::path(results_out) / ("cell_" + std::to_string(c.cell.id) + ".json"),
                     c.result.to_json());
      });
      write_text_file(out_path, ablation_csv(cells));
    } else if (*curve) {
      const auto results = load_results(results_dir);
      const auto points = curve_from_results(results);
      write_text_file(out_path, emit_curve(points));
    } else if (*synth) {
      SynthCohortSpec spec;
      spec.train_subjects = n_train;
      spec.test_subjects = n_test;
      spec.seed = seed;
      spec.factors = factors;
      spec.jitter = jitter;
      if (!dims_text.empty()) {
        unsigned long a = 0, b = 0, c = 0, d = 0;
        char tail = 0;
        if (std::sscanf(dims_text.c_str(), "%lu,%lu,%lu,%lu%c", &a, &b, &c, &d, &tail) != 4)
          throw InvalidArgument("--dims expects four comma-separated sizes");
        spec.embedding.dims = {a, b, c, d};
      }
      spec.embedding.separation = {0.0, 0.0, 0.0, 0.0};
      const char* slots[] = {"w2v", "mfcc", "spec", "text"};
      for (std::size_t i = 0; i < 4; ++i)
        if (informative == "all" || informative == slots[i]) spec.embedding.separation[i] = separation;
      write_synth_cohort(out_dir, make_synth_cohort(spec));
      err << "wrote synthetic cohort to " << out_dir << "\n";
    }
  } catch (const ToolBudgetExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitToolBudget;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace motas
