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

#include "motas/trainer.hpp"

#include <cmath>
#include <map>
#include <set>

#include "motas/error.hpp"
#include "motas/fusion.hpp"
#include "motas/optim.hpp"

namespace motas {

using nlohmann::json;

namespace {

enum Stream : std::uint64_t { kStreamOrder = 101, kStreamDropout = 102, kStreamValidation = 103 };

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<SampleFeatures> val;
};

// Holds out whole real subjects; synthetic items voiced by a held-out
// subject are dropped from training as well.
SplitIndices validation_split(std::span<const SampleFeatures> samples, double fraction,
                              std::uint64_t seed) {
  SplitIndices out;
  if (fraction <= 0.0) {
    for (std::size_t i = 0; i < samples.size(); ++i) out.train.push_back(i);
    return out;
  }
  std::vector<std::string> subjects;
  std::set<std::string> seen;
  for (const auto& s : samples)
    if (s.bundle.source == Source::kReal && seen.insert(s.subject).second) subjects.push_back(s.subject);
  if (subjects.size() < 2) throw DataError("validation split needs at least 2 real subjects");
  Rng rng(mix_seed(seed, kStreamValidation));
  rng.shuffle(std::span(subjects));
  const std::size_t n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(subjects.size()))), 1,
      subjects.size() - 1);
  const std::set<std::string> held(subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(n_val));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!held.count(samples[i].subject))
      out.train.push_back(i);
    else if (samples[i].bundle.source == Source::kReal)
      out.val.push_back(samples[i]);
  }
  return out;
}

}  // namespace

double segment_accuracy(const MotasModel& model, std::span<const SampleFeatures> samples,
                        double threshold) {
  if (samples.empty()) throw InvalidArgument("segment_accuracy: no samples");
  const auto probs = model.predict_proba(samples);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    correct += predict(probs[i], threshold) == label_value(samples[i].bundle.label);
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

TrainedModel train_model(const ExperimentConfig& config, std::span<const SampleFeatures> train,
                         std::uint64_t seed) {
  config.validate();
  if (train.empty()) throw DataError("empty training set");
  TrainedModel out{MotasModel(config.model, seed), {}, 0.0, std::nullopt};
  MotasModel& model = out.model;
  std::vector<grad::Var> params = model.parameters();
  grad::AdamState adam;
  adam.config.lr = config.lr;

  SplitIndices split = validation_split(train, config.val_fraction, seed);
  if (split.train.empty()) throw DataError("validation split left no training samples");
  std::vector<std::size_t> order = split.train;
  Rng order_rng(mix_seed(seed, kStreamOrder));
  Rng dropout_rng(mix_seed(seed, kStreamDropout));

  double best_val = -1.0;
  std::vector<std::vector<double>> best_params;
  std::vector<std::size_t> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(std::span(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(end));
      grad::zero_grads(params);
      grad::Var loss = loss_batch(model, train, batch, true, dropout_rng);
      loss.backward();
      grad::adam_step(params, adam);
      total += loss.item();
    }
    out.loss_history.push_back(total / static_cast<double>(order.size()));
    if (!split.val.empty()) {
      const double acc = segment_accuracy(model, split.val, config.threshold);
      if (acc > best_val) {
        best_val = acc;
        out.best_epoch = epoch;
        best_params.clear();
        for (const auto& p : params) best_params.emplace_back(p.value().values().begin(), p.value().values().end());
      }
    }
  }
  if (!best_params.empty()) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto dst = params[k].mutable_value().values();
      std::copy(best_params[k].begin(), best_params[k].end(), dst.begin());
    }
  }
  out.train_accuracy = segment_accuracy(model, train, config.threshold);
  return out;
}

Evaluation evaluate_probabilities(std::span<const double> segment_probs,
                                  std::span<const SampleFeatures> samples,
                                  const ExperimentConfig& config) {
  if (samples.empty()) throw DataError("empty test set");
  if (segment_probs.size() != samples.size())
    throw InvalidArgument("evaluate: probability count does not match sample count");
  Evaluation ev;
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<double>> grouped;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const int label = label_value(s.bundle.label);
    auto [it, fresh] = slot.try_emplace(s.subject, ev.subjects.size());
    if (fresh) {
      ev.subjects.push_back(s.subject);
      ev.subject_labels.push_back(label);
      grouped.emplace_back();
    } else if (ev.subject_labels[it->second] != label) {
      throw DataError("subject '" + s.subject + "' has segments with different labels");
    }
    grouped[it->second].push_back(segment_probs[i]);
  }
  std::vector<int> preds;
  for (const auto& probs : grouped) {
    const double p = aggregate_subject(probs, config.aggregation, config.threshold);
    ev.subject_probs.push_back(p);
    // Majority aggregation yields a vote share; a tie counts as AD.
    preds.push_back(config.aggregation == Aggregation::kMajority ? predict(p, 0.5)
                                                                 : predict(p, config.threshold));
  }
  ev.report = metrics(confusion(preds, ev.subject_labels));
  return ev;
}

Evaluation evaluate(const MotasModel& model, std::span<const SampleFeatures> test,
                    const ExperimentConfig& config) {
  if (test.empty()) throw DataError("empty test set");
  const auto probs = model.predict_proba(test);
  return evaluate_probabilities(probs, test, config);
}

json report_to_json(const MetricsReport& r) {
  json j = json::object();
  const auto values = r.values();
  for (std::size_t i = 0; i < MetricsReport::kMetricCount; ++i)
    j[std::string(MetricsReport::names()[i])] = values[i];
  j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}};
  j["degenerate"] = r.degenerate;
  return j;
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  std::array<double, MetricsReport::kMetricCount> values{};
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = j.at(std::string(MetricsReport::names()[i])).get<double>();
  r.set_values(values);
  if (auto c = j.find("counts"); c != j.end()) {
    r.counts.tp = c->at("tp");
    r.counts.fp = c->at("fp");
    r.counts.tn = c->at("tn");
    r.counts.fn = c->at("fn");
  }
  if (auto d = j.find("degenerate"); d != j.end()) r.degenerate = d->get<bool>();
  return r;
}

json RunResult::to_json() const {
  json per_seed = json::array();
  for (const auto& s : seeds) {
    json e = {{"seed", s.seed},
              {"metrics", report_to_json(s.report)},
              {"loss_history", s.loss_history},
              {"train_accuracy", s.train_accuracy}};
    if (s.best_epoch) e["best_epoch"] = *s.best_epoch;
    per_seed.push_back(std::move(e));
  }
  return {{"config", config},
          {"seeds", per_seed},
          {"mean", report_to_json(averaged.mean)},
          {"sd", report_to_json(averaged.sd)}};
}

RunResult RunResult::from_json(const json& j) {
  RunResult r;
  try {
    r.config = j.at("config");
    for (const auto& e : j.at("seeds")) {
      SeedResult s;
      s.seed = e.at("seed");
      s.report = report_from_json(e.at("metrics"));
      s.loss_history = e.at("loss_history").get<std::vector<double>>();
      s.train_accuracy = e.at("train_accuracy");
      if (auto b = e.find("best_epoch"); b != e.end()) s.best_epoch = b->get<std::size_t>();
      r.seeds.push_back(std::move(s));
    }
    r.averaged.mean = report_from_json(j.at("mean"));
    r.averaged.sd = report_from_json(j.at("sd"));
  } catch (const json::exception& e) {
    throw DataError(std::string("bad run result: ") + e.what());
  }
  return r;
}

RunResult run_experiment(const ExperimentConfig& config, std::span<const SampleFeatures> train,
                         std::span<const SampleFeatures> test,
                         const std::function<void(std::uint64_t, const MotasModel&)>& on_model) {
  config.validate();
  if (test.empty()) throw DataError("empty test set");
  RunResult result;
  result.config = config_to_json(config);
  std::vector<MetricsReport> reports;
  for (std::uint64_t seed : config.seeds) {
    TrainedModel trained = train_model(config, train, seed);
    if (on_model) on_model(seed, trained.model);
    SeedResult s;
    s.seed = seed;
    s.report = evaluate(trained.model, test, config).report;
    s.loss_history = std::move(trained.loss_history);
    s.train_accuracy = trained.train_accuracy;
    s.best_epoch = trained.best_epoch;
    reports.push_back(s.report);
    result.seeds.push_back(std::move(s));
  }
  result.averaged = average_over_seeds(reports);
  return result;
}

}  // namespace motas
