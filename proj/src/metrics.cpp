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

#include "motas/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "motas/error.hpp"
#include "motas/fusion.hpp"

namespace motas {

const std::array<std::string_view, MetricsReport::kMetricCount>& MetricsReport::names() {
  static const std::array<std::string_view, kMetricCount> kNames = {
      "accuracy", "precision_ad", "precision_cn", "recall_ad", "recall_cn", "f1_ad", "f1_cn"};
  return kNames;
}

std::array<double, MetricsReport::kMetricCount> MetricsReport::values() const {
  return {accuracy, precision_ad, precision_cn, recall_ad, recall_cn, f1_ad, f1_cn};
}

void MetricsReport::set_values(const std::array<double, kMetricCount>& v) {
  accuracy = v[0];
  precision_ad = v[1];
  precision_cn = v[2];
  recall_ad = v[3];
  recall_cn = v[4];
  f1_ad = v[5];
  f1_cn = v[6];
}

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size())
    throw InvalidArgument("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                          std::to_string(labels.size()) + " labels");
  if (preds.empty()) throw InvalidArgument("confusion: no predictions");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (labels[i] != 0 && labels[i] != 1))
      throw InvalidArgument("confusion: entry " + std::to_string(i) + " is not 0 or 1");
    const bool p = preds[i] == 1, l = labels[i] == 1;
    if (p && l)
      ++c.tp;
    else if (p)
      ++c.fp;
    else if (l)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

MetricsReport metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw InvalidArgument("metrics: empty confusion matrix");
  MetricsReport r;
  r.counts = c;
  const auto ratio = [&](std::uint64_t num, std::uint64_t den) {
    if (den == 0) {
      r.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  const auto harmonic = [&](double p, double q) {
    if (p + q == 0.0) {
      r.degenerate = true;
      return 0.0;
    }
    return 2.0 * p * q / (p + q);
  };
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.precision_ad = ratio(c.tp, c.tp + c.fp);
  r.recall_ad = ratio(c.tp, c.tp + c.fn);
  // CN metrics: the same formulas with the class roles swapped.
  r.precision_cn = ratio(c.tn, c.tn + c.fn);
  r.recall_cn = ratio(c.tn, c.tn + c.fp);
  r.f1_ad = harmonic(r.precision_ad, r.recall_ad);
  r.f1_cn = harmonic(r.precision_cn, r.recall_cn);
  return r;
}

std::string_view to_string(Aggregation a) {
  return a == Aggregation::kMeanProb ? "mean_prob" : "majority";
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "mean_prob") return Aggregation::kMeanProb;
  if (text == "majority") return Aggregation::kMajority;
  throw DataError("unknown aggregation '" + std::string(text) + "'");
}

double aggregate_subject(std::span<const double> segment_probs, Aggregation rule,
                         double threshold) {
  if (segment_probs.empty()) throw InvalidArgument("aggregate_subject: no segments");
  double acc = 0.0;
  for (double p : segment_probs)
    acc += rule == Aggregation::kMeanProb ? p : static_cast<double>(predict(p, threshold));
  return acc / static_cast<double>(segment_probs.size());
}

AveragedMetrics average_over_seeds(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw InvalidArgument("average_over_seeds: no reports");
  constexpr std::size_t K = MetricsReport::kMetricCount;
  // Offsets from the first report keep the mean of identical reports exact.
  const auto first = reports.front().values();
  std::array<double, K> mean{}, var{};
  for (const auto& r : reports) {
    const auto v = r.values();
    for (std::size_t i = 0; i < K; ++i) mean[i] += v[i] - first[i];
  }
  const double n = static_cast<double>(reports.size());
  for (std::size_t i = 0; i < K; ++i) mean[i] = first[i] + mean[i] / n;
  for (const auto& r : reports) {
    const auto v = r.values();
    for (std::size_t i = 0; i < K; ++i) var[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
  }
  AveragedMetrics out;
  out.mean.set_values(mean);
  std::array<double, K> sd{};
  for (std::size_t i = 0; i < K; ++i) sd[i] = std::sqrt(var[i] / n);
  out.sd.set_values(sd);
  for (const auto& r : reports) out.mean.degenerate = out.mean.degenerate || r.degenerate;
  return out;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

}  // namespace motas
