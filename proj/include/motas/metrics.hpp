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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace motas {

// AD (label 1) is the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision_ad = 0.0;
  double precision_cn = 0.0;
  double recall_ad = 0.0;
  double recall_cn = 0.0;
  double f1_ad = 0.0;
  double f1_cn = 0.0;
  ConfusionCounts counts;
  // Set when some ratio had a zero denominator and was reported as 0.
  bool degenerate = false;

  static constexpr std::size_t kMetricCount = 7;
  static const std::array<std::string_view, kMetricCount>& names();
  std::array<double, kMetricCount> values() const;
  void set_values(const std::array<double, kMetricCount>& v);
};

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels);
MetricsReport metrics(const ConfusionCounts& counts);

enum class Aggregation { kMeanProb, kMajority };
std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view text);

// Mean of segment probabilities (kMeanProb) or the fraction of segments
// predicted AD (kMajority); the caller thresholds the result.
double aggregate_subject(std::span<const double> segment_probs,
                         Aggregation rule = Aggregation::kMeanProb, double threshold = 0.5);

struct AveragedMetrics {
  MetricsReport mean;
  MetricsReport sd;  // population standard deviation; counts left zero
};

AveragedMetrics average_over_seeds(std::span<const MetricsReport> reports);

// 0.942857 -> "94.29"
std::string format_percent(double fraction);

}  // namespace motas
