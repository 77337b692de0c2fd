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


#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "motas/error.hpp"
#include "motas/metrics.hpp"
#include "motas/rng.hpp"
#include "oracles.hpp"

using namespace motas;

namespace {

std::vector<int> random_bits(std::size_t n, Rng& rng, double p_one) {
  std::vector<int> v(n);
  for (auto& x : v) x = rng.bernoulli(p_one) ? 1 : 0;
  return v;
}

}  // namespace

TEST_CASE("confusion counts for the worked examples") {
  const std::vector<int> l = {1, 1, 0, 0};
  CHECK(confusion(l, l) == ConfusionCounts{2, 0, 2, 0});
  CHECK(confusion(std::vector<int>{1, 1}, std::vector<int>{1, 0}) == ConfusionCounts{1, 1, 0, 0});
  CHECK_THROWS_AS(confusion(std::vector<int>{1}, std::vector<int>{1, 0}), InvalidArgument);
  CHECK_THROWS_AS(confusion(std::vector<int>{}, std::vector<int>{}), InvalidArgument);
  CHECK_THROWS_AS(confusion(std::vector<int>{2}, std::vector<int>{1}), InvalidArgument);
}

TEST_CASE("metrics for the worked examples") {
  const MetricsReport r = metrics(confusion(std::vector<int>{1, 0, 0, 0}, std::vector<int>{1, 1, 0, 0}));
  CHECK(r.accuracy == 0.75);
  CHECK(r.precision_ad == 1.0);
  CHECK(r.recall_ad == 0.5);
  CHECK(r.f1_ad == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_FALSE(r.degenerate);

  const MetricsReport perfect = metrics(ConfusionCounts{3, 0, 4, 0});
  for (double v : perfect.values()) CHECK(v == 1.0);

  const MetricsReport all_ad = metrics(ConfusionCounts{2, 2, 0, 0});
  CHECK(all_ad.recall_cn == 0.0);
  CHECK(all_ad.precision_cn == 0.0);
  CHECK(all_ad.degenerate);
  CHECK_THROWS_AS(metrics(ConfusionCounts{}), InvalidArgument);
}

TEST_CASE("recall 33 / 35 renders as 94.29") {
  const MetricsReport r = metrics(ConfusionCounts{33, 3, 33, 2});
  CHECK(format_percent(r.recall_ad) == "94.29");
  CHECK(r.counts.total() == 71);
  CHECK(format_percent(1.0) == "100.00");
  CHECK(format_percent(0.0) == "0.00");
}

TEST_CASE("metrics agree with an enumeration oracle on 1000 random cases") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(200);
    const double bias = rng.uniform();
    const auto p = random_bits(n, rng, bias);
    const auto l = random_bits(n, rng, rng.uniform());
    const MetricsReport r = metrics(confusion(p, l));
    const oracle::Metrics o = oracle::enumerate(p, l);
    const double diffs[] = {r.accuracy - o.acc, r.precision_ad - o.p_ad, r.precision_cn - o.p_cn,
                            r.recall_ad - o.r_ad, r.recall_cn - o.r_cn, r.f1_ad - o.f_ad,
                            r.f1_cn - o.f_cn};
    for (double d : diffs) worst = std::max(worst, std::abs(d));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("metric properties") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(60);
    auto p = random_bits(n, rng, 0.5);
    auto l = random_bits(n, rng, 0.5);
    const MetricsReport base = metrics(confusion(p, l));

    // Simultaneous permutation.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(std::span(order));
    std::vector<int> pp(n), lp(n);
    for (std::size_t i = 0; i < n; ++i) {
      pp[i] = p[order[i]];
      lp[i] = l[order[i]];
    }
    CHECK(metrics(confusion(pp, lp)).values() == base.values());

    // Swapping the positive class swaps the AD and CN columns.
    std::vector<int> ps(n), ls(n);
    for (std::size_t i = 0; i < n; ++i) {
      ps[i] = 1 - p[i];
      ls[i] = 1 - l[i];
    }
    const MetricsReport swapped = metrics(confusion(ps, ls));
    CHECK(swapped.accuracy == base.accuracy);
    CHECK(swapped.precision_ad == base.precision_cn);
    CHECK(swapped.precision_cn == base.precision_ad);
    CHECK(swapped.recall_ad == base.recall_cn);
    CHECK(swapped.f1_cn == base.f1_ad);

    // Accuracy is the class-weighted recall.
    const double n_ad = static_cast<double>(std::count(l.begin(), l.end(), 1));
    const double n_cn = static_cast<double>(n) - n_ad;
    CHECK(std::abs(base.accuracy - (base.recall_ad * n_ad + base.recall_cn * n_cn) / (n_ad + n_cn)) <= 1e-12);
  }
}

TEST_CASE("subject aggregation") {
  CHECK(aggregate_subject(std::vector<double>{0.9}) == 0.9);
  const double tie = aggregate_subject(std::vector<double>{0.2, 0.8});
  CHECK(tie == 0.5);
  CHECK(tie >= 0.5);
  CHECK(aggregate_subject(std::vector<double>{0.1, 0.2, 0.9}) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(aggregate_subject(std::vector<double>{0.1, 0.6, 0.9}, Aggregation::kMajority) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(aggregate_subject(std::vector<double>{}), InvalidArgument);
  CHECK(parse_aggregation("majority") == Aggregation::kMajority);
  CHECK(to_string(Aggregation::kMeanProb) == "mean_prob");
  CHECK_THROWS_AS(parse_aggregation("median"), DataError);
}

TEST_CASE("averaging over seeds") {
  MetricsReport a, b;
  a.accuracy = 0.8;
  b.accuracy = 0.9;
  const MetricsReport pair[] = {a, b};
  const AveragedMetrics avg = average_over_seeds(pair);
  CHECK(avg.mean.accuracy == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(avg.sd.accuracy == doctest::Approx(0.05).epsilon(1e-12));

  const MetricsReport same[] = {a, a, a};
  const AveragedMetrics flat = average_over_seeds(same);
  CHECK(flat.mean.values() == a.values());
  for (double v : flat.sd.values()) CHECK(v == 0.0);

  Rng rng(3);
  std::vector<MetricsReport> five(5);
  double manual = 0.0;
  for (auto& r : five) {
    std::array<double, MetricsReport::kMetricCount> v;
    for (auto& x : v) x = rng.uniform();
    r.set_values(v);
    manual += r.f1_cn;
  }
  CHECK(std::abs(average_over_seeds(five).mean.f1_cn - manual / 5.0) <= 1e-12);
  CHECK_THROWS_AS(average_over_seeds(std::vector<MetricsReport>{}), InvalidArgument);
}
