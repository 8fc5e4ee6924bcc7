//
// Copyright 2026 The fedsia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fedsia/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsia/error.h"

namespace fedsia {

double compute_generalization_error(const MlpModel& model, const DatasetView& train,
                                    const DatasetView& test) {
  if (train.empty() || test.empty()) {
    throw ArgumentError("compute_generalization_error: empty view");
  }
  return std::abs(eval_accuracy(model, train) - eval_accuracy(model, test));
}

void finalize_round_series(ExperimentResult& result) {
  if (result.round_asr.empty()) {
    result.max_round_asr = 0.0;
    result.max_round = 0;
    return;
  }
  const auto best = std::max_element(result.round_asr.begin(), result.round_asr.end());
  result.max_round_asr = *best;
  result.max_round = static_cast<std::size_t>(best - result.round_asr.begin()) + 1;
}

SampleStats sample_stats(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("sample_stats: no values");
  SampleStats stats;
  double total = 0.0;
  for (double v : values) total += v;
  stats.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return stats;
}

SeedAggregate aggregate_over_seeds(std::span<const ExperimentResult> results) {
  if (results.empty()) throw ArgumentError("aggregate_over_seeds: no results");
  SeedAggregate agg;
  agg.config = results.front().config;
  std::vector<double> asr, gen, train, test, eps;
  const std::size_t rounds = results.front().round_asr.size();
  agg.mean_round_asr.assign(rounds, 0.0);
  for (const auto& r : results) {
    if (!(r.config == agg.config)) {
      throw ArgumentError("aggregate_over_seeds: results come from different configurations");
    }
    if (r.round_asr.size() != rounds) {
      throw ArgumentError("aggregate_over_seeds: round series lengths differ");
    }
    agg.seeds.push_back(r.seed);
    asr.push_back(r.max_round_asr);
    gen.push_back(r.gen_err_mean);
    train.push_back(r.train_acc);
    test.push_back(r.test_acc);
    if (r.dp_epsilon) eps.push_back(*r.dp_epsilon);
    for (std::size_t t = 0; t < rounds; ++t) agg.mean_round_asr[t] += r.round_asr[t];
  }
  for (double& v : agg.mean_round_asr) v /= static_cast<double>(results.size());
  agg.asr = sample_stats(asr);
  agg.gen_err = sample_stats(gen);
  agg.train_acc = sample_stats(train);
  agg.test_acc = sample_stats(test);
  if (!eps.empty()) agg.dp_epsilon = sample_stats(eps).mean;
  if (rounds > 0) {
    agg.max_round = static_cast<std::size_t>(
        std::max_element(agg.mean_round_asr.begin(), agg.mean_round_asr.end()) -
        agg.mean_round_asr.begin()) + 1;
  }
  return agg;
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double rank_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ArgumentError("rank_correlation: need two equally long series of length >= 2");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace fedsia
