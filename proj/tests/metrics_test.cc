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

#include <cmath>
#include <vector>

#include "gtest/gtest.h"

#include "fedsia/error.h"
#include "test_util.h"

namespace fedsia {
namespace {

using ::fedsia::testing::random_dataset;
using ::fedsia::testing::random_model;

ExperimentResult result_with(std::vector<double> series, std::uint64_t seed) {
  ExperimentResult r;
  r.config = {"fedavg", "synthetic", 1.0, 1, 10, series.size(), false};
  r.seed = seed;
  r.round_asr = std::move(series);
  finalize_round_series(r);
  return r;
}

TEST(GeneralizationTest, AbsoluteGap) {
  // Constant predictor of class 1.
  std::vector<DenseLayer> layers(1);
  layers[0].weights = DenseMatrix(2, 1, {0.0, 0.0});
  layers[0].bias = {0.0, 1.0};
  const MlpModel model(layers);
  Dataset train;
  train.class_count = 2;
  train.features = DenseMatrix(10, 1, 0.0);
  train.labels = {1, 1, 1, 1, 1, 1, 1, 1, 1, 0};
  Dataset test = train;
  test.labels = {1, 1, 1, 1, 1, 1, 1, 0, 0, 0};
  EXPECT_NEAR(compute_generalization_error(model, DatasetView::all(train), DatasetView::all(test)),
              0.2, 1e-15);
  EXPECT_EQ(compute_generalization_error(model, DatasetView::all(train), DatasetView::all(train)),
            0.0);
  EXPECT_THROW(compute_generalization_error(model, DatasetView(train, {}), DatasetView::all(test)),
               ArgumentError);
}

TEST(GeneralizationTest, MatchesManualCounting) {
  const Dataset data = random_dataset(400, 4, 3, 1);
  const DatasetView test(data, {300, 301, 302, 303, 304, 305, 306, 307, 308, 309});
  for (std::size_t k = 0; k < 10; ++k) {
    const MlpModel model = random_model({4, 5, 3}, 10 + k);
    std::vector<std::size_t> rows;
    for (std::size_t i = 30 * k; i < 30 * (k + 1); ++i) rows.push_back(i);
    const DatasetView train(data, rows);
    std::size_t train_hits = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      train_hits += static_cast<int>(argmax(forward_logits(model, train.feature(i)))) ==
                    train.label(i);
    }
    std::size_t test_hits = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      test_hits += static_cast<int>(argmax(forward_logits(model, test.feature(i)))) ==
                   test.label(i);
    }
    const double gap = std::abs(train_hits / 30.0 - test_hits / 10.0);
    EXPECT_NEAR(compute_generalization_error(model, train, test), gap, 1e-15);
  }
}

TEST(SeriesTest, MaxRoundIsEarliestMaximum) {
  const ExperimentResult r = result_with({0.1, 0.4, 0.2, 0.4}, 0);
  EXPECT_EQ(r.max_round_asr, 0.4);
  EXPECT_EQ(r.max_round, 2u);
}

TEST(StatsTest, SampleStandardDeviation) {
  const std::vector<double> v{1.0, 2.0, 3.0};
  const SampleStats s = sample_stats(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.stddev, 1.0);
  const std::vector<double> one{0.37};
  EXPECT_EQ(sample_stats(one).stddev, 0.0);
}

TEST(StatsTest, MatchesTwoPassRecomputation) {
  RngStream rng(4);
  std::vector<double> v(5);
  for (double& x : v) x = rng.uniform01();
  long double sum = 0;
  for (double x : v) sum += x;
  const long double mean = sum / 5;
  long double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const SampleStats s = sample_stats(v);
  EXPECT_NEAR(s.mean, static_cast<double>(mean), 1e-15);
  EXPECT_NEAR(s.stddev, static_cast<double>(std::sqrt(ss / 4)), 1e-15);
}

TEST(AggregateTest, SeedStatistics) {
  std::vector<ExperimentResult> runs{result_with({0.01, 0.01, 0.01}, 0),
                                     result_with({0.02, 0.01, 0.0}, 1),
                                     result_with({0.0, 0.03, 0.0}, 2)};
  runs[0].gen_err_mean = 0.1;
  runs[1].gen_err_mean = 0.2;
  runs[2].gen_err_mean = 0.3;
  const SeedAggregate a = aggregate_over_seeds(runs);
  EXPECT_EQ(a.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_NEAR(a.asr.mean, 0.02, 1e-15);
  EXPECT_NEAR(a.asr.stddev, 0.01, 1e-15);
  EXPECT_NEAR(a.gen_err.mean, 0.2, 1e-15);
  ASSERT_EQ(a.mean_round_asr.size(), 3u);
  EXPECT_NEAR(a.mean_round_asr[1], 0.05 / 3.0, 1e-15);
  EXPECT_EQ(a.max_round, 2u);
  EXPECT_FALSE(a.dp_epsilon.has_value());
}

TEST(AggregateTest, SingleResultZeroStd) {
  const std::vector<ExperimentResult> runs{result_with({0.3, 0.5}, 7)};
  const SeedAggregate a = aggregate_over_seeds(runs);
  EXPECT_EQ(a.asr.stddev, 0.0);
  EXPECT_EQ(a.asr.mean, 0.5);
}

TEST(AggregateTest, MixedConfigsRejected) {
  std::vector<ExperimentResult> runs{result_with({0.3}, 0), result_with({0.4}, 1)};
  runs[1].config.alpha = 0.1;
  EXPECT_THROW(aggregate_over_seeds(runs), ArgumentError);
  EXPECT_THROW(aggregate_over_seeds(std::span<const ExperimentResult>{}), ArgumentError);
}

TEST(RankCorrelationTest, KnownValues) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> up{2, 4, 6, 8, 100};
  const std::vector<double> down{5, 4, 3, 2, 1};
  EXPECT_NEAR(rank_correlation(x, up), 1.0, 1e-15);
  EXPECT_NEAR(rank_correlation(x, down), -1.0, 1e-15);
  // Ties take average ranks: y ranks (1.5, 1.5, 3, 4, 5).
  const std::vector<double> tied{1, 1, 2, 3, 4};
  const double rx[] = {1, 2, 3, 4, 5};
  const double ry[] = {1.5, 1.5, 3, 4, 5};
  double mx = 3, my = 3, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 5; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  EXPECT_NEAR(rank_correlation(x, tied), sxy / std::sqrt(sxx * syy), 1e-15);
}

}  // namespace
}  // namespace fedsia
