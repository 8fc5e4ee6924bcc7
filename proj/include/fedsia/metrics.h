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

#ifndef FEDSIA_METRICS_H_
#define FEDSIA_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsia/dataset.h"
#include "fedsia/nn.h"

namespace fedsia {

// |acc(train) - acc(test)| for one model.
double compute_generalization_error(const MlpModel& model, const DatasetView& train,
                                    const DatasetView& test);

// Everything that identifies an experiment cell apart from its seed.
struct ConfigEcho {
  std::string framework;
  std::string dataset;
  double alpha = 0.0;
  std::size_t local_epochs = 0;
  std::size_t clients = 0;
  std::size_t rounds = 0;
  bool dp_enabled = false;

  friend bool operator==(const ConfigEcho&, const ConfigEcho&) = default;
};

struct ExperimentResult {
  ConfigEcho config;
  std::uint64_t seed = 0;

  std::vector<double> round_asr;  // one entry per round
  double max_round_asr = 0.0;
  std::size_t max_round = 0;  // 1-based round of max_round_asr, earliest on ties

  // Local models of the final round, on their own slice and the global test set.
  std::vector<double> client_train_acc;
  std::vector<double> client_test_acc;
  double gen_err_mean = 0.0;

  // Global model for FedSGD/FedAvg; mean over local models for FedMD.
  double train_acc = 0.0;
  double test_acc = 0.0;

  std::vector<double> round_epsilon;  // cumulative, DP runs only
  std::optional<double> dp_epsilon;
};

// Fills max_round_asr / max_round from round_asr.
void finalize_round_series(ExperimentResult& result);

struct SampleStats {
  double mean = 0.0;
  double stddev = 0.0;  // n - 1 denominator; 0 for a single value
};

SampleStats sample_stats(std::span<const double> values);

struct SeedAggregate {
  ConfigEcho config;
  std::vector<std::uint64_t> seeds;
  SampleStats asr;  // over per-run max-round ASR
  std::size_t max_round = 0;  // argmax of the seed-mean round series, 1-based
  std::vector<double> mean_round_asr;
  SampleStats gen_err;
  SampleStats train_acc;
  SampleStats test_acc;
  std::optional<double> dp_epsilon;  // mean over seeds
};

// Throws ArgumentError if the list is empty or configs differ.
SeedAggregate aggregate_over_seeds(std::span<const ExperimentResult> results);

// Spearman rank correlation with average ranks for ties.
double rank_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace fedsia

#endif  // FEDSIA_METRICS_H_
