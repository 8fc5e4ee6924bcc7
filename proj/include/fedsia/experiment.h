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

#ifndef FEDSIA_EXPERIMENT_H_
#define FEDSIA_EXPERIMENT_H_

#include <cstdint>
#include <span>
#include <vector>

#include "fedsia/config.h"
#include "fedsia/dp.h"
#include "fedsia/metrics.h"

namespace fedsia {

// One full federated run for one seed: data, 80/20 split, Dirichlet
// partition, targets, T rounds with the source inference attack mounted on
// every round's legitimate updates, and final-round metrics. `threads`
// bounds the parallel client updates.
ExperimentResult run_single(const RunConfig& config, std::uint64_t seed, int threads = 1);

// run_single for every seed in config.seeds, in seed-list order.
std::vector<ExperimentResult> run_experiment(const RunConfig& config);

struct SweepOutput {
  std::vector<SeedAggregate> aggregates;
  std::vector<ExperimentResult> runs;
};

// Every (alpha, E) cell over all seeds. FedSGD collapses the E grid to a
// single cell per alpha; for FedMD the E grid sets the Revisit epochs.
SweepOutput run_sweep(const RunConfig& config, std::span<const double> alphas,
                      std::span<const std::size_t> epochs);

// The same configuration without and with DP-SGD local training.
SweepOutput run_defense(const RunConfig& config, const DpParams& dp);

}  // namespace fedsia

#endif  // FEDSIA_EXPERIMENT_H_
