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

#include "fedsia/experiment.h"

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>

#include "fedsia/attack.h"
#include "fedsia/datagen.h"
#include "fedsia/error.h"
#include "fedsia/parallel.h"
#include "fedsia/protocols.h"

namespace fedsia {
namespace {

// Owns every dataset a run touches; views point into `pool`, so instances
// stay put behind a unique_ptr.
struct PreparedData {
  Dataset pool;
  DenseMatrix public_features;
  DatasetView train;
  DatasetView test;
  ClientPartition partition;
  std::vector<DatasetView> clients;
  TargetSet targets;
};

Dataset load_base_dataset(const DatasetSpec& spec) {
  if (spec.kind == "csv") return load_csv_dataset(spec.path, spec.label_column);
  return gen_synthetic(spec.n, spec.dim, spec.classes, spec.seed);
}

Dataset select_rows(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.class_count = data.class_count;
  out.features = DenseMatrix(rows.size(), data.dim());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto x = data.features.row(rows[i]);
    std::copy(x.begin(), x.end(), out.features.row(i).begin());
    out.labels.push_back(data.labels[rows[i]]);
  }
  return out;
}

std::unique_ptr<PreparedData> prepare_data(const RunConfig& config, const SeedDerivation& seeds) {
  auto prepared = std::make_unique<PreparedData>();
  Dataset base = load_base_dataset(config.dataset);
  base.validate();
  if (config.fl.framework == Framework::kFedMd) {
    if (config.fedmd.public_size >= base.size()) {
      throw ConfigError("fedmd.public_size must be smaller than the dataset");
    }
    std::vector<std::size_t> order(base.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream rng(seeds.derive(Purpose::kPublicSplit));
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::size_t> public_rows(order.begin(),
                                         order.begin() + static_cast<std::ptrdiff_t>(config.fedmd.public_size));
    std::vector<std::size_t> private_rows(order.begin() + static_cast<std::ptrdiff_t>(config.fedmd.public_size),
                                          order.end());
    std::sort(public_rows.begin(), public_rows.end());
    std::sort(private_rows.begin(), private_rows.end());
    // labels of the public slice are never used
    prepared->public_features = select_rows(base, public_rows).features;
    prepared->pool = select_rows(base, private_rows);
  } else {
    prepared->pool = std::move(base);
  }

  auto [train, test] =
      train_test_split(prepared->pool, config.train_ratio, seeds.derive(Purpose::kSplit));
  prepared->train = std::move(train);
  prepared->test = std::move(test);
  if (prepared->test.empty()) throw ConfigError("split leaves no test records");

  // Dirichlet draws can leave a client with fewer records than the attack
  // samples from it; redraw with the next attempt counter until all fit.
  const std::size_t needed = config.attack.targets_per_client;
  bool accepted = false;
  for (std::size_t attempt = 0; attempt < config.partition_attempts && !accepted; ++attempt) {
    prepared->partition = dirichlet_partition(prepared->train, config.fl.clients, config.alpha,
                                              seeds.derive(Purpose::kPartition, attempt));
    accepted = std::all_of(prepared->partition.client_indices.begin(),
                           prepared->partition.client_indices.end(),
                           [&](const auto& list) { return list.size() >= needed; });
  }
  if (!accepted) {
    throw ArgumentError("no Dirichlet partition with >= " + std::to_string(needed) +
                        " records per client after " +
                        std::to_string(config.partition_attempts) + " attempts");
  }
  check_partition(prepared->partition, prepared->train.indices());
  prepared->clients = prepared->partition.views(prepared->pool);
  prepared->targets = sample_targets(prepared->partition, prepared->pool, needed,
                                     seeds.derive(Purpose::kTargets));
  return prepared;
}

double attack_round(const RunConfig& config, std::span<const MlpModel> local_models,
                    const TargetSet& targets, std::size_t round) {
  const LossProbe probe = probe_losses(local_models, targets, round);
  if (config.attack.method == InferenceMethod::kPosterior) {
    return compute_asr(
        infer_source_posterior(probe, config.prior(), config.attack.temperature).prediction,
        targets);
  }
  return compute_asr(infer_source_argmin(probe), targets);
}

StreamFactory client_streams(const SeedDerivation& seeds, std::size_t round) {
  return [seeds, round](std::size_t client) {
    return RngStream(seeds.derive(Purpose::kClientTrain, round, client));
  };
}

ConfigEcho echo(const RunConfig& config) {
  ConfigEcho e;
  e.framework = std::string(to_string(config.fl.framework));
  e.dataset = config.dataset.display_name();
  e.alpha = config.alpha;
  e.local_epochs = config.reported_local_epochs();
  e.clients = config.fl.clients;
  e.rounds = config.fl.rounds;
  e.dp_enabled = config.dp.has_value();
  return e;
}

void fill_local_metrics(ExperimentResult& result, std::span<const MlpModel> local_models,
                        const PreparedData& data) {
  double gen_total = 0.0;
  for (std::size_t k = 0; k < local_models.size(); ++k) {
    const double train = eval_accuracy(local_models[k], data.clients[k]);
    const double test = eval_accuracy(local_models[k], data.test);
    result.client_train_acc.push_back(train);
    result.client_test_acc.push_back(test);
    gen_total += std::abs(train - test);
  }
  result.gen_err_mean = gen_total / static_cast<double>(local_models.size());
}

double mean_of(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

class RoundRecorder {
 public:
  RoundRecorder(const RunConfig& config, ExperimentResult& result)
      : config_(config), result_(result), cumulative_steps_(config.fl.clients, 0) {}

  std::vector<std::size_t>& round_steps() { return round_steps_; }

  void begin_round() { round_steps_.assign(config_.fl.clients, 0); }

  void end_round(double asr) {
    result_.round_asr.push_back(asr);
    if (!config_.dp) return;
    for (std::size_t k = 0; k < cumulative_steps_.size(); ++k) {
      cumulative_steps_[k] += round_steps_[k];
    }
    const std::size_t worst =
        *std::max_element(cumulative_steps_.begin(), cumulative_steps_.end());
    result_.round_epsilon.push_back(account_privacy(worst, *config_.dp).epsilon);
  }

 private:
  const RunConfig& config_;
  ExperimentResult& result_;
  std::vector<std::size_t> cumulative_steps_;
  std::vector<std::size_t> round_steps_;
};

void run_gradient_or_model_protocol(const RunConfig& config, const SeedDerivation& seeds,
                                    const PreparedData& data, int threads,
                                    ExperimentResult& result) {
  std::vector<std::size_t> widths{data.pool.dim()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(static_cast<std::size_t>(data.pool.class_count));
  RngStream init_rng(seeds.derive(Purpose::kModelInit));
  GlobalState state;
  state.global_model = MlpModel::initialize(widths, init_rng);

  RoundRecorder recorder(config, result);
  std::vector<MlpModel> local_models;
  const double lr = config.fl.train.learning_rate;
  for (std::size_t t = 1; t <= config.fl.rounds; ++t) {
    recorder.begin_round();
    auto& steps = recorder.round_steps();
    try {
      if (config.fl.framework == Framework::kFedSgd) {
        GradientOracle oracle;
        if (config.dp) {
          oracle = [&, t](const MlpModel& model, const DatasetView& view, std::size_t k) {
            RngStream rng(seeds.derive(Purpose::kClientTrain, t, k));
            steps[k] = 1;
            return dp_full_batch_gradient(model, view, *config.dp, rng);
          };
        }
        auto out = run_fedsgd_round(state, data.clients, lr, threads, oracle);
        std::vector<Gradients> grads;
        grads.reserve(out.updates.size());
        for (auto& u : out.updates) grads.push_back(std::move(u.gradients));
        local_models = recover_fedsgd_local_models(state.global_model, grads, lr);
        state = std::move(out.state);
      } else {
        LocalTrainer trainer;
        if (config.dp) {
          trainer = [&](const MlpModel& start, const DatasetView& view, std::size_t k,
                        RngStream& rng) {
            auto update = dp_sgd_local_update(start, view, config.fl.train, *config.dp, rng);
            steps[k] = update.steps;
            return std::move(update.model);
          };
        }
        auto out = run_fedavg_round(state, data.clients, config.fl.train,
                                    client_streams(seeds, t), threads, trainer);
        local_models.clear();
        for (auto& u : out.updates) local_models.push_back(std::move(u.model));
        state = std::move(out.state);
      }
      recorder.end_round(attack_round(config, local_models, data.targets, t));
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(t) + ": " + e.what());
    }
  }
  fill_local_metrics(result, local_models, data);
  result.train_acc = eval_accuracy(state.global_model, data.train);
  result.test_acc = eval_accuracy(state.global_model, data.test);
}

void run_fedmd_protocol(const RunConfig& config, const SeedDerivation& seeds,
                        const PreparedData& data, int threads, ExperimentResult& result) {
  const std::size_t dim = data.pool.dim();
  const auto classes = static_cast<std::size_t>(data.pool.class_count);
  const auto widths =
      heterogeneous_widths(dim, classes, config.fl.clients, config.fedmd.hidden_widths);
  std::vector<MlpModel> models;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    RngStream rng(seeds.derive(Purpose::kModelInit, 0, k));
    models.push_back(MlpModel::initialize(widths[k], rng));
  }
  std::vector<std::size_t> student_widths{dim};
  student_widths.insert(student_widths.end(), config.attack.student.hidden.begin(),
                        config.attack.student.hidden.end());
  student_widths.push_back(classes);

  GlobalState state;
  try {
    state = fedmd_init(std::move(models), data.clients, data.public_features,
                       config.fedmd.pretrain_epochs, config.fl.train, client_streams(seeds, 0),
                       threads);
  } catch (const NumericError& e) {
    throw NumericError(std::string("fedmd pretraining: ") + e.what());
  }

  RoundRecorder recorder(config, result);
  for (std::size_t t = 1; t <= config.fl.rounds; ++t) {
    recorder.begin_round();
    auto& steps = recorder.round_steps();
    try {
      LocalTrainer revisit;
      if (config.dp) {
        revisit = [&](const MlpModel& start, const DatasetView& view, std::size_t k,
                      RngStream& rng) {
          TrainSpec spec = config.fl.train;
          spec.epochs = config.fl.revisit_epochs;
          auto update = dp_sgd_local_update(start, view, spec, *config.dp, rng);
          steps[k] = update.steps;
          return std::move(update.model);
        };
      }
      auto out = run_fedmd_round(state, data.clients, config.fl.digest_epochs,
                                 config.fl.revisit_epochs, config.fl.train,
                                 client_streams(seeds, t), threads, revisit);

      RngStream init_rng(seeds.derive(Purpose::kStudentInit, t));
      const MlpModel initial = MlpModel::initialize(student_widths, init_rng);
      std::vector<MlpModel> students(out.updates.size());
      parallel_for(out.updates.size(), threads, [&](std::size_t k) {
        RngStream rng(seeds.derive(Purpose::kStudentTrain, t, k));
        students[k] = train_student_model(data.public_features, out.updates[k].scores, initial,
                                          config.attack.student, rng);
      });
      state = std::move(out.state);
      recorder.end_round(attack_round(config, students, data.targets, t));
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(t) + ": " + e.what());
    }
  }
  fill_local_metrics(result, state.client_models, data);
  result.train_acc = mean_of(result.client_train_acc);
  result.test_acc = mean_of(result.client_test_acc);
}

struct Job {
  const RunConfig* config;
  std::uint64_t seed;
};

std::vector<ExperimentResult> run_jobs(std::span<const Job> jobs, int threads) {
  std::vector<ExperimentResult> results(jobs.size());
  if (jobs.size() >= static_cast<std::size_t>(threads)) {
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
      results[i] = run_single(*jobs[i].config, jobs[i].seed, 1);
    });
  } else {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      results[i] = run_single(*jobs[i].config, jobs[i].seed, threads);
    }
  }
  return results;
}

}  // namespace

ExperimentResult run_single(const RunConfig& config, std::uint64_t seed, int threads) {
  config.validate();
  const SeedDerivation seeds(seed);
  ExperimentResult result;
  result.config = echo(config);
  result.seed = seed;
  try {
    const auto data = prepare_data(config, seeds);
    if (config.fl.framework == Framework::kFedMd) {
      run_fedmd_protocol(config, seeds, *data, threads, result);
    } else {
      run_gradient_or_model_protocol(config, seeds, *data, threads, result);
    }
  } catch (const NumericError& e) {
    throw NumericError("seed " + std::to_string(seed) + ", " + e.what());
  }
  finalize_round_series(result);
  if (!result.round_epsilon.empty()) result.dp_epsilon = result.round_epsilon.back();
  return result;
}

std::vector<ExperimentResult> run_experiment(const RunConfig& config) {
  config.validate();
  std::vector<Job> jobs;
  for (std::uint64_t seed : config.seeds) jobs.push_back({&config, seed});
  return run_jobs(jobs, config.threads);
}

namespace {

SweepOutput run_cells(const std::vector<RunConfig>& cells, int threads) {
  std::vector<Job> jobs;
  for (const auto& cell : cells) {
    cell.validate();
    for (std::uint64_t seed : cell.seeds) jobs.push_back({&cell, seed});
  }
  SweepOutput out;
  out.runs = run_jobs(jobs, threads);
  std::size_t cursor = 0;
  for (const auto& cell : cells) {
    const std::span<const ExperimentResult> slice(out.runs.data() + cursor, cell.seeds.size());
    out.aggregates.push_back(aggregate_over_seeds(slice));
    cursor += cell.seeds.size();
  }
  return out;
}

}  // namespace

SweepOutput run_sweep(const RunConfig& config, std::span<const double> alphas,
                      std::span<const std::size_t> epochs) {
  if (alphas.empty() || epochs.empty()) throw ConfigError("sweep grids must be nonempty");
  std::vector<RunConfig> cells;
  for (double alpha : alphas) {
    if (config.fl.framework == Framework::kFedSgd) {
      RunConfig cell = config;
      cell.alpha = alpha;
      cells.push_back(std::move(cell));
      continue;
    }
    for (std::size_t e : epochs) {
      RunConfig cell = config;
      cell.alpha = alpha;
      if (config.fl.framework == Framework::kFedMd) {
        cell.fl.revisit_epochs = e;
      } else {
        cell.fl.train.epochs = e;
      }
      cells.push_back(std::move(cell));
    }
  }
  return run_cells(cells, config.threads);
}

SweepOutput run_defense(const RunConfig& config, const DpParams& dp) {
  std::vector<RunConfig> cells(2, config);
  cells[0].dp.reset();
  cells[1].dp = dp;
  return run_cells(cells, config.threads);
}

}  // namespace fedsia
