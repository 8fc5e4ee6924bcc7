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

// fedsia command line: gen-data, run, sweep, defense.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fedsia/config.h"
#include "fedsia/datagen.h"
#include "fedsia/error.h"
#include "fedsia/experiment.h"
#include "fedsia/report.h"
#include "fedsia/version.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::string> framework;
  std::optional<double> alpha;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> format;
  std::string out;
};

fedsia::RunConfig resolve(const Overrides& o) {
  fedsia::RunConfig config =
      o.config_path.empty() ? fedsia::RunConfig{} : fedsia::load_config(o.config_path);
  if (o.framework) config.fl.framework = fedsia::parse_framework(*o.framework);
  if (o.alpha) config.alpha = *o.alpha;
  if (o.epochs) {
    if (config.fl.framework == fedsia::Framework::kFedMd) {
      config.fl.revisit_epochs = *o.epochs;
    } else {
      config.fl.train.epochs = *o.epochs;
    }
  }
  if (o.seed) config.seeds = {*o.seed};
  if (o.threads) config.threads = *o.threads;
  if (o.format) config.format = fedsia::parse_report_format(*o.format);
  config.validate();
  return config;
}

void add_common(CLI::App* cmd, Overrides& o, bool with_run_flags) {
  cmd->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Result file")->required();
  cmd->add_option("--threads", o.threads, "Worker threads");
  cmd->add_option("--format", o.format, "csv or json");
  if (!with_run_flags) return;
  cmd->add_option("--framework", o.framework, "fedsgd, fedavg or fedmd");
  cmd->add_option("--alpha", o.alpha, "Dirichlet concentration");
  cmd->add_option("--epochs", o.epochs, "Local epochs (E2 for fedmd)");
  cmd->add_option("--seed", o.seed, "Run a single seed");
}

void write_outputs(const fedsia::RunConfig& config, const fedsia::SweepOutput& output,
                   const std::filesystem::path& out, double seconds,
                   const std::string& command) {
  fedsia::emit_results(output.aggregates, config.format, out);
  fedsia::emit_round_series(output.runs, out.string() + ".rounds.csv");
  fedsia::emit_run_metadata(out.string() + ".meta.json", fedsia::config_hash(config), seconds,
                            command);
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<double> parse_doubles(const std::string& list) {
  std::vector<double> out;
  for (const auto& item : CLI::detail::split(list, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw fedsia::ConfigError("bad number '" + item + "' in list '" + list + "'");
    }
  }
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& list) {
  std::vector<std::size_t> out;
  for (double v : parse_doubles(list)) {
    if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw fedsia::ConfigError("epoch counts must be positive integers: '" + list + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source inference attacks in federated learning"};
  app.set_version_flag("--version", std::string(fedsia::kVersion));
  app.require_subcommand(1);

  std::string command;
  for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);

  std::string gen_out;
  std::size_t gen_n = 10000;
  std::size_t gen_dim = 60;
  int gen_classes = 10;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  gen->add_option("--out", gen_out, "CSV path")->required();
  gen->add_option("--n", gen_n, "Record count");
  gen->add_option("--dim", gen_dim, "Feature count");
  gen->add_option("--classes", gen_classes, "Class count");
  gen->add_option("--seed", gen_seed, "Generator seed");

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "Run one configuration over its seeds");
  add_common(run, run_opts, true);

  Overrides sweep_opts;
  std::string alphas = "100,1,0.1";
  std::string epochs = "1,5,10";
  auto* sweep = app.add_subcommand("sweep", "Run the alpha x epoch grid");
  add_common(sweep, sweep_opts, false);
  sweep->add_option("--alphas", alphas, "Comma separated alpha grid");
  sweep->add_option("--epochs", epochs, "Comma separated local epoch grid");

  Overrides defense_opts;
  fedsia::DpParams dp;
  auto* defense = app.add_subcommand("defense", "Compare a run with and without DP-SGD");
  add_common(defense, defense_opts, true);
  defense->add_option("--clip", dp.clip_norm, "Per-example clipping norm");
  defense->add_option("--noise", dp.noise_multiplier, "Noise multiplier");
  defense->add_option("--delta", dp.delta, "Target delta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    if (*gen) {
      const auto data = fedsia::gen_synthetic(gen_n, gen_dim, gen_classes, gen_seed);
      fedsia::write_csv_dataset(data, gen_out);
    } else if (*run) {
      const auto config = resolve(run_opts);
      fedsia::SweepOutput output;
      output.runs = fedsia::run_experiment(config);
      output.aggregates.push_back(fedsia::aggregate_over_seeds(output.runs));
      write_outputs(config, output, run_opts.out, elapsed(start), command);
    } else if (*sweep) {
      const auto config = resolve(sweep_opts);
      const auto alpha_grid = parse_doubles(alphas);
      const auto epoch_grid = parse_counts(epochs);
      const auto output = fedsia::run_sweep(config, alpha_grid, epoch_grid);
      write_outputs(config, output, sweep_opts.out, elapsed(start), command);
    } else if (*defense) {
      auto config = resolve(defense_opts);
      config.dp = dp;
      config.validate();
      const auto output = fedsia::run_defense(config, dp);
      write_outputs(config, output, defense_opts.out, elapsed(start), command);
    }
  } catch (const fedsia::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
