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

#ifndef FEDSIA_REPORT_H_
#define FEDSIA_REPORT_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedsia/metrics.h"

namespace fedsia {

enum class ReportFormat { kCsv, kJson };

ReportFormat parse_report_format(std::string_view name);

// Column order of the aggregate report.
inline constexpr std::string_view kResultColumns =
    "framework,dataset,alpha,local_epochs,clients,rounds,seed_count,asr_mean,"
    "asr_std,max_round,gen_err_mean,train_acc_mean,test_acc_mean,dp_enabled,"
    "dp_epsilon";

// One flattened row of the aggregate report.
struct ResultRow {
  std::string framework;
  std::string dataset;
  double alpha = 0.0;
  std::size_t local_epochs = 0;
  std::size_t clients = 0;
  std::size_t rounds = 0;
  std::size_t seed_count = 0;
  double asr_mean = 0.0;
  double asr_std = 0.0;
  std::size_t max_round = 0;
  double gen_err_mean = 0.0;
  double train_acc_mean = 0.0;
  double test_acc_mean = 0.0;
  bool dp_enabled = false;
  std::optional<double> dp_epsilon;  // empty cell / null when DP is off
};

ResultRow to_row(const SeedAggregate& aggregate);

// Rows sorted by (framework, alpha descending, local_epochs, dp_enabled).
std::vector<ResultRow> sorted_rows(std::span<const SeedAggregate> aggregates);

// Deterministic rendering: no timestamps, shortest round-trip doubles.
std::string render_results(std::span<const SeedAggregate> aggregates, ReportFormat format);
void emit_results(std::span<const SeedAggregate> aggregates, ReportFormat format,
                  const std::filesystem::path& path);

std::vector<ResultRow> parse_results_csv(const std::filesystem::path& path);
std::vector<ResultRow> parse_results_json(const std::filesystem::path& path);

// Per-seed, per-round series: seed,round,asr,epsilon.
void emit_round_series(std::span<const ExperimentResult> results,
                       const std::filesystem::path& path);

// Sidecar run metadata (tool version, wall time, config hash). Kept out of
// the data files so those stay byte-reproducible.
void emit_run_metadata(const std::filesystem::path& path, std::string_view config_hash,
                       double wall_seconds, std::string_view command);

std::string format_double(double value);

}  // namespace fedsia

#endif  // FEDSIA_REPORT_H_
