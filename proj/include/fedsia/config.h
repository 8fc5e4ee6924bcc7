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

#ifndef FEDSIA_CONFIG_H_
#define FEDSIA_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedsia/attack.h"
#include "fedsia/dp.h"
#include "fedsia/protocols.h"
#include "fedsia/report.h"

namespace fedsia {

struct DatasetSpec {
  std::string kind = "synthetic";  // "synthetic" or "csv"
  std::size_t n = 10000;
  std::size_t dim = 60;
  int classes = 10;
  std::uint64_t seed = 1;
  std::string path;                 // csv only
  std::string label_column = "label";
  std::string name;                 // report label; defaults to kind or file stem

  std::string display_name() const;
};

struct FedMdSpec {
  std::size_t public_size = 1000;
  std::size_t pretrain_epochs = 5;
  std::vector<std::size_t> hidden_widths = {128, 200, 256};
};

struct AttackSpec {
  std::size_t targets_per_client = 100;
  std::optional<double> prior;  // defaults to 1 / K
  double temperature = 1.0;
  InferenceMethod method = InferenceMethod::kArgmin;
  StudentSpec student;
};

struct RunConfig {
  DatasetSpec dataset;
  double train_ratio = 0.8;
  double alpha = 1.0;
  std::size_t partition_attempts = 1000;
  std::vector<std::size_t> hidden = {200};
  FlConfig fl;
  FedMdSpec fedmd;
  AttackSpec attack;
  std::optional<DpParams> dp;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  int threads = 1;
  ReportFormat format = ReportFormat::kCsv;

  // Throws ConfigError naming the offending field.
  void validate() const;
  double prior() const;
  // Local epochs as reported: E for FedAvg, E2 for FedMD, 1 for FedSGD.
  std::size_t reported_local_epochs() const;
};

// Missing keys take the defaults above; unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& config);

// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace fedsia

#endif  // FEDSIA_CONFIG_H_
