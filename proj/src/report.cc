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

#include "fedsia/report.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fedsia/error.h"
#include "fedsia/version.h"

namespace fedsia {

using nlohmann::json;

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw ConfigError("unknown output format '" + std::string(name) + "' (expected csv or json)");
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

ResultRow to_row(const SeedAggregate& aggregate) {
  ResultRow row;
  row.framework = aggregate.config.framework;
  row.dataset = aggregate.config.dataset;
  row.alpha = aggregate.config.alpha;
  row.local_epochs = aggregate.config.local_epochs;
  row.clients = aggregate.config.clients;
  row.rounds = aggregate.config.rounds;
  row.seed_count = aggregate.seeds.size();
  row.asr_mean = aggregate.asr.mean;
  row.asr_std = aggregate.asr.stddev;
  row.max_round = aggregate.max_round;
  row.gen_err_mean = aggregate.gen_err.mean;
  row.train_acc_mean = aggregate.train_acc.mean;
  row.test_acc_mean = aggregate.test_acc.mean;
  row.dp_enabled = aggregate.config.dp_enabled;
  row.dp_epsilon = aggregate.dp_epsilon;
  return row;
}

std::vector<ResultRow> sorted_rows(std::span<const SeedAggregate> aggregates) {
  std::vector<ResultRow> rows;
  rows.reserve(aggregates.size());
  for (const auto& a : aggregates) rows.push_back(to_row(a));
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.framework != b.framework) return a.framework < b.framework;
    if (a.alpha != b.alpha) return a.alpha > b.alpha;
    if (a.local_epochs != b.local_epochs) return a.local_epochs < b.local_epochs;
    return a.dp_enabled < b.dp_enabled;
  });
  return rows;
}

namespace {

// ordered_json keeps the column order of the CSV.
nlohmann::ordered_json row_to_ordered_json(const ResultRow& r) {
  nlohmann::ordered_json j;
  j["framework"] = r.framework;
  j["dataset"] = r.dataset;
  j["alpha"] = r.alpha;
  j["local_epochs"] = r.local_epochs;
  j["clients"] = r.clients;
  j["rounds"] = r.rounds;
  j["seed_count"] = r.seed_count;
  j["asr_mean"] = r.asr_mean;
  j["asr_std"] = r.asr_std;
  j["max_round"] = r.max_round;
  j["gen_err_mean"] = r.gen_err_mean;
  j["train_acc_mean"] = r.train_acc_mean;
  j["test_acc_mean"] = r.test_acc_mean;
  j["dp_enabled"] = r.dp_enabled;
  j["dp_epsilon"] = r.dp_epsilon ? nlohmann::ordered_json(*r.dp_epsilon) : nlohmann::ordered_json();
  return j;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.back() == '\r' || s.back() == ' ')) {
    if (s.front() == ' ') s.remove_prefix(1);
    else s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.emplace_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError(where + ": '" + text + "' is not a number");
  }
  return value;
}

}  // namespace

std::string render_results(std::span<const SeedAggregate> aggregates, ReportFormat format) {
  const auto rows = sorted_rows(aggregates);
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << kResultColumns << '\n';
    for (const auto& r : rows) {
      out << r.framework << ',' << r.dataset << ',' << format_double(r.alpha) << ','
          << r.local_epochs << ',' << r.clients << ',' << r.rounds << ',' << r.seed_count
          << ',' << format_double(r.asr_mean) << ',' << format_double(r.asr_std) << ','
          << r.max_round << ',' << format_double(r.gen_err_mean) << ','
          << format_double(r.train_acc_mean) << ',' << format_double(r.test_acc_mean) << ','
          << (r.dp_enabled ? "true" : "false") << ','
          << (r.dp_epsilon ? format_double(*r.dp_epsilon) : std::string()) << '\n';
    }
  } else {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : rows) doc.push_back(row_to_ordered_json(r));
    out << doc.dump(2) << '\n';
  }
  return out.str();
}

void emit_results(std::span<const SeedAggregate> aggregates, ReportFormat format,
                  const std::filesystem::path& path) {
  const std::string text = render_results(aggregates, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<ResultRow> parse_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultColumns) {
    throw FormatError(path.string() + ": unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    const std::string where = path.string() + ": row " + std::to_string(row_number);
    if (f.size() != 15) throw FormatError(where + ": expected 15 fields");
    ResultRow r;
    r.framework = f[0];
    r.dataset = f[1];
    r.alpha = parse_number<double>(f[2], where);
    r.local_epochs = parse_number<std::size_t>(f[3], where);
    r.clients = parse_number<std::size_t>(f[4], where);
    r.rounds = parse_number<std::size_t>(f[5], where);
    r.seed_count = parse_number<std::size_t>(f[6], where);
    r.asr_mean = parse_number<double>(f[7], where);
    r.asr_std = parse_number<double>(f[8], where);
    r.max_round = parse_number<std::size_t>(f[9], where);
    r.gen_err_mean = parse_number<double>(f[10], where);
    r.train_acc_mean = parse_number<double>(f[11], where);
    r.test_acc_mean = parse_number<double>(f[12], where);
    if (f[13] != "true" && f[13] != "false") throw FormatError(where + ": bad dp_enabled");
    r.dp_enabled = f[13] == "true";
    if (!f[14].empty()) r.dp_epsilon = parse_number<double>(f[14], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> parse_results_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::vector<ResultRow> rows;
  try {
    for (const auto& j : doc) {
      ResultRow r;
      r.framework = j.at("framework").get<std::string>();
      r.dataset = j.at("dataset").get<std::string>();
      r.alpha = j.at("alpha").get<double>();
      r.local_epochs = j.at("local_epochs").get<std::size_t>();
      r.clients = j.at("clients").get<std::size_t>();
      r.rounds = j.at("rounds").get<std::size_t>();
      r.seed_count = j.at("seed_count").get<std::size_t>();
      r.asr_mean = j.at("asr_mean").get<double>();
      r.asr_std = j.at("asr_std").get<double>();
      r.max_round = j.at("max_round").get<std::size_t>();
      r.gen_err_mean = j.at("gen_err_mean").get<double>();
      r.train_acc_mean = j.at("train_acc_mean").get<double>();
      r.test_acc_mean = j.at("test_acc_mean").get<double>();
      r.dp_enabled = j.at("dp_enabled").get<bool>();
      if (!j.at("dp_epsilon").is_null()) r.dp_epsilon = j.at("dp_epsilon").get<double>();
      rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return rows;
}

void emit_round_series(std::span<const ExperimentResult> results,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "framework,alpha,local_epochs,dp_enabled,seed,round,asr,dp_epsilon\n";
  for (const auto& r : results) {
    for (std::size_t t = 0; t < r.round_asr.size(); ++t) {
      out << r.config.framework << ',' << format_double(r.config.alpha) << ','
          << r.config.local_epochs << ',' << (r.config.dp_enabled ? "true" : "false") << ','
          << r.seed << ',' << t + 1 << ',' << format_double(r.round_asr[t]) << ','
          << (t < r.round_epsilon.size() ? format_double(r.round_epsilon[t]) : std::string())
          << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void emit_run_metadata(const std::filesystem::path& path, std::string_view config_hash,
                       double wall_seconds, std::string_view command) {
  nlohmann::ordered_json j;
  j["tool"] = "fedsia";
  j["version"] = kVersion;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["wall_seconds"] = wall_seconds;
  j["privacy_accounting"] = "zCDP composition without subsampling (upper bound)";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace fedsia
