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

#include "fedsia/config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

#include "fedsia/error.h"

namespace fedsia {

using nlohmann::json;
using nlohmann::ordered_json;

std::string DatasetSpec::display_name() const {
  if (!name.empty()) return name;
  if (kind == "csv") return std::filesystem::path(path).stem().string();
  return kind;
}

double RunConfig::prior() const {
  return attack.prior ? *attack.prior : 1.0 / static_cast<double>(fl.clients);
}

std::size_t RunConfig::reported_local_epochs() const {
  switch (fl.framework) {
    case Framework::kFedSgd:
      return 1;
    case Framework::kFedAvg:
      return fl.train.epochs;
    case Framework::kFedMd:
      return fl.revisit_epochs;
  }
  return 0;
}

void RunConfig::validate() const {
  if (dataset.kind == "synthetic") {
    if (dataset.classes < 2) throw ConfigError("dataset.classes must be >= 2");
    if (dataset.dim < 1) throw ConfigError("dataset.dim must be >= 1");
    if (dataset.n < static_cast<std::size_t>(dataset.classes)) {
      throw ConfigError("dataset.n must be >= dataset.classes");
    }
  } else if (dataset.kind == "csv") {
    if (dataset.path.empty()) throw ConfigError("dataset.path is required for csv datasets");
    if (dataset.label_column.empty()) throw ConfigError("dataset.label_column is empty");
  } else {
    throw ConfigError("dataset.kind must be 'synthetic' or 'csv'");
  }
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw ConfigError("split.train_ratio must lie in (0, 1)");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("partition.alpha must be > 0");
  if (partition_attempts < 1) throw ConfigError("partition.max_attempts must be >= 1");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("model.hidden widths must be positive");
  }
  fl.validate();
  if (fl.framework == Framework::kFedMd) {
    if (fedmd.public_size < 1) throw ConfigError("fedmd.public_size must be >= 1");
    if (fedmd.hidden_widths.empty()) throw ConfigError("fedmd.hidden_widths is empty");
    for (std::size_t h : fedmd.hidden_widths) {
      if (h == 0) throw ConfigError("fedmd.hidden_widths must be positive");
    }
  }
  if (attack.targets_per_client < 1) throw ConfigError("attack.targets_per_client must be >= 1");
  if (attack.prior && !(*attack.prior > 0.0 && *attack.prior < 1.0)) {
    throw ConfigError("attack.prior must lie in (0, 1)");
  }
  if (!(attack.temperature > 0.0) || !std::isfinite(attack.temperature)) {
    throw ConfigError("attack.temperature must be > 0");
  }
  if (attack.method == InferenceMethod::kPosterior && fl.clients < 2) {
    throw ConfigError("attack.method 'posterior' needs at least 2 clients");
  }
  if (attack.method == InferenceMethod::kRandomGuess) {
    throw ConfigError("attack.method must be 'argmin' or 'posterior'");
  }
  if (attack.student.batch_size < 1 || !(attack.student.learning_rate > 0.0)) {
    throw ConfigError("attack.student needs batch_size >= 1 and learning_rate > 0");
  }
  if (dp) {
    try {
      dp->validate();
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("dp: ") + e.what());
    }
    if (!(dp->noise_multiplier > 0.0)) {
      throw ConfigError("dp.noise must be > 0 (zero noise has no finite privacy budget)");
    }
  }
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

namespace {

void check_keys(const json& section, const char* where,
                std::initializer_list<const char*> allowed) {
  if (!section.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& item : section.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) throw ConfigError(std::string("unknown key '") + where + "." + item.key() + "'");
  }
}

template <typename T>
void read(const json& section, const char* key, T& out, const char* where) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " has the wrong type");
  }
}

const char* method_name(InferenceMethod method) {
  return method == InferenceMethod::kPosterior ? "posterior" : "argmin";
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig c;
  check_keys(doc, "config",
             {"dataset", "split", "partition", "model", "fl", "fedmd", "attack", "dp",
              "seeds", "threads", "output"});
  if (doc.contains("dataset")) {
    const auto& d = doc["dataset"];
    check_keys(d, "dataset",
               {"kind", "n", "dim", "classes", "seed", "path", "label_column", "name"});
    read(d, "kind", c.dataset.kind, "dataset");
    read(d, "n", c.dataset.n, "dataset");
    read(d, "dim", c.dataset.dim, "dataset");
    read(d, "classes", c.dataset.classes, "dataset");
    read(d, "seed", c.dataset.seed, "dataset");
    read(d, "path", c.dataset.path, "dataset");
    read(d, "label_column", c.dataset.label_column, "dataset");
    read(d, "name", c.dataset.name, "dataset");
  }
  if (doc.contains("split")) {
    check_keys(doc["split"], "split", {"train_ratio"});
    read(doc["split"], "train_ratio", c.train_ratio, "split");
  }
  if (doc.contains("partition")) {
    check_keys(doc["partition"], "partition", {"alpha", "max_attempts"});
    read(doc["partition"], "alpha", c.alpha, "partition");
    read(doc["partition"], "max_attempts", c.partition_attempts, "partition");
  }
  if (doc.contains("model")) {
    check_keys(doc["model"], "model", {"hidden"});
    read(doc["model"], "hidden", c.hidden, "model");
  }
  if (doc.contains("fl")) {
    const auto& f = doc["fl"];
    check_keys(f, "fl",
               {"framework", "clients", "rounds", "learning_rate", "batch_size",
                "local_epochs", "digest_epochs", "revisit_epochs"});
    std::string framework(to_string(c.fl.framework));
    read(f, "framework", framework, "fl");
    c.fl.framework = parse_framework(framework);
    read(f, "clients", c.fl.clients, "fl");
    read(f, "rounds", c.fl.rounds, "fl");
    read(f, "learning_rate", c.fl.train.learning_rate, "fl");
    read(f, "batch_size", c.fl.train.batch_size, "fl");
    read(f, "local_epochs", c.fl.train.epochs, "fl");
    read(f, "digest_epochs", c.fl.digest_epochs, "fl");
    read(f, "revisit_epochs", c.fl.revisit_epochs, "fl");
  }
  if (doc.contains("fedmd")) {
    const auto& m = doc["fedmd"];
    check_keys(m, "fedmd", {"public_size", "pretrain_epochs", "hidden_widths"});
    read(m, "public_size", c.fedmd.public_size, "fedmd");
    read(m, "pretrain_epochs", c.fedmd.pretrain_epochs, "fedmd");
    read(m, "hidden_widths", c.fedmd.hidden_widths, "fedmd");
  }
  if (doc.contains("attack")) {
    const auto& a = doc["attack"];
    check_keys(a, "attack", {"targets_per_client", "prior", "temperature", "method", "student"});
    read(a, "targets_per_client", c.attack.targets_per_client, "attack");
    if (a.contains("prior") && !a["prior"].is_null()) {
      double prior = 0.0;
      read(a, "prior", prior, "attack");
      c.attack.prior = prior;
    }
    read(a, "temperature", c.attack.temperature, "attack");
    if (a.contains("method")) {
      std::string method;
      read(a, "method", method, "attack");
      if (method == "argmin") {
        c.attack.method = InferenceMethod::kArgmin;
      } else if (method == "posterior") {
        c.attack.method = InferenceMethod::kPosterior;
      } else {
        throw ConfigError("attack.method must be 'argmin' or 'posterior'");
      }
    }
    if (a.contains("student")) {
      const auto& s = a["student"];
      check_keys(s, "attack.student", {"hidden", "epochs", "batch_size", "learning_rate"});
      read(s, "hidden", c.attack.student.hidden, "attack.student");
      read(s, "epochs", c.attack.student.epochs, "attack.student");
      read(s, "batch_size", c.attack.student.batch_size, "attack.student");
      read(s, "learning_rate", c.attack.student.learning_rate, "attack.student");
    }
  }
  if (doc.contains("dp") && !doc["dp"].is_null()) {
    const auto& p = doc["dp"];
    check_keys(p, "dp", {"clip", "noise", "delta"});
    DpParams dp;
    read(p, "clip", dp.clip_norm, "dp");
    read(p, "noise", dp.noise_multiplier, "dp");
    read(p, "delta", dp.delta, "dp");
    c.dp = dp;
  }
  read(doc, "seeds", c.seeds, "config");
  read(doc, "threads", c.threads, "config");
  if (doc.contains("output")) {
    check_keys(doc["output"], "output", {"format"});
    std::string format = "csv";
    read(doc["output"], "format", format, "output");
    c.format = parse_report_format(format);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["dataset"] = {{"kind", c.dataset.kind},         {"n", c.dataset.n},
                  {"dim", c.dataset.dim},           {"classes", c.dataset.classes},
                  {"seed", c.dataset.seed},         {"path", c.dataset.path},
                  {"label_column", c.dataset.label_column}, {"name", c.dataset.name}};
  j["split"] = {{"train_ratio", c.train_ratio}};
  j["partition"] = {{"alpha", c.alpha}, {"max_attempts", c.partition_attempts}};
  j["model"] = {{"hidden", c.hidden}};
  j["fl"] = {{"framework", std::string(to_string(c.fl.framework))},
             {"clients", c.fl.clients},
             {"rounds", c.fl.rounds},
             {"learning_rate", c.fl.train.learning_rate},
             {"batch_size", c.fl.train.batch_size},
             {"local_epochs", c.fl.train.epochs},
             {"digest_epochs", c.fl.digest_epochs},
             {"revisit_epochs", c.fl.revisit_epochs}};
  j["fedmd"] = {{"public_size", c.fedmd.public_size},
                {"pretrain_epochs", c.fedmd.pretrain_epochs},
                {"hidden_widths", c.fedmd.hidden_widths}};
  ordered_json attack;
  attack["targets_per_client"] = c.attack.targets_per_client;
  attack["prior"] = c.attack.prior ? ordered_json(*c.attack.prior) : ordered_json();
  attack["temperature"] = c.attack.temperature;
  attack["method"] = method_name(c.attack.method);
  attack["student"] = {{"hidden", c.attack.student.hidden},
                       {"epochs", c.attack.student.epochs},
                       {"batch_size", c.attack.student.batch_size},
                       {"learning_rate", c.attack.student.learning_rate}};
  j["attack"] = attack;
  if (c.dp) {
    j["dp"] = {{"clip", c.dp->clip_norm}, {"noise", c.dp->noise_multiplier}, {"delta", c.dp->delta}};
  } else {
    j["dp"] = nullptr;
  }
  j["seeds"] = c.seeds;
  j["threads"] = c.threads;
  j["output"] = {{"format", c.format == ReportFormat::kJson ? "json" : "csv"}};
  return j;
}

std::string config_hash(const RunConfig& config) {
  ordered_json j = to_json(config);
  j.erase("threads");  // results do not depend on the thread count
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fedsia
