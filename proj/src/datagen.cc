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

#include "fedsia/datagen.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include "fedsia/error.h"

namespace fedsia {

void Dataset::validate() const {
  if (labels.empty()) throw ArgumentError("Dataset: no records");
  if (features.rows() != labels.size()) {
    throw ArgumentError("Dataset: feature rows do not match label count");
  }
  for (int y : labels) {
    if (y < 0 || y >= class_count) {
      throw ArgumentError("Dataset: label " + std::to_string(y) +
                          " outside [0, " + std::to_string(class_count) + ")");
    }
  }
  if (!features.all_finite()) throw ArgumentError("Dataset: non-finite feature");
}

DatasetView::DatasetView(const Dataset& dataset, std::vector<std::size_t> indices)
    : dataset_(&dataset), indices_(std::move(indices)) {
  for (std::size_t i : indices_) {
    if (i >= dataset.size()) {
      throw ArgumentError("DatasetView: index " + std::to_string(i) +
                          " out of range");
    }
  }
}

DatasetView DatasetView::all(const Dataset& dataset) {
  std::vector<std::size_t> indices(dataset.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  return DatasetView(dataset, std::move(indices));
}

Dataset gen_synthetic(std::size_t n, std::size_t dim, int classes,
                      std::uint64_t seed) {
  if (classes < 2) throw ArgumentError("gen_synthetic: need at least 2 classes");
  if (dim < 1) throw ArgumentError("gen_synthetic: dimension must be >= 1");
  if (n < static_cast<std::size_t>(classes)) {
    throw ArgumentError("gen_synthetic: need at least as many records as classes");
  }
  RngStream rng(seed);
  const auto c = static_cast<std::size_t>(classes);
  DenseMatrix weights(c, dim);
  for (double& w : weights.values()) w = rng.normal();
  std::vector<double> bias(c);
  for (double& b : bias) b = rng.normal();

  std::vector<double> scale(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    scale[j] = std::pow(static_cast<double>(j + 1), -0.6);
  }

  Dataset data;
  data.class_count = classes;
  data.features = DenseMatrix(n, dim);
  data.labels.resize(n);
  std::vector<double> scores(c);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = data.features.row(i);
    for (std::size_t j = 0; j < dim; ++j) x[j] = rng.normal() * scale[j];
    for (std::size_t k = 0; k < c; ++k) {
      double s = bias[k];
      const auto w = weights.row(k);
      for (std::size_t j = 0; j < dim; ++j) s += w[j] * x[j];
      scores[k] = s;
    }
    // softmax is monotone, so the argmax of the scores is the argmax label
    data.labels[i] = static_cast<int>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
  }
  return data;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_csv_dataset(const std::filesystem::path& path,
                         const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open CSV file " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw FormatError(path.string() + ": empty file (missing header row)");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_fields(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw FormatError(path.string() + ": no label column '" + label_column + "'");
  }
  const std::size_t label_pos = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t dim = header.size() - 1;

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = path.string() + ": row " + std::to_string(row_number);
    if (fields.size() != header.size()) {
      throw FormatError(where + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const auto field = fields[f];
      const char* end = field.data() + field.size();
      if (f == label_pos) {
        int label = 0;
        const auto res = std::from_chars(field.data(), end, label);
        if (res.ec != std::errc() || res.ptr != end) {
          throw FormatError(where + ": label '" + std::string(field) +
                            "' is not an integer");
        }
        if (label < 0) throw FormatError(where + ": negative label");
        labels.push_back(label);
      } else {
        double v = 0.0;
        const auto res = std::from_chars(field.data(), end, v);
        if (field.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
          throw FormatError(where + ": column '" + std::string(header[f]) +
                            "' value '" + std::string(field) + "' is not a number");
        }
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw FormatError(path.string() + ": no data rows");
  Dataset data;
  data.features = DenseMatrix(labels.size(), dim, std::move(values));
  data.class_count = *std::max_element(labels.begin(), labels.end()) + 1;
  data.labels = std::move(labels);
  return data;
}

void write_csv_dataset(const Dataset& data, const std::filesystem::path& path,
                       const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << j << ',';
  out << label_column << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features.row(i)) out << format_double(v) << ',';
    out << data.labels[i] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Splitting and partitioning

SplitIndices split_indices(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ArgumentError("train_test_split: ratio must lie in (0, 1)");
  }
  const auto train_size =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio));
  if (train_size < 1) throw ArgumentError("train_test_split: empty training split");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_size), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::pair<DatasetView, DatasetView> train_test_split(const Dataset& data,
                                                     double ratio,
                                                     std::uint64_t seed) {
  auto split = split_indices(data.size(), ratio, seed);
  return {DatasetView(data, std::move(split.train)),
          DatasetView(data, std::move(split.test))};
}

std::vector<DatasetView> ClientPartition::views(const Dataset& data) const {
  std::vector<DatasetView> out;
  out.reserve(client_indices.size());
  for (const auto& indices : client_indices) out.emplace_back(data, indices);
  return out;
}

std::vector<double> sample_dirichlet(std::size_t k, double alpha, RngStream& rng) {
  if (k == 0) throw ArgumentError("sample_dirichlet: k must be positive");
  if (!(alpha > 0.0)) throw ArgumentError("sample_dirichlet: alpha must be positive");
  std::vector<double> p(k);
  double total = 0.0;
  while (!(total > 0.0)) {
    total = 0.0;
    for (double& v : p) {
      v = rng.gamma(alpha);
      total += v;
    }
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<std::size_t> largest_remainder_counts(
    std::span<const double> proportions, std::size_t total) {
  std::vector<std::size_t> counts(proportions.size());
  std::vector<double> remainder(proportions.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < proportions.size(); ++k) {
    const double quota = proportions[k] * static_cast<double>(total);
    counts[k] = static_cast<std::size_t>(std::floor(quota));
    remainder[k] = quota - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  // The floors sum to at most `total`; hand out what is left.
  std::vector<std::size_t> order(proportions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
    ++counts[order[i]];
    ++assigned;
  }
  return counts;
}

ClientPartition dirichlet_partition(const DatasetView& train, std::size_t clients,
                                    double alpha, std::uint64_t seed) {
  if (clients < 1) throw ArgumentError("dirichlet_partition: need at least one client");
  if (!(alpha > 0.0)) throw ArgumentError("dirichlet_partition: alpha must be positive");
  if (clients > train.size()) {
    throw ArgumentError("dirichlet_partition: " + std::to_string(clients) +
                        " clients for " + std::to_string(train.size()) + " records");
  }
  RngStream rng(seed);
  ClientPartition partition;
  partition.alpha = alpha;
  partition.client_indices.resize(clients);

  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(train.class_count()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    by_class[static_cast<std::size_t>(train.label(i))].push_back(train.index(i));
  }
  for (auto& members : by_class) {
    if (members.empty()) continue;
    rng.shuffle(std::span<std::size_t>(members));
    const auto proportions = sample_dirichlet(clients, alpha, rng);
    const auto counts = largest_remainder_counts(proportions, members.size());
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < clients; ++k) {
      auto& dest = partition.client_indices[k];
      dest.insert(dest.end(), members.begin() + static_cast<std::ptrdiff_t>(cursor),
                  members.begin() + static_cast<std::ptrdiff_t>(cursor + counts[k]));
      cursor += counts[k];
    }
  }

  auto& lists = partition.client_indices;
  for (std::size_t k = 0; k < clients; ++k) {
    if (!lists[k].empty()) continue;
    const auto donor = static_cast<std::size_t>(
        std::max_element(lists.begin(), lists.end(),
                         [](const auto& a, const auto& b) { return a.size() < b.size(); }) -
        lists.begin());
    lists[k].push_back(lists[donor].back());
    lists[donor].pop_back();
  }
  for (auto& list : lists) std::sort(list.begin(), list.end());
  return partition;
}

void check_partition(const ClientPartition& partition,
                     std::span<const std::size_t> universe) {
  std::vector<std::size_t> all;
  for (std::size_t k = 0; k < partition.client_count(); ++k) {
    const auto& list = partition.client_indices[k];
    if (list.empty()) {
      throw ArgumentError("partition: client " + std::to_string(k) + " is empty");
    }
    all.insert(all.end(), list.begin(), list.end());
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw ArgumentError("partition: client lists overlap");
  }
  std::vector<std::size_t> expected(universe.begin(), universe.end());
  std::sort(expected.begin(), expected.end());
  if (all != expected) {
    throw ArgumentError("partition: lists do not cover the training records exactly");
  }
}

TargetSet sample_targets(const ClientPartition& partition, const Dataset& data,
                         std::size_t per_client, std::uint64_t seed) {
  for (std::size_t k = 0; k < partition.client_count(); ++k) {
    if (partition.client_indices[k].size() < per_client) {
      throw ArgumentError("sample_targets: client " + std::to_string(k) + " holds " +
                          std::to_string(partition.client_indices[k].size()) +
                          " records, fewer than " + std::to_string(per_client));
    }
  }
  RngStream rng(seed);
  TargetSet targets;
  const std::size_t total = per_client * partition.client_count();
  targets.features = DenseMatrix(total, data.dim());
  std::size_t row = 0;
  for (std::size_t k = 0; k < partition.client_count(); ++k) {
    std::vector<std::size_t> pool = partition.client_indices[k];
    // partial Fisher-Yates: the first per_client slots become the sample
    for (std::size_t i = 0; i < per_client; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      const std::size_t index = pool[i];
      const auto x = data.features.row(index);
      std::copy(x.begin(), x.end(), targets.features.row(row).begin());
      targets.labels.push_back(data.labels[index]);
      targets.true_source.push_back(static_cast<int>(k));
      targets.dataset_index.push_back(index);
      ++row;
    }
  }
  return targets;
}

}  // namespace fedsia
