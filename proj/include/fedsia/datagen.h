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

#ifndef FEDSIA_DATAGEN_H_
#define FEDSIA_DATAGEN_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedsia/dataset.h"
#include "fedsia/rng.h"

namespace fedsia {

// IID synthetic classification data. Coordinate j (1-based) of every record is
// drawn from N(0, j^-1.2); labels are argmax(W x + b) for a single global W
// [C x d] and b [C] drawn standard normal. Draw order: W row-major, then b,
// then records row by row.
Dataset gen_synthetic(std::size_t n, std::size_t dim, int classes,
                      std::uint64_t seed);

// Reads a header-first comma-separated file. Every column except
// `label_column` is a feature, in header order.
Dataset load_csv_dataset(const std::filesystem::path& path,
                         const std::string& label_column);
void write_csv_dataset(const Dataset& data, const std::filesystem::path& path,
                       const std::string& label_column = "label");

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// Random split of [0, n): floor(n * ratio) train records, the rest test.
SplitIndices split_indices(std::size_t n, double ratio, std::uint64_t seed);
std::pair<DatasetView, DatasetView> train_test_split(const Dataset& data,
                                                     double ratio,
                                                     std::uint64_t seed);

// Disjoint per-client index lists into a Dataset, each sorted ascending.
struct ClientPartition {
  std::vector<std::vector<std::size_t>> client_indices;
  double alpha = 0.0;

  std::size_t client_count() const { return client_indices.size(); }
  std::vector<DatasetView> views(const Dataset& data) const;
};

std::vector<double> sample_dirichlet(std::size_t k, double alpha,
                                     RngStream& rng);

// Integer counts summing to `total`, proportional to `proportions`. Leftover
// units go to the largest fractional parts, lowest index first on ties.
std::vector<std::size_t> largest_remainder_counts(
    std::span<const double> proportions, std::size_t total);

// For each class in ascending order: shuffle its records, draw Dirichlet(alpha)
// proportions over the clients, and hand out consecutive chunks sized by
// largest-remainder rounding. Clients left empty then receive one record from
// the currently largest client. Indices are those of `train` in its dataset.
ClientPartition dirichlet_partition(const DatasetView& train, std::size_t clients,
                                    double alpha, std::uint64_t seed);

// Throws ArgumentError unless the lists are disjoint, nonempty and cover
// `universe` exactly.
void check_partition(const ClientPartition& partition,
                     std::span<const std::size_t> universe);

// Known training records whose source the attacker tries to recover.
struct TargetSet {
  DenseMatrix features;               // [M x d]
  std::vector<int> labels;            // [M]
  std::vector<int> true_source;       // [M], client index
  std::vector<std::size_t> dataset_index;  // [M]

  std::size_t size() const { return labels.size(); }
};

// per_client records from each client, uniformly without replacement.
TargetSet sample_targets(const ClientPartition& partition, const Dataset& data,
                         std::size_t per_client, std::uint64_t seed);

}  // namespace fedsia

#endif  // FEDSIA_DATAGEN_H_
