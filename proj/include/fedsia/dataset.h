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

#ifndef FEDSIA_DATASET_H_
#define FEDSIA_DATASET_H_

#include <cstddef>
#include <span>
#include <vector>

#include "fedsia/matrix.h"

namespace fedsia {

// Feature matrix [n x d] with integer labels in [0, class_count).
struct Dataset {
  DenseMatrix features;
  std::vector<int> labels;
  int class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  // Throws ArgumentError when the invariants above do not hold.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// A subset of a Dataset's records, addressed by index. The view does not own
// the dataset, which must outlive it.
class DatasetView {
 public:
  DatasetView() = default;
  DatasetView(const Dataset& dataset, std::vector<std::size_t> indices);

  static DatasetView all(const Dataset& dataset);

  const Dataset& dataset() const { return *dataset_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::size_t dim() const { return dataset_->dim(); }
  int class_count() const { return dataset_->class_count; }

  std::size_t index(std::size_t i) const { return indices_[i]; }
  std::span<const std::size_t> indices() const { return indices_; }
  std::span<const double> feature(std::size_t i) const {
    return dataset_->features.row(indices_[i]);
  }
  int label(std::size_t i) const { return dataset_->labels[indices_[i]]; }

 private:
  const Dataset* dataset_ = nullptr;
  std::vector<std::size_t> indices_;
};

}  // namespace fedsia

#endif  // FEDSIA_DATASET_H_
