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

// Eigen-backed batch kernels shared by the training loops in nn.cc and dp.cc.

#ifndef FEDSIA_SRC_NN_INTERNAL_H_
#define FEDSIA_SRC_NN_INTERNAL_H_

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "fedsia/nn.h"

namespace fedsia::internal {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

inline ConstMatrixMap as_eigen(const DenseMatrix& m) {
  return ConstMatrixMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                        static_cast<Eigen::Index>(m.cols()));
}

struct BatchActivations {
  // inputs[l] is the input to layer l; inputs[0] is the batch itself.
  std::vector<RowMatrix> inputs;
  RowMatrix logits;
};

BatchActivations forward_batch(const MlpModel& model, const RowMatrix& x);

// `delta` is the gradient of the objective with respect to the logits.
Gradients backward_batch(const MlpModel& model, const BatchActivations& acts,
                         RowMatrix delta);

// Squared L2 norm of each row's own parameter gradient, given unscaled
// per-row logit gradients.
std::vector<double> per_example_squared_norms(const MlpModel& model,
                                              const BatchActivations& acts,
                                              RowMatrix delta);

RowMatrix softmax_rows(const RowMatrix& logits);

// Cross-entropy logit gradient (p - onehot) with row i scaled by scales[i].
RowMatrix cross_entropy_delta(const RowMatrix& probs,
                              std::span<const int> labels,
                              std::span<const double> scales);

RowMatrix gather_rows(const DatasetView& view,
                      std::span<const std::size_t> positions);

// Batches of positions [0, n) for one epoch, each sorted ascending.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    RngStream& rng);

void check_finite(const MlpModel& model, const char* where);

}  // namespace fedsia::internal

#endif  // FEDSIA_SRC_NN_INTERNAL_H_
