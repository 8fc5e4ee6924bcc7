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

#ifndef FEDSIA_NN_H_
#define FEDSIA_NN_H_

#include <cstddef>
#include <span>
#include <vector>

#include "fedsia/dataset.h"
#include "fedsia/matrix.h"
#include "fedsia/rng.h"

namespace fedsia {

struct DenseLayer {
  DenseMatrix weights;  // [out x in]
  std::vector<double> bias;  // [out]

  std::size_t in() const { return weights.cols(); }
  std::size_t out() const { return weights.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Feed-forward network: dense layers with ReLU between them and raw logits at
// the output. Softmax is applied inside the losses.
class MlpModel {
 public:
  MlpModel() = default;
  // Throws ShapeError if adjacent layer widths do not chain.
  explicit MlpModel(std::vector<DenseLayer> layers);

  // widths = {input, hidden..., classes}. Weights are drawn uniformly from
  // [-sqrt(6/(in+out)), +sqrt(6/(in+out))]; biases start at zero.
  static MlpModel initialize(std::span<const std::size_t> widths,
                             RngStream& rng);
  static MlpModel zeros(std::span<const std::size_t> widths);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  std::size_t input_width() const;
  std::size_t class_count() const;
  std::size_t parameter_count() const;
  std::vector<std::size_t> widths() const;
  bool all_finite() const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

// Gradient of a scalar objective with respect to every model parameter.
struct Gradients {
  std::vector<DenseLayer> layers;

  static Gradients zeros_like(const MlpModel& model);
  double squared_norm() const;
  bool all_finite() const;
  void scale(double factor);

  friend bool operator==(const Gradients&, const Gradients&) = default;
};

bool congruent(const MlpModel& model, const Gradients& grads);

// model <- model - learning_rate * grads, coordinate by coordinate.
void apply_step(MlpModel& model, const Gradients& grads, double learning_rate);

struct TrainSpec {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;

  void validate() const;
};

// Contiguous copy of some records, in the order given.
struct LabeledBatch {
  DenseMatrix features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

LabeledBatch gather(const DatasetView& view);
LabeledBatch gather(const DatasetView& view,
                    std::span<const std::size_t> positions);

struct ForwardResult {
  std::vector<double> logits;
  double loss = 0.0;
};

// Softmax cross-entropy of a single record.
ForwardResult forward_and_loss(const MlpModel& model,
                               std::span<const double> x, int label);
std::vector<double> forward_logits(const MlpModel& model,
                                   std::span<const double> x);

// Gradient of the mean cross-entropy over the batch.
Gradients backprop_grads(const MlpModel& model, const LabeledBatch& batch);
Gradients backprop_grads(const MlpModel& model, const DatasetView& data);

// E epochs of shuffled mini-batch SGD. One permutation per epoch; the last
// short batch is kept. Records inside a batch are visited in ascending
// position so that a single full batch reproduces backprop_grads exactly.
MlpModel sgd_train_local(const MlpModel& model, const DatasetView& data,
                         const TrainSpec& spec, RngStream& rng);

// Fraction of records whose argmax logit (lowest index on ties) matches the
// label.
double eval_accuracy(const MlpModel& model, const DatasetView& data);
double mean_loss(const MlpModel& model, const DatasetView& data);

// Row-wise softmax probabilities for every row of `features`.
DenseMatrix predict_proba(const MlpModel& model, const DenseMatrix& features);

// Mini-batch SGD on the squared distance between softmax outputs and
// soft-target rows. Same batching rules as sgd_train_local.
MlpModel sgd_train_distill(const MlpModel& model, const DenseMatrix& features,
                           const DenseMatrix& soft_targets,
                           const TrainSpec& spec, RngStream& rng);

// Mean over rows of (1/C) * sum_c (p_c - t_c)^2.
double distill_mse(const MlpModel& model, const DenseMatrix& features,
                   const DenseMatrix& soft_targets);

// Index of the largest value; lowest index on ties.
std::size_t argmax(std::span<const double> values);

}  // namespace fedsia

#endif  // FEDSIA_NN_H_
