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

#include "fedsia/nn.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedsia/error.h"
#include "nn_internal.h"

namespace fedsia {
namespace internal {
namespace {

DenseMatrix to_dense(const RowMatrix& m) {
  return DenseMatrix(static_cast<std::size_t>(m.rows()),
                     static_cast<std::size_t>(m.cols()),
                     std::vector<double>(m.data(), m.data() + m.size()));
}

}  // namespace

BatchActivations forward_batch(const MlpModel& model, const RowMatrix& x) {
  const auto& layers = model.layers();
  if (static_cast<std::size_t>(x.cols()) != model.input_width()) {
    throw ShapeError("forward_batch: input width " + std::to_string(x.cols()) +
                     " != model input width " +
                     std::to_string(model.input_width()));
  }
  BatchActivations acts;
  acts.inputs.reserve(layers.size());
  acts.inputs.push_back(x);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    RowMatrix z = acts.inputs.back() * as_eigen(layers[l].weights).transpose();
    z.rowwise() += ConstVectorMap(layers[l].bias.data(),
                                  static_cast<Eigen::Index>(layers[l].out()))
                       .transpose();
    if (l + 1 < layers.size()) {
      acts.inputs.push_back(z.cwiseMax(0.0));
    } else {
      acts.logits = std::move(z);
    }
  }
  return acts;
}

Gradients backward_batch(const MlpModel& model, const BatchActivations& acts,
                         RowMatrix delta) {
  const auto& layers = model.layers();
  Gradients grads;
  grads.layers.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const RowMatrix dw = delta.transpose() * acts.inputs[l];
    const Eigen::VectorXd db = delta.colwise().sum().transpose();
    grads.layers[l].weights = to_dense(dw);
    grads.layers[l].bias.assign(db.data(), db.data() + db.size());
    if (l > 0) {
      RowMatrix prev = delta * as_eigen(layers[l].weights);
      prev.array() *= (acts.inputs[l].array() > 0.0).cast<double>();
      delta = std::move(prev);
    }
  }
  return grads;
}

std::vector<double> per_example_squared_norms(const MlpModel& model,
                                              const BatchActivations& acts,
                                              RowMatrix delta) {
  const auto& layers = model.layers();
  std::vector<double> norms(static_cast<std::size_t>(delta.rows()), 0.0);
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Eigen::VectorXd delta_sq = delta.rowwise().squaredNorm();
    const Eigen::VectorXd input_sq = acts.inputs[l].rowwise().squaredNorm();
    for (std::size_t i = 0; i < norms.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      norms[i] += delta_sq(r) * (input_sq(r) + 1.0);
    }
    if (l > 0) {
      RowMatrix prev = delta * as_eigen(layers[l].weights);
      prev.array() *= (acts.inputs[l].array() > 0.0).cast<double>();
      delta = std::move(prev);
    }
  }
  return norms;
}

RowMatrix softmax_rows(const RowMatrix& logits) {
  RowMatrix probs(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    probs.row(r) = (logits.row(r).array() - top).exp().matrix();
    probs.row(r) /= probs.row(r).sum();
  }
  return probs;
}

RowMatrix cross_entropy_delta(const RowMatrix& probs,
                              std::span<const int> labels,
                              std::span<const double> scales) {
  RowMatrix delta = probs;
  for (Eigen::Index r = 0; r < delta.rows(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    delta(r, labels[i]) -= 1.0;
    delta.row(r) *= scales[i];
  }
  return delta;
}

RowMatrix gather_rows(const DatasetView& view,
                      std::span<const std::size_t> positions) {
  RowMatrix x(static_cast<Eigen::Index>(positions.size()),
              static_cast<Eigen::Index>(view.dim()));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto row = view.feature(positions[i]);
    std::copy(row.begin(), row.end(), x.row(static_cast<Eigen::Index>(i)).data());
  }
  return x;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    RngStream& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);
    std::sort(batch.begin(), batch.end());
    batches.push_back(std::move(batch));
  }
  return batches;
}

void check_finite(const MlpModel& model, const char* where) {
  if (!model.all_finite()) {
    throw NumericError(std::string(where) + ": non-finite model parameters");
  }
}

}  // namespace internal

using internal::RowMatrix;

// ---------------------------------------------------------------------------
// Model containers

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].out()) {
      throw ShapeError("MlpModel: layer " + std::to_string(l) +
                       " bias length does not match its output width");
    }
    if (l > 0 && layers_[l].in() != layers_[l - 1].out()) {
      throw ShapeError("MlpModel: layer " + std::to_string(l) + " input width " +
                       std::to_string(layers_[l].in()) + " != previous output " +
                       std::to_string(layers_[l - 1].out()));
    }
  }
}

MlpModel MlpModel::initialize(std::span<const std::size_t> widths,
                              RngStream& rng) {
  MlpModel model = zeros(widths);
  for (auto& layer : model.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out()));
    for (double& w : layer.weights.values()) {
      w = (2.0 * rng.uniform01() - 1.0) * limit;
    }
  }
  return model;
}

MlpModel MlpModel::zeros(std::span<const std::size_t> widths) {
  if (widths.size() < 2) {
    throw ArgumentError("MlpModel: need at least input and output widths");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] == 0 || widths[l + 1] == 0) {
      throw ArgumentError("MlpModel: layer widths must be positive");
    }
    layers.push_back({DenseMatrix(widths[l + 1], widths[l]),
                      std::vector<double>(widths[l + 1], 0.0)});
  }
  return MlpModel(std::move(layers));
}

std::size_t MlpModel::input_width() const {
  return layers_.empty() ? 0 : layers_.front().in();
}

std::size_t MlpModel::class_count() const {
  return layers_.empty() ? 0 : layers_.back().out();
}

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += layer.weights.size() + layer.bias.size();
  return count;
}

std::vector<std::size_t> MlpModel::widths() const {
  std::vector<std::size_t> widths;
  if (layers_.empty()) return widths;
  widths.push_back(input_width());
  for (const auto& layer : layers_) widths.push_back(layer.out());
  return widths;
}

bool MlpModel::all_finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weights.all_finite()) return false;
    for (double b : layer.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients grads;
  for (const auto& layer : model.layers()) {
    grads.layers.push_back({DenseMatrix(layer.out(), layer.in()),
                            std::vector<double>(layer.out(), 0.0)});
  }
  return grads;
}

double Gradients::squared_norm() const {
  double total = 0.0;
  for (const auto& layer : layers) {
    for (double v : layer.weights.values()) total += v * v;
    for (double v : layer.bias) total += v * v;
  }
  return total;
}

bool Gradients::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weights.all_finite()) return false;
    for (double b : layer.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

void Gradients::scale(double factor) {
  for (auto& layer : layers) {
    for (double& v : layer.weights.values()) v *= factor;
    for (double& v : layer.bias) v *= factor;
  }
}

bool congruent(const MlpModel& model, const Gradients& grads) {
  const auto& layers = model.layers();
  if (layers.size() != grads.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weights.rows() != grads.layers[l].weights.rows() ||
        layers[l].weights.cols() != grads.layers[l].weights.cols() ||
        layers[l].bias.size() != grads.layers[l].bias.size()) {
      return false;
    }
  }
  return true;
}

void apply_step(MlpModel& model, const Gradients& grads, double learning_rate) {
  if (!congruent(model, grads)) {
    throw ShapeError("apply_step: gradient shape does not match model");
  }
  auto& layers = model.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].weights.values();
    const auto gw = grads.layers[l].weights.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = w[i] - learning_rate * gw[i];
    auto& b = layers[l].bias;
    const auto& gb = grads.layers[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = b[i] - learning_rate * gb[i];
  }
}

void TrainSpec::validate() const {
  if (batch_size < 1) throw ArgumentError("TrainSpec: batch size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError("TrainSpec: learning rate must be positive and finite");
  }
}

LabeledBatch gather(const DatasetView& view) {
  std::vector<std::size_t> positions(view.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  return gather(view, positions);
}

LabeledBatch gather(const DatasetView& view,
                    std::span<const std::size_t> positions) {
  LabeledBatch batch;
  batch.features = DenseMatrix(positions.size(), view.dim());
  batch.labels.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto row = view.feature(positions[i]);
    std::copy(row.begin(), row.end(), batch.features.row(i).begin());
    batch.labels.push_back(view.label(positions[i]));
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Single-record evaluation

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> forward_logits(const MlpModel& model,
                                   std::span<const double> x) {
  if (x.size() != model.input_width()) {
    throw ShapeError("forward: input length " + std::to_string(x.size()) +
                     " != model input width " +
                     std::to_string(model.input_width()));
  }
  Eigen::VectorXd h = internal::ConstVectorMap(x.data(), static_cast<Eigen::Index>(x.size()));
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z = internal::as_eigen(layers[l].weights) * h;
    z += internal::ConstVectorMap(layers[l].bias.data(), static_cast<Eigen::Index>(layers[l].out()));
    h = (l + 1 < layers.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  std::vector<double> logits(h.data(), h.data() + h.size());
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("forward: non-finite logits");
  }
  return logits;
}

namespace {

double cross_entropy(std::span<const double> logits, int label) {
  const std::size_t top = argmax(logits);
  double tail = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (c != top) tail += std::exp(logits[c] - logits[top]);
  }
  const double log_sum_exp = logits[top] + std::log1p(tail);
  return std::max(0.0, log_sum_exp - logits[static_cast<std::size_t>(label)]);
}

void check_label(int label, std::size_t classes) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw ShapeError("label " + std::to_string(label) + " outside [0, " +
                     std::to_string(classes) + ")");
  }
}

}  // namespace

ForwardResult forward_and_loss(const MlpModel& model,
                               std::span<const double> x, int label) {
  check_label(label, model.class_count());
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericError("forward_and_loss: non-finite input");
  }
  ForwardResult result;
  result.logits = forward_logits(model, x);
  result.loss = cross_entropy(result.logits, label);
  return result;
}

// ---------------------------------------------------------------------------
// Batch training

Gradients backprop_grads(const MlpModel& model, const LabeledBatch& batch) {
  if (batch.size() == 0) throw ArgumentError("backprop_grads: empty batch");
  for (int y : batch.labels) check_label(y, model.class_count());
  const RowMatrix x = internal::as_eigen(batch.features);
  const auto acts = internal::forward_batch(model, x);
  const std::vector<double> scales(batch.size(),
                                   1.0 / static_cast<double>(batch.size()));
  return internal::backward_batch(
      model, acts,
      internal::cross_entropy_delta(internal::softmax_rows(acts.logits),
                                    batch.labels, scales));
}

Gradients backprop_grads(const MlpModel& model, const DatasetView& data) {
  return backprop_grads(model, gather(data));
}

MlpModel sgd_train_local(const MlpModel& model, const DatasetView& data,
                         const TrainSpec& spec, RngStream& rng) {
  spec.validate();
  if (data.empty()) throw ArgumentError("sgd_train_local: empty dataset");
  MlpModel current = model;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    for (const auto& positions : internal::epoch_batches(data.size(), spec.batch_size, rng)) {
      apply_step(current, backprop_grads(current, gather(data, positions)),
                 spec.learning_rate);
    }
  }
  internal::check_finite(current, "sgd_train_local");
  return current;
}

double eval_accuracy(const MlpModel& model, const DatasetView& data) {
  if (data.empty()) throw ArgumentError("eval_accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<int>(argmax(forward_logits(model, data.feature(i)))) == data.label(i)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double mean_loss(const MlpModel& model, const DatasetView& data) {
  if (data.empty()) throw ArgumentError("mean_loss: empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += forward_and_loss(model, data.feature(i), data.label(i)).loss;
  }
  return total / static_cast<double>(data.size());
}

DenseMatrix predict_proba(const MlpModel& model, const DenseMatrix& features) {
  const RowMatrix x = internal::as_eigen(features);
  const RowMatrix probs = internal::softmax_rows(internal::forward_batch(model, x).logits);
  if (!probs.allFinite()) throw NumericError("predict_proba: non-finite output");
  return internal::to_dense(probs);
}

namespace {

void check_soft_targets(const DenseMatrix& features, const DenseMatrix& targets,
                        std::size_t classes) {
  if (targets.rows() != features.rows() || targets.cols() != classes) {
    throw ShapeError("soft targets are " + std::to_string(targets.rows()) + "x" +
                     std::to_string(targets.cols()) + ", expected " +
                     std::to_string(features.rows()) + "x" + std::to_string(classes));
  }
}

// Logit gradient of sum_c (p_c - t_c)^2, each row scaled by `scale`.
RowMatrix squared_error_delta(const RowMatrix& probs, const RowMatrix& targets,
                              double scale) {
  const RowMatrix v = 2.0 * (probs - targets);
  RowMatrix delta(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double inner = probs.row(r).dot(v.row(r));
    delta.row(r) = (probs.row(r).array() * (v.row(r).array() - inner)).matrix() * scale;
  }
  return delta;
}

}  // namespace

MlpModel sgd_train_distill(const MlpModel& model, const DenseMatrix& features,
                           const DenseMatrix& soft_targets,
                           const TrainSpec& spec, RngStream& rng) {
  spec.validate();
  if (features.rows() == 0) throw ArgumentError("sgd_train_distill: empty dataset");
  check_soft_targets(features, soft_targets, model.class_count());
  MlpModel current = model;
  const auto all_x = internal::as_eigen(features);
  const auto all_t = internal::as_eigen(soft_targets);
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    for (const auto& positions :
         internal::epoch_batches(features.rows(), spec.batch_size, rng)) {
      const auto count = static_cast<Eigen::Index>(positions.size());
      RowMatrix x(count, all_x.cols());
      RowMatrix t(count, all_t.cols());
      for (Eigen::Index i = 0; i < count; ++i) {
        x.row(i) = all_x.row(static_cast<Eigen::Index>(positions[static_cast<std::size_t>(i)]));
        t.row(i) = all_t.row(static_cast<Eigen::Index>(positions[static_cast<std::size_t>(i)]));
      }
      const auto acts = internal::forward_batch(current, x);
      const RowMatrix delta = squared_error_delta(internal::softmax_rows(acts.logits), t,
                                                  1.0 / static_cast<double>(count));
      apply_step(current, internal::backward_batch(current, acts, delta), spec.learning_rate);
    }
  }
  internal::check_finite(current, "sgd_train_distill");
  return current;
}

double distill_mse(const MlpModel& model, const DenseMatrix& features,
                   const DenseMatrix& soft_targets) {
  if (features.rows() == 0) throw ArgumentError("distill_mse: empty dataset");
  check_soft_targets(features, soft_targets, model.class_count());
  const DenseMatrix probs = predict_proba(model, features);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double diff = probs.values()[i] - soft_targets.values()[i];
    total += diff * diff;
  }
  return total / static_cast<double>(probs.size());
}

}  // namespace fedsia
