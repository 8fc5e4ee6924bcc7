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

#include "fedsia/dp.h"

#include <algorithm>
#include <cmath>

#include "fedsia/error.h"
#include "nn_internal.h"

namespace fedsia {

using internal::RowMatrix;

void DpParams::validate() const {
  if (!(clip_norm > 0.0)) throw ArgumentError("DpParams: clip norm must be positive");
  if (!(noise_multiplier >= 0.0) || !std::isfinite(noise_multiplier)) {
    throw ArgumentError("DpParams: noise multiplier must be finite and >= 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("DpParams: delta must lie in (0, 1)");
}

double clip_gradient(Gradients& grads, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ArgumentError("clip_gradient: clip norm must be positive");
  const double norm = std::sqrt(grads.squared_norm());
  const double factor = norm > clip_norm ? clip_norm / norm : 1.0;
  if (factor != 1.0) grads.scale(factor);
  return factor;
}

namespace {

// Clipped-mean gradient of one batch, with noise drawn from `rng` when z > 0.
Gradients noisy_clipped_gradient(const MlpModel& model, const LabeledBatch& batch,
                                 const DpParams& dp, RngStream& rng) {
  const RowMatrix x = internal::as_eigen(batch.features);
  const auto acts = internal::forward_batch(model, x);
  const RowMatrix probs = internal::softmax_rows(acts.logits);
  const double count = static_cast<double>(batch.size());

  std::vector<double> scales(batch.size(), 1.0);
  const auto sq_norms = internal::per_example_squared_norms(
      model, acts, internal::cross_entropy_delta(probs, batch.labels, scales));
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double norm = std::sqrt(sq_norms[i]);
    const double factor = norm > dp.clip_norm ? dp.clip_norm / norm : 1.0;
    scales[i] = factor / count;
  }
  Gradients grads = internal::backward_batch(
      model, acts, internal::cross_entropy_delta(probs, batch.labels, scales));

  if (dp.noise_multiplier > 0.0) {
    const double stddev = dp.noise_multiplier * dp.clip_norm / count;
    for (auto& layer : grads.layers) {
      for (double& v : layer.weights.values()) v += stddev * rng.normal();
      for (double& v : layer.bias) v += stddev * rng.normal();
    }
  }
  return grads;
}

}  // namespace

DpUpdate dp_sgd_local_update(const MlpModel& model, const DatasetView& data,
                             const TrainSpec& spec, const DpParams& dp, RngStream& rng) {
  spec.validate();
  dp.validate();
  if (data.empty()) throw ArgumentError("dp_sgd_local_update: empty dataset");
  DpUpdate update{model, 0};
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    for (const auto& positions : internal::epoch_batches(data.size(), spec.batch_size, rng)) {
      const Gradients grads =
          noisy_clipped_gradient(update.model, gather(data, positions), dp, rng);
      apply_step(update.model, grads, spec.learning_rate);
      ++update.steps;
    }
  }
  internal::check_finite(update.model, "dp_sgd_local_update");
  return update;
}

Gradients dp_full_batch_gradient(const MlpModel& model, const DatasetView& data,
                                 const DpParams& dp, RngStream& rng) {
  dp.validate();
  if (data.empty()) throw ArgumentError("dp_full_batch_gradient: empty dataset");
  Gradients grads = noisy_clipped_gradient(model, gather(data), dp, rng);
  if (!grads.all_finite()) throw NumericError("dp_full_batch_gradient: non-finite gradient");
  return grads;
}

PrivacySpend account_privacy(std::size_t steps, const DpParams& dp) {
  if (!(dp.delta > 0.0 && dp.delta < 1.0)) {
    throw ArgumentError("account_privacy: delta must lie in (0, 1)");
  }
  PrivacySpend spend{steps, 0.0, dp.delta};
  if (steps == 0) return spend;
  if (!(dp.noise_multiplier > 0.0)) {
    throw InfinitePrivacyBudget("account_privacy: " + std::to_string(steps) +
                                " noisy steps with zero noise have unbounded privacy loss");
  }
  const double z = dp.noise_multiplier;
  const double rho = static_cast<double>(steps) / (2.0 * z * z);
  spend.epsilon = rho + 2.0 * std::sqrt(rho * std::log(1.0 / dp.delta));
  return spend;
}

}  // namespace fedsia
