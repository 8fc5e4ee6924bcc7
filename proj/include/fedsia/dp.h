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

#ifndef FEDSIA_DP_H_
#define FEDSIA_DP_H_

#include <cstddef>

#include "fedsia/dataset.h"
#include "fedsia/nn.h"
#include "fedsia/rng.h"

namespace fedsia {

struct DpParams {
  double clip_norm = 1.0;         // C; +infinity disables clipping
  double noise_multiplier = 1.0;  // z
  double delta = 1e-5;

  void validate() const;
};

struct PrivacySpend {
  std::size_t steps = 0;
  double epsilon = 0.0;
  double delta = 0.0;
};

// Scales `grads` by min(1, clip_norm / ||grads||) and returns that factor.
double clip_gradient(Gradients& grads, double clip_norm);

struct DpUpdate {
  MlpModel model;
  std::size_t steps = 0;
};

// DP-SGD with the batching of sgd_train_local. For every batch b: each
// record's gradient is clipped to L2 norm <= C, the clipped gradients are
// averaged, and N(0, (z C / |b|)^2) noise is added to every coordinate
// (layer by layer, weights row-major then bias) before the SGD step. With
// z == 0 no noise is drawn and the stream is consumed exactly as in plain
// training.
DpUpdate dp_sgd_local_update(const MlpModel& model, const DatasetView& data,
                             const TrainSpec& spec, const DpParams& dp, RngStream& rng);

// One noisy step's gradient over the whole of `data` (FedSGD clients):
// the clipped per-record gradients averaged over |data| plus
// N(0, (z C / |data|)^2) per coordinate.
Gradients dp_full_batch_gradient(const MlpModel& model, const DatasetView& data,
                                 const DpParams& dp, RngStream& rng);

// Zero-concentrated DP composition without subsampling amplification:
//   rho = steps / (2 z^2),  eps = rho + 2 sqrt(rho ln(1/delta)).
// An upper bound on the spend. Throws InfinitePrivacyBudget for steps > 0 with
// z == 0.
PrivacySpend account_privacy(std::size_t steps, const DpParams& dp);

}  // namespace fedsia

#endif  // FEDSIA_DP_H_
