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

#ifndef FEDSIA_ATTACK_H_
#define FEDSIA_ATTACK_H_

#include <cstddef>
#include <span>
#include <vector>

#include "fedsia/datagen.h"
#include "fedsia/matrix.h"
#include "fedsia/nn.h"
#include "fedsia/rng.h"

namespace fedsia {

// losses(k, m) = loss of client k's (recovered or imitated) model on target m.
struct LossProbe {
  DenseMatrix losses;
  std::size_t round = 0;

  std::size_t clients() const { return losses.rows(); }
  std::size_t targets() const { return losses.cols(); }
};

enum class InferenceMethod { kArgmin, kPosterior, kRandomGuess };

struct SiaPrediction {
  std::vector<int> predicted_source;
  InferenceMethod method = InferenceMethod::kArgmin;
};

struct PosteriorScores {
  DenseMatrix scores;  // [K x M], each in (0, 1)
  double prior = 0.0;
  double temperature = 1.0;
};

struct PosteriorResult {
  PosteriorScores scores;
  SiaPrediction prediction;
};

// theta_prev - learning_rate * g_k for every client gradient, in order.
std::vector<MlpModel> recover_fedsgd_local_models(const MlpModel& previous,
                                                  std::span<const Gradients> gradients,
                                                  double learning_rate);

LossProbe probe_losses(std::span<const MlpModel> models, const TargetSet& targets,
                       std::size_t round = 0);

// Smallest loss wins; lowest client index on ties.
SiaPrediction infer_source_argmin(const LossProbe& probe);

// score(k, m) = sigmoid((mean_{j != k} loss(j, m) - loss(k, m)) / temperature
//                       + log(prior / (1 - prior)))
//
// The mean loss of the other clients stands in for the expected loss of a
// model trained without the target. The gap is evaluated as
// S/(K-1) - loss(k, m) * K/(K-1) with S the column sum, which is monotone in
// loss(k, m) under rounding. Scores are clamped into the open unit interval;
// the predicted source is the largest score, ties going to the smaller loss
// and then to the lower index, so it always equals the argmin prediction.
PosteriorResult infer_source_posterior(const LossProbe& probe, double prior,
                                       double temperature = 1.0);

struct StudentSpec {
  std::vector<std::size_t> hidden = {200};
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
};

// Fits `initial` to the teacher's probability rows on D_0.
MlpModel train_student_model(const DenseMatrix& public_features,
                             const DenseMatrix& teacher_predictions,
                             const MlpModel& initial, const StudentSpec& spec,
                             RngStream& rng);
// Initializes a {dim, hidden..., classes} student from `rng`, then fits it.
MlpModel train_student_model(const DenseMatrix& public_features,
                             const DenseMatrix& teacher_predictions,
                             const StudentSpec& spec, RngStream& rng);

double compute_asr(const SiaPrediction& prediction, const TargetSet& targets);
double compute_asr(const SiaPrediction& prediction, std::span<const int> true_source);

// Baseline: a uniformly random client for every target.
SiaPrediction random_guess(std::size_t clients, std::size_t targets, RngStream& rng);

}  // namespace fedsia

#endif  // FEDSIA_ATTACK_H_
