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

#include "fedsia/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedsia/error.h"

namespace fedsia {

std::vector<MlpModel> recover_fedsgd_local_models(const MlpModel& previous,
                                                  std::span<const Gradients> gradients,
                                                  double learning_rate) {
  std::vector<MlpModel> models;
  models.reserve(gradients.size());
  for (std::size_t k = 0; k < gradients.size(); ++k) {
    if (!congruent(previous, gradients[k])) {
      throw ProtocolError("recover_fedsgd_local_models: client " + std::to_string(k) +
                          " gradient does not match the global model");
    }
    MlpModel local = previous;
    apply_step(local, gradients[k], learning_rate);
    models.push_back(std::move(local));
  }
  return models;
}

LossProbe probe_losses(std::span<const MlpModel> models, const TargetSet& targets,
                       std::size_t round) {
  if (models.empty()) throw ArgumentError("probe_losses: no models");
  if (targets.size() == 0) throw ArgumentError("probe_losses: no targets");
  LossProbe probe;
  probe.round = round;
  probe.losses = DenseMatrix(models.size(), targets.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (models[k].input_width() != targets.features.cols()) {
      throw ShapeError("probe_losses: model " + std::to_string(k) +
                       " input width does not match the targets");
    }
    for (std::size_t m = 0; m < targets.size(); ++m) {
      probe.losses(k, m) =
          forward_and_loss(models[k], targets.features.row(m), targets.labels[m]).loss;
    }
  }
  return probe;
}

SiaPrediction infer_source_argmin(const LossProbe& probe) {
  if (probe.clients() == 0) throw ArgumentError("infer_source_argmin: no clients");
  SiaPrediction prediction;
  prediction.method = InferenceMethod::kArgmin;
  prediction.predicted_source.resize(probe.targets());
  for (std::size_t m = 0; m < probe.targets(); ++m) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < probe.clients(); ++k) {
      if (probe.losses(k, m) < probe.losses(best, m)) best = k;
    }
    prediction.predicted_source[m] = static_cast<int>(best);
  }
  return prediction;
}

PosteriorResult infer_source_posterior(const LossProbe& probe, double prior,
                                       double temperature) {
  const std::size_t clients = probe.clients();
  if (clients < 2) throw ArgumentError("infer_source_posterior: need at least 2 clients");
  if (!(prior > 0.0 && prior < 1.0)) {
    throw ArgumentError("infer_source_posterior: prior must lie in (0, 1)");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ArgumentError("infer_source_posterior: temperature must be positive");
  }
  const double log_odds = std::log(prior / (1.0 - prior));
  const double others = static_cast<double>(clients - 1);
  const double self_weight = static_cast<double>(clients) / others;
  constexpr double kLow = std::numeric_limits<double>::min();
  const double high = std::nextafter(1.0, 0.0);

  PosteriorResult result;
  result.scores.prior = prior;
  result.scores.temperature = temperature;
  result.scores.scores = DenseMatrix(clients, probe.targets());
  result.prediction.method = InferenceMethod::kPosterior;
  result.prediction.predicted_source.resize(probe.targets());
  for (std::size_t m = 0; m < probe.targets(); ++m) {
    double column_sum = 0.0;
    for (std::size_t k = 0; k < clients; ++k) column_sum += probe.losses(k, m);
    const double shared = column_sum / others;
    std::size_t best = 0;
    for (std::size_t k = 0; k < clients; ++k) {
      const double loss = probe.losses(k, m);
      const double gap = shared - loss * self_weight;
      const double score = 1.0 / (1.0 + std::exp(-(gap / temperature + log_odds)));
      result.scores.scores(k, m) = std::clamp(score, kLow, high);
      const double best_score = result.scores.scores(best, m);
      const double current = result.scores.scores(k, m);
      if (current > best_score ||
          (current == best_score && loss < probe.losses(best, m))) {
        best = k;
      }
    }
    result.prediction.predicted_source[m] = static_cast<int>(best);
  }
  return result;
}

namespace {

void check_teacher(const DenseMatrix& public_features, const DenseMatrix& teacher,
                   std::size_t classes) {
  if (teacher.rows() != public_features.rows()) {
    throw ShapeError("train_student_model: " + std::to_string(teacher.rows()) +
                     " teacher rows for " + std::to_string(public_features.rows()) +
                     " public records");
  }
  if (teacher.cols() != classes) {
    throw ShapeError("train_student_model: teacher width does not match student classes");
  }
  for (std::size_t i = 0; i < teacher.rows(); ++i) {
    double total = 0.0;
    for (double p : teacher.row(i)) {
      if (!(p >= 0.0) || p > 1.0) {
        throw ArgumentError("train_student_model: teacher row " + std::to_string(i) +
                            " is not a probability vector");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw ArgumentError("train_student_model: teacher row " + std::to_string(i) +
                          " does not sum to 1");
    }
  }
}

}  // namespace

MlpModel train_student_model(const DenseMatrix& public_features,
                             const DenseMatrix& teacher_predictions,
                             const MlpModel& initial, const StudentSpec& spec,
                             RngStream& rng) {
  check_teacher(public_features, teacher_predictions, initial.class_count());
  const TrainSpec train{spec.epochs, spec.batch_size, spec.learning_rate};
  return sgd_train_distill(initial, public_features, teacher_predictions, train, rng);
}

MlpModel train_student_model(const DenseMatrix& public_features,
                             const DenseMatrix& teacher_predictions,
                             const StudentSpec& spec, RngStream& rng) {
  std::vector<std::size_t> widths{public_features.cols()};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(teacher_predictions.cols());
  const MlpModel initial = MlpModel::initialize(widths, rng);
  return train_student_model(public_features, teacher_predictions, initial, spec, rng);
}

double compute_asr(const SiaPrediction& prediction, std::span<const int> true_source) {
  if (prediction.predicted_source.size() != true_source.size()) {
    throw ArgumentError("compute_asr: " + std::to_string(prediction.predicted_source.size()) +
                        " predictions for " + std::to_string(true_source.size()) + " targets");
  }
  if (true_source.empty()) throw ArgumentError("compute_asr: no targets");
  std::size_t hits = 0;
  for (std::size_t m = 0; m < true_source.size(); ++m) {
    if (prediction.predicted_source[m] == true_source[m]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(true_source.size());
}

double compute_asr(const SiaPrediction& prediction, const TargetSet& targets) {
  return compute_asr(prediction, targets.true_source);
}

SiaPrediction random_guess(std::size_t clients, std::size_t targets, RngStream& rng) {
  if (clients == 0) throw ArgumentError("random_guess: no clients");
  SiaPrediction prediction;
  prediction.method = InferenceMethod::kRandomGuess;
  prediction.predicted_source.reserve(targets);
  for (std::size_t m = 0; m < targets; ++m) {
    prediction.predicted_source.push_back(static_cast<int>(rng.below(clients)));
  }
  return prediction;
}

}  // namespace fedsia
