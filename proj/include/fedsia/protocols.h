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

#ifndef FEDSIA_PROTOCOLS_H_
#define FEDSIA_PROTOCOLS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "fedsia/dataset.h"
#include "fedsia/matrix.h"
#include "fedsia/nn.h"
#include "fedsia/rng.h"

namespace fedsia {

enum class Framework { kFedSgd, kFedAvg, kFedMd };

std::string_view to_string(Framework framework);
// Accepts "fedsgd", "fedavg" or "fedmd"; throws ConfigError otherwise.
Framework parse_framework(std::string_view name);

struct FlConfig {
  Framework framework = Framework::kFedAvg;
  std::size_t clients = 10;
  std::size_t rounds = 20;
  TrainSpec train;  // E, B, learning rate; E is ignored by FedSGD
  std::size_t digest_epochs = 1;   // FedMD E1
  std::size_t revisit_epochs = 5;  // FedMD E2
  std::uint64_t master_seed = 0;

  void validate() const;
};

// What a client sends to the server in one round.
struct ClientGradient {
  Gradients gradients;
  std::size_t sample_count = 0;
};

struct ClientModel {
  MlpModel model;
  std::size_t sample_count = 0;
};

// Post-softmax class scores on the public set, [|D_0| x C].
struct ClientPublicPredictions {
  DenseMatrix scores;
};

using RoundUpdate = std::variant<ClientGradient, ClientModel, ClientPublicPredictions>;

struct GlobalState {
  std::size_t round = 0;
  MlpModel global_model;  // FedSGD and FedAvg

  // FedMD only.
  DenseMatrix consensus;
  std::vector<MlpModel> client_models;
  const DenseMatrix* public_features = nullptr;
};

template <typename Update>
struct RoundOutput {
  GlobalState state;
  std::vector<Update> updates;  // ascending client id
};

// Random stream for one client within the current round.
using StreamFactory = std::function<RngStream(std::size_t client)>;

// Local training used by FedAvg clients. The default runs sgd_train_local.
using LocalTrainer = std::function<MlpModel(const MlpModel& start, const DatasetView& data,
                                            std::size_t client, RngStream& rng)>;

// Client-side gradient used by FedSGD clients. The default is the full-batch
// backprop_grads.
using GradientOracle = std::function<Gradients(const MlpModel& model, const DatasetView& data,
                                               std::size_t client)>;

// n_k / n for each client.
std::vector<double> aggregation_weights(std::span<const std::size_t> sample_counts);

// Weighted sums in ascending client order. Throw ProtocolError on shape
// mismatch.
Gradients aggregate_gradients(std::span<const ClientGradient> updates);
MlpModel aggregate_models(std::span<const ClientModel> updates);
DenseMatrix average_predictions(std::span<const ClientPublicPredictions> updates);

// Every client computes its full-batch gradient at the global model; the
// server steps with the sample-weighted mean gradient.
RoundOutput<ClientGradient> run_fedsgd_round(const GlobalState& state,
                                             std::span<const DatasetView> clients,
                                             double learning_rate, int threads = 1,
                                             const GradientOracle& oracle = {});

// Every client trains locally from the global model; the server takes the
// sample-weighted parameter average.
RoundOutput<ClientModel> run_fedavg_round(const GlobalState& state,
                                          std::span<const DatasetView> clients,
                                          const TrainSpec& spec,
                                          const StreamFactory& streams, int threads = 1,
                                          const LocalTrainer& trainer = {});

// Pretrains each (possibly differently shaped) client model on its private
// data for `pretrain_epochs` and forms the initial consensus on D_0.
GlobalState fedmd_init(std::vector<MlpModel> client_models,
                       std::span<const DatasetView> clients,
                       const DenseMatrix& public_features, std::size_t pretrain_epochs,
                       const TrainSpec& spec, const StreamFactory& streams,
                       int threads = 1);

// Digest (distill towards the consensus on D_0), Revisit (cross-entropy on
// private data), then predict on D_0. The consensus becomes the unweighted
// mean of the returned predictions. `revisit`, when set, replaces the
// cross-entropy Revisit phase and is responsible for its own epoch count.
RoundOutput<ClientPublicPredictions> run_fedmd_round(
    const GlobalState& state, std::span<const DatasetView> clients,
    std::size_t digest_epochs, std::size_t revisit_epochs, const TrainSpec& spec,
    const StreamFactory& streams, int threads = 1, const LocalTrainer& revisit = {});

// Widths {dim, hidden, classes} with the hidden width cycling through
// `hidden_options` by client id.
std::vector<std::vector<std::size_t>> heterogeneous_widths(
    std::size_t dim, std::size_t classes, std::size_t clients,
    std::span<const std::size_t> hidden_options);

}  // namespace fedsia

#endif  // FEDSIA_PROTOCOLS_H_
