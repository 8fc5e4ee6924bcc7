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

#include "fedsia/protocols.h"

#include <string>

#include "fedsia/error.h"
#include "fedsia/parallel.h"

namespace fedsia {

std::string_view to_string(Framework framework) {
  switch (framework) {
    case Framework::kFedSgd:
      return "fedsgd";
    case Framework::kFedAvg:
      return "fedavg";
    case Framework::kFedMd:
      return "fedmd";
  }
  return "unknown";
}

Framework parse_framework(std::string_view name) {
  if (name == "fedsgd") return Framework::kFedSgd;
  if (name == "fedavg") return Framework::kFedAvg;
  if (name == "fedmd") return Framework::kFedMd;
  throw ConfigError("unknown framework '" + std::string(name) +
                    "' (expected fedsgd, fedavg or fedmd)");
}

void FlConfig::validate() const {
  if (clients < 1) throw ConfigError("fl.clients must be >= 1");
  if (rounds < 1) throw ConfigError("fl.rounds must be >= 1");
  try {
    train.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> aggregation_weights(std::span<const std::size_t> sample_counts) {
  std::size_t total = 0;
  for (std::size_t n : sample_counts) total += n;
  if (total == 0) throw ProtocolError("aggregation: no samples");
  std::vector<double> weights;
  weights.reserve(sample_counts.size());
  for (std::size_t n : sample_counts) {
    weights.push_back(static_cast<double>(n) / static_cast<double>(total));
  }
  return weights;
}

namespace {

template <typename Update>
std::vector<double> weights_of(std::span<const Update> updates) {
  std::vector<std::size_t> counts;
  counts.reserve(updates.size());
  for (const auto& u : updates) counts.push_back(u.sample_count);
  return aggregation_weights(counts);
}

// acc += weight * layers, coordinate by coordinate.
void accumulate(std::vector<DenseLayer>& acc, const std::vector<DenseLayer>& layers,
                double weight) {
  for (std::size_t l = 0; l < acc.size(); ++l) {
    auto a = acc[l].weights.values();
    const auto w = layers[l].weights.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += weight * w[i];
    auto& ab = acc[l].bias;
    const auto& b = layers[l].bias;
    for (std::size_t i = 0; i < ab.size(); ++i) ab[i] += weight * b[i];
  }
}

bool same_shape(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].weights.rows() != b[l].weights.rows() ||
        a[l].weights.cols() != b[l].weights.cols() || a[l].bias.size() != b[l].bias.size()) {
      return false;
    }
  }
  return true;
}

void require_clients(const GlobalState& state, std::span<const DatasetView> clients) {
  if (clients.empty()) throw ProtocolError("round: no clients");
  for (std::size_t k = 0; k < clients.size(); ++k) {
    if (clients[k].empty()) {
      throw ProtocolError("round: client " + std::to_string(k) + " has no data");
    }
  }
  (void)state;
}

// Prefixes numeric failures with the client they came from.
template <typename Fn>
void with_client_context(std::size_t client, Fn&& fn) {
  try {
    fn();
  } catch (const NumericError& e) {
    throw NumericError("client " + std::to_string(client) + ": " + e.what());
  }
}

}  // namespace

Gradients aggregate_gradients(std::span<const ClientGradient> updates) {
  if (updates.empty()) throw ProtocolError("aggregate_gradients: no updates");
  const auto weights = weights_of(updates);
  Gradients total;
  total.layers = updates.front().gradients.layers;
  for (auto& layer : total.layers) {
    for (double& v : layer.weights.values()) v = 0.0;
    for (double& v : layer.bias) v = 0.0;
  }
  for (std::size_t k = 0; k < updates.size(); ++k) {
    if (!same_shape(total.layers, updates[k].gradients.layers)) {
      throw ProtocolError("aggregate_gradients: client " + std::to_string(k) +
                          " gradient shape mismatch");
    }
    accumulate(total.layers, updates[k].gradients.layers, weights[k]);
  }
  return total;
}

MlpModel aggregate_models(std::span<const ClientModel> updates) {
  if (updates.empty()) throw ProtocolError("aggregate_models: no updates");
  const auto weights = weights_of(updates);
  MlpModel total = MlpModel::zeros(updates.front().model.widths());
  for (std::size_t k = 0; k < updates.size(); ++k) {
    if (!same_shape(total.layers(), updates[k].model.layers())) {
      throw ProtocolError("aggregate_models: client " + std::to_string(k) +
                          " model shape mismatch");
    }
    accumulate(total.mutable_layers(), updates[k].model.layers(), weights[k]);
  }
  return total;
}

DenseMatrix average_predictions(std::span<const ClientPublicPredictions> updates) {
  if (updates.empty()) throw ProtocolError("average_predictions: no updates");
  const std::size_t rows = updates.front().scores.rows();
  const std::size_t cols = updates.front().scores.cols();
  // Running mean: equal inputs come back bit-exact and every entry stays
  // inside the clients' range.
  DenseMatrix mean = updates.front().scores;
  for (std::size_t k = 1; k < updates.size(); ++k) {
    const auto& s = updates[k].scores;
    if (s.rows() != rows || s.cols() != cols) {
      throw ProtocolError("average_predictions: client " + std::to_string(k) +
                          " prediction matrix shape mismatch");
    }
    const double inv = 1.0 / static_cast<double>(k + 1);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      mean.values()[i] += (s.values()[i] - mean.values()[i]) * inv;
    }
  }
  return mean;
}

RoundOutput<ClientGradient> run_fedsgd_round(const GlobalState& state,
                                             std::span<const DatasetView> clients,
                                             double learning_rate, int threads,
                                             const GradientOracle& oracle) {
  require_clients(state, clients);
  RoundOutput<ClientGradient> out;
  out.updates.resize(clients.size());
  parallel_for(clients.size(), threads, [&](std::size_t k) {
    with_client_context(k, [&] {
      out.updates[k] = {oracle ? oracle(state.global_model, clients[k], k)
                               : backprop_grads(state.global_model, clients[k]),
                        clients[k].size()};
    });
  });
  for (std::size_t k = 0; k < out.updates.size(); ++k) {
    if (!congruent(state.global_model, out.updates[k].gradients)) {
      throw ProtocolError("fedsgd: client " + std::to_string(k) +
                          " gradient does not match the global model");
    }
  }
  out.state = state;
  out.state.round = state.round + 1;
  apply_step(out.state.global_model, aggregate_gradients(out.updates), learning_rate);
  return out;
}

RoundOutput<ClientModel> run_fedavg_round(const GlobalState& state,
                                          std::span<const DatasetView> clients,
                                          const TrainSpec& spec,
                                          const StreamFactory& streams, int threads,
                                          const LocalTrainer& trainer) {
  require_clients(state, clients);
  spec.validate();
  RoundOutput<ClientModel> out;
  out.updates.resize(clients.size());
  parallel_for(clients.size(), threads, [&](std::size_t k) {
    with_client_context(k, [&] {
      RngStream rng = streams(k);
      MlpModel local = trainer ? trainer(state.global_model, clients[k], k, rng)
                               : sgd_train_local(state.global_model, clients[k], spec, rng);
      out.updates[k] = {std::move(local), clients[k].size()};
    });
  });
  out.state = state;
  out.state.round = state.round + 1;
  out.state.global_model = aggregate_models(out.updates);
  return out;
}

GlobalState fedmd_init(std::vector<MlpModel> client_models,
                       std::span<const DatasetView> clients,
                       const DenseMatrix& public_features, std::size_t pretrain_epochs,
                       const TrainSpec& spec, const StreamFactory& streams, int threads) {
  if (client_models.size() != clients.size()) {
    throw ConfigError("fedmd_init: " + std::to_string(client_models.size()) +
                      " models for " + std::to_string(clients.size()) + " clients");
  }
  if (public_features.rows() == 0) throw ConfigError("fedmd_init: empty public dataset");
  const std::size_t classes = client_models.empty() ? 0 : client_models.front().class_count();
  for (std::size_t k = 0; k < client_models.size(); ++k) {
    if (client_models[k].input_width() != public_features.cols() ||
        client_models[k].class_count() != classes) {
      throw ConfigError("fedmd_init: client " + std::to_string(k) +
                        " model has incompatible input or output width");
    }
  }
  GlobalState init;
  init.public_features = &public_features;
  require_clients(init, clients);
  TrainSpec pretrain = spec;
  pretrain.epochs = pretrain_epochs;
  pretrain.validate();

  std::vector<ClientPublicPredictions> predictions(clients.size());
  parallel_for(clients.size(), threads, [&](std::size_t k) {
    with_client_context(k, [&] {
      RngStream rng = streams(k);
      client_models[k] = sgd_train_local(client_models[k], clients[k], pretrain, rng);
      predictions[k] = {predict_proba(client_models[k], public_features)};
    });
  });
  init.client_models = std::move(client_models);
  init.consensus = average_predictions(predictions);
  return init;
}

RoundOutput<ClientPublicPredictions> run_fedmd_round(
    const GlobalState& state, std::span<const DatasetView> clients,
    std::size_t digest_epochs, std::size_t revisit_epochs, const TrainSpec& spec,
    const StreamFactory& streams, int threads, const LocalTrainer& revisit_trainer) {
  if (state.public_features == nullptr || state.client_models.size() != clients.size()) {
    throw ProtocolError("fedmd round: state was not produced by fedmd_init");
  }
  require_clients(state, clients);
  const DenseMatrix& public_features = *state.public_features;
  TrainSpec digest = spec;
  digest.epochs = digest_epochs;
  TrainSpec revisit = spec;
  revisit.epochs = revisit_epochs;
  digest.validate();

  RoundOutput<ClientPublicPredictions> out;
  out.state = state;
  out.state.round = state.round + 1;
  out.updates.resize(clients.size());
  parallel_for(clients.size(), threads, [&](std::size_t k) {
    with_client_context(k, [&] {
      RngStream rng = streams(k);
      MlpModel model = state.client_models[k];
      model = sgd_train_distill(model, public_features, state.consensus, digest, rng);
      model = revisit_trainer ? revisit_trainer(model, clients[k], k, rng)
                              : sgd_train_local(model, clients[k], revisit, rng);
      out.updates[k] = {predict_proba(model, public_features)};
      out.state.client_models[k] = std::move(model);
    });
  });
  for (std::size_t k = 0; k < out.updates.size(); ++k) {
    if (out.updates[k].scores.rows() != state.consensus.rows() ||
        out.updates[k].scores.cols() != state.consensus.cols()) {
      throw ProtocolError("fedmd round: client " + std::to_string(k) +
                          " prediction matrix shape mismatch");
    }
  }
  out.state.consensus = average_predictions(out.updates);
  return out;
}

std::vector<std::vector<std::size_t>> heterogeneous_widths(
    std::size_t dim, std::size_t classes, std::size_t clients,
    std::span<const std::size_t> hidden_options) {
  if (hidden_options.empty()) throw ConfigError("heterogeneous_widths: no hidden widths");
  std::vector<std::vector<std::size_t>> widths;
  for (std::size_t k = 0; k < clients; ++k) {
    widths.push_back({dim, hidden_options[k % hidden_options.size()], classes});
  }
  return widths;
}

}  // namespace fedsia
