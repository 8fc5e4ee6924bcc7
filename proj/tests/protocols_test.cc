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

#include <algorithm>
#include <cmath>
#include <vector>

#include "gtest/gtest.h"

#include "fedsia/attack.h"
#include "fedsia/datagen.h"
#include "fedsia/error.h"
#include "test_util.h"

namespace fedsia {
namespace {

using ::fedsia::testing::flatten;
using ::fedsia::testing::random_dataset;
using ::fedsia::testing::random_model;

StreamFactory streams_for(std::uint64_t round) {
  const SeedDerivation seeds(99);
  return [seeds, round](std::size_t k) {
    return RngStream(seeds.derive(Purpose::kClientTrain, round, k));
  };
}

double mean_sq(const DenseMatrix& a, const DenseMatrix& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    total += d * d;
  }
  return total / static_cast<double>(a.size());
}

TEST(WeightsTest, ProportionalToSamples) {
  const std::vector<std::size_t> counts{1, 3};
  EXPECT_EQ(aggregation_weights(counts), (std::vector<double>{0.25, 0.75}));
  const std::vector<std::size_t> none{0, 0};
  EXPECT_THROW(aggregation_weights(none), ProtocolError);
}

TEST(FedSgdTest, SingleClientStep) {
  GlobalState state;
  state.global_model = random_model({4, 5, 3}, 1);
  const Dataset data = random_dataset(40, 4, 3, 2);
  const std::vector<DatasetView> clients{DatasetView::all(data)};
  const auto out = run_fedsgd_round(state, clients, 0.1);
  MlpModel expected = state.global_model;
  apply_step(expected, backprop_grads(state.global_model, clients[0]), 0.1);
  EXPECT_EQ(out.state.global_model, expected);
  EXPECT_EQ(out.state.round, 1u);
  ASSERT_EQ(out.updates.size(), 1u);
  EXPECT_EQ(out.updates[0].sample_count, 40u);
}

TEST(FedSgdTest, IdenticalClientsMatchSingleClient) {
  GlobalState state;
  state.global_model = random_model({4, 5, 3}, 1);
  const Dataset data = random_dataset(40, 4, 3, 2);
  const std::vector<DatasetView> one{DatasetView::all(data)};
  const std::vector<DatasetView> two{DatasetView::all(data), DatasetView::all(data)};
  EXPECT_EQ(run_fedsgd_round(state, one, 0.1).state.global_model,
            run_fedsgd_round(state, two, 0.1).state.global_model);
}

TEST(FedSgdTest, WeightedMeanOfClientGradients) {
  GlobalState state;
  state.global_model = random_model({3, 4, 2}, 3);
  const Dataset data = random_dataset(30, 3, 2, 4);
  std::vector<std::size_t> a(10);
  std::vector<std::size_t> b(20);
  for (std::size_t i = 0; i < 10; ++i) a[i] = i;
  for (std::size_t i = 0; i < 20; ++i) b[i] = 10 + i;
  const std::vector<DatasetView> clients{DatasetView(data, a), DatasetView(data, b)};
  const auto out = run_fedsgd_round(state, clients, 0.2);
  // Weighted mean of the clients' mean gradients equals the pooled mean gradient.
  MlpModel pooled = state.global_model;
  apply_step(pooled, backprop_grads(state.global_model, DatasetView::all(data)), 0.2);
  const auto got = flatten(out.state.global_model.layers());
  const auto want = flatten(pooled.layers());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-14);
}

TEST(FedAvgTest, OppositeModelsAverageToZero) {
  GlobalState state;
  state.global_model = random_model({3, 4, 2}, 5);
  const Dataset data = random_dataset(20, 3, 2, 6);
  std::vector<std::size_t> a(10);
  std::vector<std::size_t> b(10);
  for (std::size_t i = 0; i < 10; ++i) {
    a[i] = i;
    b[i] = 10 + i;
  }
  const std::vector<DatasetView> clients{DatasetView(data, a), DatasetView(data, b)};
  const MlpModel p = random_model({3, 4, 2}, 7);
  LocalTrainer trainer = [&](const MlpModel&, const DatasetView&, std::size_t k, RngStream&) {
    MlpModel m = p;
    if (k == 1) {
      for (auto& layer : m.mutable_layers()) {
        for (double& w : layer.weights.values()) w = -w;
        for (double& v : layer.bias) v = -v;
      }
    }
    return m;
  };
  const auto out = run_fedavg_round(state, clients, TrainSpec{}, streams_for(1), 1, trainer);
  for (double v : flatten(out.state.global_model.layers())) EXPECT_EQ(v, 0.0);
}

TEST(FedAvgTest, SingleClientFullBatchMatchesFedSgd) {
  GlobalState state;
  state.global_model = random_model({4, 6, 3}, 8);
  const Dataset data = random_dataset(25, 4, 3, 9);
  const std::vector<DatasetView> clients{DatasetView::all(data)};
  const TrainSpec spec{.epochs = 1, .batch_size = 25, .learning_rate = 0.05};
  GlobalState sgd = state;
  GlobalState avg = state;
  for (std::uint64_t t = 1; t <= 5; ++t) {
    sgd = run_fedsgd_round(sgd, clients, 0.05).state;
    avg = run_fedavg_round(avg, clients, spec, streams_for(t)).state;
    ASSERT_EQ(sgd.global_model, avg.global_model) << "round " << t;
  }
}

TEST(FedAvgTest, ThreadCountDoesNotChangeResult) {
  GlobalState state;
  state.global_model = random_model({5, 8, 3}, 10);
  const Dataset data = random_dataset(400, 5, 3, 11);
  const auto partition = dirichlet_partition(DatasetView::all(data), 6, 0.5, 12);
  const auto clients = partition.views(data);
  const TrainSpec spec{.epochs = 2, .batch_size = 16, .learning_rate = 0.05};
  const auto one = run_fedavg_round(state, clients, spec, streams_for(1), 1);
  const auto many = run_fedavg_round(state, clients, spec, streams_for(1), 8);
  EXPECT_EQ(one.state.global_model, many.state.global_model);
  for (std::size_t k = 0; k < clients.size(); ++k) {
    EXPECT_EQ(one.updates[k].model, many.updates[k].model);
  }
}

TEST(AggregateTest, ShapeMismatchIsProtocolError) {
  const std::vector<ClientModel> models{{random_model({3, 4, 2}, 1), 5},
                                        {random_model({3, 5, 2}, 1), 5}};
  EXPECT_THROW(aggregate_models(models), ProtocolError);
  const std::vector<ClientPublicPredictions> preds{{DenseMatrix(2, 2)}, {DenseMatrix(3, 2)}};
  EXPECT_THROW(average_predictions(preds), ProtocolError);
}

TEST(AggregateTest, OppositeOneHotRowsAverageToHalf) {
  const std::vector<ClientPublicPredictions> preds{{DenseMatrix(1, 2, {1.0, 0.0})},
                                                   {DenseMatrix(1, 2, {0.0, 1.0})}};
  const DenseMatrix mean = average_predictions(preds);
  EXPECT_EQ(mean(0, 0), 0.5);
  EXPECT_EQ(mean(0, 1), 0.5);
  const std::vector<ClientPublicPredictions> same(3, {DenseMatrix(1, 2, {0.3, 0.7})});
  EXPECT_EQ(average_predictions(same), same[0].scores);
}

TEST(RoundTest, NumericFailureNamesClient) {
  GlobalState state;
  state.global_model = random_model({2, 3, 2}, 1);
  Dataset data = random_dataset(10, 2, 2, 2);
  const std::vector<DatasetView> clients{DatasetView(data, {0, 1, 2}), DatasetView(data, {3, 4})};
  LocalTrainer boom = [](const MlpModel& m, const DatasetView&, std::size_t k, RngStream&) {
    if (k == 1) throw NumericError("overflow");
    return m;
  };
  try {
    run_fedavg_round(state, clients, TrainSpec{}, streams_for(1), 1, boom);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("client 1"), std::string::npos);
  }
}

TEST(RoundTest, EmptyClientRejected) {
  GlobalState state;
  state.global_model = random_model({2, 3, 2}, 1);
  const Dataset data = random_dataset(10, 2, 2, 2);
  const std::vector<DatasetView> clients{DatasetView(data, {0}), DatasetView(data, {})};
  EXPECT_THROW(run_fedsgd_round(state, clients, 0.1), ProtocolError);
}

TEST(HeterogeneousTest, WidthsCycle) {
  const std::vector<std::size_t> hidden{128, 200, 256};
  const auto widths = heterogeneous_widths(60, 10, 5, hidden);
  ASSERT_EQ(widths.size(), 5u);
  EXPECT_EQ(widths[0], (std::vector<std::size_t>{60, 128, 10}));
  EXPECT_EQ(widths[3], (std::vector<std::size_t>{60, 128, 10}));
  EXPECT_EQ(widths[4], (std::vector<std::size_t>{60, 200, 10}));
}

class FedMdTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = gen_synthetic(1400, 10, 4, 3);
    std::vector<std::size_t> priv(1000);
    for (std::size_t i = 0; i < 1000; ++i) priv[i] = i;
    public_ = DenseMatrix(400, 10);
    for (std::size_t r = 0; r < 400; ++r) {
      for (std::size_t c = 0; c < 10; ++c) public_(r, c) = data_.features(1000 + r, c);
    }
    partition_ = dirichlet_partition(DatasetView(data_, priv), 3, 0.5, 4);
    clients_ = partition_.views(data_);
    const std::vector<std::size_t> hidden{8, 12, 16};
    for (const auto& w : heterogeneous_widths(10, 4, 3, hidden)) {
      RngStream rng(w[1]);
      models_.push_back(MlpModel::initialize(w, rng));
    }
  }

  Dataset data_;
  DenseMatrix public_;
  ClientPartition partition_;
  std::vector<DatasetView> clients_;
  std::vector<MlpModel> models_;
  const TrainSpec spec_{.epochs = 1, .batch_size = 32, .learning_rate = 0.05};
};

TEST_F(FedMdTest, InitFormsMeanConsensus) {
  const GlobalState state = fedmd_init(models_, clients_, public_, 2, spec_, streams_for(0));
  ASSERT_EQ(state.client_models.size(), 3u);
  ASSERT_EQ(state.consensus.rows(), 400u);
  for (std::size_t r = 0; r < 400; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      double total = 0.0;
      for (const auto& m : state.client_models) {
        total += predict_proba(m, public_)(r, c);
      }
      EXPECT_NEAR(state.consensus(r, c), total / 3.0, 1e-14);
    }
  }
}

TEST_F(FedMdTest, IdenticalModelsGiveTheirOwnPrediction) {
  const std::vector<MlpModel> same(3, models_[1]);
  const std::vector<DatasetView> one_client(3, clients_[0]);
  const GlobalState state = fedmd_init(same, one_client, public_, 1, spec_,
                                       [](std::size_t) { return RngStream(5); });
  const DenseMatrix expected = predict_proba(state.client_models[0], public_);
  EXPECT_EQ(state.consensus, expected);
}

TEST_F(FedMdTest, DigestMovesClientsTowardsConsensus) {
  const GlobalState state = fedmd_init(models_, clients_, public_, 3, spec_, streams_for(0));
  const auto out = run_fedmd_round(state, clients_, 1, 0, spec_, streams_for(1));
  for (std::size_t k = 0; k < 3; ++k) {
    const double before = mean_sq(predict_proba(state.client_models[k], public_), state.consensus);
    const double after = mean_sq(out.updates[k].scores, state.consensus);
    EXPECT_LT(after, before) << "client " << k;
  }
}

TEST_F(FedMdTest, ConsensusIsConvexCombination) {
  const GlobalState state = fedmd_init(models_, clients_, public_, 1, spec_, streams_for(0));
  const auto out = run_fedmd_round(state, clients_, 1, 2, spec_, streams_for(1));
  for (std::size_t i = 0; i < out.state.consensus.size(); ++i) {
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& u : out.updates) {
      lo = std::min(lo, u.scores.data()[i]);
      hi = std::max(hi, u.scores.data()[i]);
    }
    EXPECT_GE(out.state.consensus.data()[i], lo);
    EXPECT_LE(out.state.consensus.data()[i], hi);
  }
}

TEST_F(FedMdTest, RoundIsThreadInvariant) {
  const GlobalState state = fedmd_init(models_, clients_, public_, 1, spec_, streams_for(0), 3);
  const auto a = run_fedmd_round(state, clients_, 1, 2, spec_, streams_for(1), 1);
  const auto b = run_fedmd_round(state, clients_, 1, 2, spec_, streams_for(1), 8);
  EXPECT_EQ(a.state.consensus, b.state.consensus);
  EXPECT_EQ(a.state.client_models, b.state.client_models);
}

TEST_F(FedMdTest, MismatchedClassCountRejected) {
  std::vector<MlpModel> bad = models_;
  RngStream rng(1);
  const std::vector<std::size_t> w{10, 8, 5};
  bad[2] = MlpModel::initialize(w, rng);
  EXPECT_THROW(fedmd_init(bad, clients_, public_, 1, spec_, streams_for(0)), ConfigError);
}

// Students fitted to public-set predictions should recover most of the
// source signal that the true local models carry.
TEST(FedMdSoundnessTest, StudentProbeKeepsMostOfTrueAsr) {
  const Dataset data = gen_synthetic(6000, 20, 10, 8);
  std::vector<std::size_t> priv(4000);
  for (std::size_t i = 0; i < 4000; ++i) priv[i] = i;
  DenseMatrix pub(2000, 20);
  for (std::size_t r = 0; r < 2000; ++r) {
    for (std::size_t c = 0; c < 20; ++c) pub(r, c) = data.features(4000 + r, c);
  }
  const auto partition = dirichlet_partition(DatasetView(data, priv), 5, 0.1, 9);
  const auto clients = partition.views(data);
  const TargetSet targets = sample_targets(partition, data, 20, 10);
  std::vector<MlpModel> teachers;
  for (std::size_t k = 0; k < clients.size(); ++k) {
    RngStream rng(100 + k);
    const std::vector<std::size_t> w{20, 64, 10};
    teachers.push_back(sgd_train_local(MlpModel::initialize(w, rng), clients[k],
                                       {.epochs = 10, .batch_size = 32, .learning_rate = 0.05},
                                       rng));
  }
  const double true_asr = compute_asr(infer_source_argmin(probe_losses(teachers, targets)),
                                      targets);
  ASSERT_GE(true_asr, 0.5);
  std::vector<MlpModel> students;
  for (std::size_t k = 0; k < teachers.size(); ++k) {
    RngStream rng(200 + k);
    students.push_back(
        train_student_model(pub, predict_proba(teachers[k], pub), StudentSpec{}, rng));
  }
  const double student_asr =
      compute_asr(infer_source_argmin(probe_losses(students, targets)), targets);
  EXPECT_GE(student_asr, 0.8 * true_asr) << "true " << true_asr;
}

}  // namespace
}  // namespace fedsia
