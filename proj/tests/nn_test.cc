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

#include <cmath>
#include <vector>

#include "gtest/gtest.h"

#include "fedsia/error.h"
#include "test_util.h"

namespace fedsia {
namespace {

using ::fedsia::testing::flatten;
using ::fedsia::testing::random_dataset;
using ::fedsia::testing::random_model;

// Scalar-loop reference: no shared code with the library kernels.
double naive_loss(const MlpModel& model, const std::vector<double>& x, int label) {
  std::vector<double> a = x;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    std::vector<double> z(layer.out(), 0.0);
    for (std::size_t o = 0; o < layer.out(); ++o) {
      double s = layer.bias[o];
      for (std::size_t i = 0; i < layer.in(); ++i) s += layer.weights(o, i) * a[i];
      z[o] = (l + 1 < layers.size()) ? (s > 0 ? s : 0.0) : s;
    }
    a = z;
  }
  double m = a[0];
  for (double v : a) m = std::max(m, v);
  long double total = 0;
  for (double v : a) total += std::exp(static_cast<long double>(v - m));
  return static_cast<double>(std::log(total) - (a[label] - m));
}

double naive_mean_loss(const MlpModel& model, const LabeledBatch& batch) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto row = batch.features.row(i);
    total += naive_loss(model, {row.begin(), row.end()}, batch.labels[i]);
  }
  return total / static_cast<double>(batch.size());
}

double& param_at(MlpModel& model, std::size_t flat) {
  for (auto& layer : model.mutable_layers()) {
    if (flat < layer.weights.size()) return layer.weights.data()[flat];
    flat -= layer.weights.size();
    if (flat < layer.bias.size()) return layer.bias[flat];
    flat -= layer.bias.size();
  }
  throw std::out_of_range("param_at");
}

TEST(ForwardTest, ZeroModelGivesLogClassCount) {
  const std::vector<std::size_t> widths{5, 10};
  const MlpModel model = MlpModel::zeros(widths);
  const std::vector<double> x{1.0, -2.0, 3.0, 0.5, 7.0};
  EXPECT_NEAR(forward_and_loss(model, x, 3).loss, std::log(10.0), 1e-12);
  EXPECT_NEAR(forward_and_loss(model, x, 3).loss, 2.302585, 1e-6);
}

TEST(ForwardTest, SaturatedLogitGivesNearZeroLoss) {
  const std::vector<std::size_t> widths{1, 4};
  MlpModel model = MlpModel::zeros(widths);
  model.mutable_layers()[0].bias[2] = 50.0;
  const std::vector<double> x{0.0};
  const double loss = forward_and_loss(model, x, 2).loss;
  EXPECT_GE(loss, 0.0);
  EXPECT_LT(loss, 1e-9);
}

TEST(ForwardTest, MatchesScalarLoopOracle) {
  const MlpModel model = random_model({60, 200, 10}, 11);
  RngStream rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(60);
    for (double& v : x) v = rng.normal();
    const int label = static_cast<int>(rng.below(10));
    const double expected = naive_loss(model, x, label);
    const double got = forward_and_loss(model, x, label).loss;
    EXPECT_NEAR(got, expected, 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST(ForwardTest, LogitsTranslationInvariance) {
  MlpModel model = random_model({4, 3}, 3);
  const std::vector<double> x{0.3, -0.1, 2.0, 1.0};
  const double before = forward_and_loss(model, x, 1).loss;
  for (double& b : model.mutable_layers()[0].bias) b += 123.0;
  EXPECT_NEAR(forward_and_loss(model, x, 1).loss, before, 1e-12);
}

TEST(ForwardTest, RejectsBadInput) {
  const MlpModel model = random_model({3, 4, 2}, 1);
  const std::vector<double> short_x{1.0, 2.0};
  EXPECT_THROW(forward_and_loss(model, short_x, 0), ShapeError);
  const std::vector<double> nan_x{1.0, std::nan(""), 0.0};
  EXPECT_THROW(forward_and_loss(model, nan_x, 0), NumericError);
}

TEST(ForwardTest, LossIsFiniteAndNonnegative) {
  const MlpModel model = random_model({8, 16, 5}, 4);
  const Dataset data = random_dataset(200, 8, 5, 5);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double loss = forward_and_loss(model, data.features.row(i), data.labels[i]).loss;
    EXPECT_TRUE(std::isfinite(loss));
    EXPECT_GE(loss, 0.0);
  }
}

TEST(ModelTest, GlorotInitBoundsAndZeroBias) {
  RngStream rng(9);
  const std::vector<std::size_t> widths{60, 200, 10};
  const MlpModel model = MlpModel::initialize(widths, rng);
  EXPECT_EQ(model.parameter_count(), 60u * 200 + 200 + 200 * 10 + 10);
  for (const auto& layer : model.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out()));
    for (double w : layer.weights.values()) EXPECT_LE(std::abs(w), bound);
    for (double b : layer.bias) EXPECT_EQ(b, 0.0);
  }
}

TEST(ModelTest, RejectsUnchainedLayers) {
  std::vector<DenseLayer> layers(2);
  layers[0].weights = DenseMatrix(4, 3);
  layers[0].bias.assign(4, 0.0);
  layers[1].weights = DenseMatrix(2, 5);
  layers[1].bias.assign(2, 0.0);
  EXPECT_THROW(MlpModel{layers}, ShapeError);
}

TEST(BackpropTest, MatchesCentralFiniteDifferences) {
  MlpModel model = random_model({6, 8, 3}, 21);
  const Dataset data = random_dataset(7, 6, 3, 22);
  const LabeledBatch batch = gather(DatasetView::all(data));
  const std::vector<double> analytic = flatten(backprop_grads(model, batch).layers);
  ASSERT_EQ(analytic.size(), model.parameter_count());
  const double h = 1e-5;
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    double& w = param_at(model, p);
    const double saved = w;
    w = saved + h;
    const double up = naive_mean_loss(model, batch);
    w = saved - h;
    const double down = naive_mean_loss(model, batch);
    w = saved;
    const double fd = (up - down) / (2 * h);
    EXPECT_LT(std::abs(analytic[p] - fd) / std::max(1.0, std::abs(fd)), 1e-5) << "param " << p;
  }
}

TEST(BackpropTest, ZeroInputGivesZeroFirstLayerWeightGradient) {
  const MlpModel model = random_model({4, 5, 3}, 2);
  Dataset data;
  data.class_count = 3;
  data.features = DenseMatrix(1, 4, {0.0, 0.0, 0.0, 0.0});
  data.labels = {1};
  const Gradients g = backprop_grads(model, DatasetView::all(data));
  for (double v : g.layers[0].weights.values()) EXPECT_EQ(v, 0.0);
}

TEST(BackpropTest, DuplicatedExampleGivesSameGradient) {
  const MlpModel model = random_model({4, 5, 3}, 2);
  const Dataset one = random_dataset(1, 4, 3, 8);
  Dataset two = one;
  two.features = DenseMatrix(2, 4);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 4; ++c) two.features(r, c) = one.features(0, c);
  }
  two.labels = {one.labels[0], one.labels[0]};
  const auto a = flatten(backprop_grads(model, DatasetView::all(one)).layers);
  const auto b = flatten(backprop_grads(model, DatasetView::all(two)).layers);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(BackpropTest, EmptyBatchRejected) {
  const MlpModel model = random_model({4, 3}, 2);
  const Dataset data = random_dataset(3, 4, 3, 1);
  EXPECT_THROW(backprop_grads(model, DatasetView(data, {})), ArgumentError);
}

TEST(SgdTest, FullBatchSingleEpochIsOneGradientStep) {
  const MlpModel model = random_model({5, 7, 3}, 31);
  const Dataset data = random_dataset(20, 5, 3, 32);
  const DatasetView view = DatasetView::all(data);
  TrainSpec spec{.epochs = 1, .batch_size = 64, .learning_rate = 0.05};
  RngStream rng(1);
  const MlpModel trained = sgd_train_local(model, view, spec, rng);
  MlpModel expected = model;
  apply_step(expected, backprop_grads(model, view), 0.05);
  EXPECT_EQ(trained, expected);
}

TEST(SgdTest, ZeroEpochsIsIdentity) {
  const MlpModel model = random_model({5, 3}, 31);
  const Dataset data = random_dataset(20, 5, 3, 32);
  TrainSpec spec{.epochs = 0, .batch_size = 4, .learning_rate = 0.05};
  RngStream rng(1);
  EXPECT_EQ(sgd_train_local(model, DatasetView::all(data), spec, rng), model);
}

TEST(SgdTest, Deterministic) {
  const MlpModel model = random_model({5, 6, 3}, 1);
  const Dataset data = random_dataset(50, 5, 3, 2);
  TrainSpec spec{.epochs = 3, .batch_size = 8, .learning_rate = 0.1};
  RngStream a(77);
  RngStream b(77);
  EXPECT_EQ(sgd_train_local(model, DatasetView::all(data), spec, a),
            sgd_train_local(model, DatasetView::all(data), spec, b));
}

TEST(SgdTest, SeparableToySetReachesFullAccuracy) {
  RngStream rng(5);
  Dataset data;
  data.class_count = 2;
  data.features = DenseMatrix(100, 2);
  for (std::size_t i = 0; i < 100; ++i) {
    const int y = static_cast<int>(i % 2);
    data.features(i, 0) = (y ? 2.0 : -2.0) + 0.5 * rng.normal();
    data.features(i, 1) = rng.normal();
    data.labels.push_back(y);
  }
  RngStream init(6);
  const std::vector<std::size_t> widths{2, 8, 2};
  const MlpModel model = MlpModel::initialize(widths, init);
  TrainSpec spec{.epochs = 50, .batch_size = 10, .learning_rate = 0.1};
  const MlpModel trained = sgd_train_local(model, DatasetView::all(data), spec, rng);
  EXPECT_EQ(eval_accuracy(trained, DatasetView::all(data)), 1.0);
}

TEST(SgdTest, EmptyDataRejected) {
  const MlpModel model = random_model({4, 3}, 2);
  const Dataset data = random_dataset(3, 4, 3, 1);
  RngStream rng(1);
  EXPECT_THROW(sgd_train_local(model, DatasetView(data, {}), TrainSpec{}, rng), ArgumentError);
}

TEST(AccuracyTest, CountsCorrectRecords) {
  // Single linear layer that predicts class 1 iff x0 > 0.
  std::vector<DenseLayer> layers(1);
  layers[0].weights = DenseMatrix(2, 1, {-1.0, 1.0});
  layers[0].bias = {0.0, 0.0};
  const MlpModel model(layers);
  Dataset data;
  data.class_count = 2;
  data.features = DenseMatrix(100, 1);
  for (std::size_t i = 0; i < 100; ++i) {
    data.features(i, 0) = 1.0;
    data.labels.push_back(i < 60 ? 1 : 0);
  }
  EXPECT_DOUBLE_EQ(eval_accuracy(model, DatasetView::all(data)), 0.6);
  for (auto& y : data.labels) y = 1;
  EXPECT_DOUBLE_EQ(eval_accuracy(model, DatasetView::all(data)), 1.0);
}

TEST(AccuracyTest, MatchesCountingOracle) {
  const MlpModel model = random_model({6, 9, 4}, 41);
  const Dataset data = random_dataset(300, 6, 4, 42);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto logits = forward_logits(model, data.features.row(i));
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c) {
      if (logits[c] > logits[best]) best = c;
    }
    correct += static_cast<int>(best) == data.labels[i];
  }
  EXPECT_DOUBLE_EQ(eval_accuracy(model, DatasetView::all(data)),
                   static_cast<double>(correct) / 300.0);
}

TEST(AccuracyTest, EmptyViewRejected) {
  const MlpModel model = random_model({4, 3}, 2);
  const Dataset data = random_dataset(3, 4, 3, 1);
  EXPECT_THROW(eval_accuracy(model, DatasetView(data, {})), ArgumentError);
}

TEST(ArgmaxTest, LowestIndexOnTies) {
  const std::vector<double> v{0.1, 0.7, 0.7, 0.2};
  EXPECT_EQ(argmax(v), 1u);
}

TEST(DistillTest, PredictProbaRowsSumToOne) {
  const MlpModel model = random_model({5, 6, 4}, 3);
  const Dataset data = random_dataset(30, 5, 4, 4);
  const DenseMatrix p = predict_proba(model, data.features);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double total = 0.0;
    for (double v : p.row(r)) {
      EXPECT_GT(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(DistillTest, TrainingReducesMse) {
  const MlpModel model = random_model({5, 6, 4}, 3);
  const Dataset data = random_dataset(100, 5, 4, 4);
  DenseMatrix targets(100, 4, 0.0);
  for (std::size_t r = 0; r < 100; ++r) targets(r, data.labels[r]) = 1.0;
  RngStream rng(5);
  TrainSpec spec{.epochs = 20, .batch_size = 10, .learning_rate = 0.5};
  const MlpModel trained = sgd_train_distill(model, data.features, targets, spec, rng);
  EXPECT_LT(distill_mse(trained, data.features, targets),
            distill_mse(model, data.features, targets));
}

}  // namespace
}  // namespace fedsia
