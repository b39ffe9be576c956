// Copyright 2026 The TRC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trc/training.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_util.h"
#include "trc/errors.h"
#include "trc/ops.h"

namespace trc {
namespace {

// A record with K iterations whose controls are all `u` and whose costs
// are `costs` broadcast over one lane.
ForwardRecord SyntheticRecord(const Tensor& u,
                              const std::vector<double>& costs) {
  ForwardRecord r;
  for (double c : costs) {
    r.controls.push_back(u);
    r.costs.push_back(Tensor({1}, {c}));
  }
  return r;
}

GTEST_TEST(LossTest, ZeroLambdaIsBehaviorCloning) {
  std::mt19937_64 rng(1);
  const Tensor u = testing::RandomTensor({3, 10, 2}, rng);
  const Tensor u_star = testing::RandomTensor({3, 10, 2}, rng).Detach();
  ForwardRecord r;
  for (int k = 0; k < 4; ++k) {
    r.controls.push_back(u);
    r.costs.push_back(Tensor({3}, {4.0 - k, 3.0, 2.0}));
  }
  const Normalizer norm = Normalizer::Identity(2, 2);
  const LossTerms terms = ProcessSupervisionLoss(r, u_star, norm, 0.0);
  double expected = 0.0;
  for (int i = 0; i < 60; ++i) {
    const double d = u.at(i) - u_star.at(i);
    expected += d * d;
  }
  expected /= 3.0;
  EXPECT_EQ(terms.total.item(), terms.control.item());
  EXPECT_NEAR(terms.total.item(), expected, 1e-12);
}

GTEST_TEST(LossTest, ImprovementArithmetic) {
  const Tensor u = Tensor::Zeros({1, 4, 1});
  const ForwardRecord r = SyntheticRecord(u, {10.0, 7.0, 5.0, 4.0});
  const LossTerms terms =
      ProcessSupervisionLoss(r, u, Normalizer::Identity(2, 1), 0.1);
  EXPECT_NEAR(terms.improvement.item(), 0.25, 1e-15);
  EXPECT_NEAR(terms.total.item(), -0.025, 1e-15);
}

GTEST_TEST(LossTest, ZeroAtOptimum) {
  std::mt19937_64 rng(2);
  const Tensor u = testing::RandomTensor({2, 5, 1}, rng).Detach();
  ForwardRecord r;
  for (int k = 0; k < 4; ++k) {
    r.controls.push_back(u);
    r.costs.push_back(Tensor({2}, {3.0, 3.0}));
  }
  const LossTerms terms =
      ProcessSupervisionLoss(r, u, Normalizer::Identity(2, 1), 0.5);
  EXPECT_EQ(terms.total.item(), 0.0);
}

GTEST_TEST(LossTest, RejectsBadInput) {
  const Tensor u = Tensor::Zeros({1, 4, 1});
  const ForwardRecord r = SyntheticRecord(u, {1.0, 1.0});
  const Normalizer norm = Normalizer::Identity(2, 1);
  EXPECT_THROW(ProcessSupervisionLoss(r, Tensor::Zeros({1, 5, 1}), norm, 0.1),
               DimensionError);
  EXPECT_THROW(ProcessSupervisionLoss(r, u, norm, -1.0), ContractError);
  const ForwardRecord bad = SyntheticRecord(
      Tensor::Full({1, 4, 1}, std::numeric_limits<double>::quiet_NaN()),
      {1.0, 1.0});
  EXPECT_THROW(ProcessSupervisionLoss(bad, u, norm, 0.1), TrainingError);
}

GTEST_TEST(ImprovementMetricTest, Examples) {
  EXPECT_NEAR(ImprovementMetric({{10.0, 7.0, 5.0}}, 3), 0.25, 1e-15);
  EXPECT_EQ(ImprovementMetric({{4.0, 4.0, 4.0, 4.0}}, 3), 0.0);
  EXPECT_EQ(ImprovementMetric({{4.0, 2.0}}, 1), 0.0);
}

GTEST_TEST(ImprovementMetricTest, ScaleInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.5, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> costs(5, std::vector<double>(4));
    for (auto& row : costs) {
      for (double& c : row) c = d(rng);
    }
    const double c = d(rng);
    auto scaled = costs;
    for (auto& row : scaled) {
      for (double& v : row) v *= c;
    }
    EXPECT_NEAR(ImprovementMetric(costs, 3), ImprovementMetric(scaled, 3),
                1e-12);
  }
}

GTEST_TEST(OptimizerTest, FirstAdamStep) {
  Tensor w = Tensor::Scalar(1.0);
  w.set_requires_grad(true);
  w.mutable_grad()[0] = 1.0;
  TrainConfig c;
  c.learning_rate = 0.1;
  c.weight_decay = 0.0;
  c.grad_clip_norm = 10.0;
  AdamW opt({w}, c, 1'000'000);
  const AdamW::StepReport rep = opt.Step();
  EXPECT_FALSE(rep.skipped);
  EXPECT_NEAR(w.item(), 0.9, 1e-6);
}

GTEST_TEST(OptimizerTest, ClipScalesGlobalNorm) {
  Tensor a = Tensor::Zeros({2});
  Tensor b = Tensor::Zeros({1});
  a.mutable_grad()[0] = 3.0;
  b.mutable_grad()[0] = 4.0;
  std::vector<Tensor> params = {a, b};
  EXPECT_DOUBLE_EQ(ClipGradNorm(params, 1.0), 5.0);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-15);
  EXPECT_NEAR(b.grad()[0], 0.8, 1e-15);
  EXPECT_LE(std::hypot(a.grad()[0], b.grad()[0]), 1.0 + 1e-12);
  // Already inside the ball: untouched.
  EXPECT_NEAR(ClipGradNorm(params, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-15);
}

GTEST_TEST(OptimizerTest, ClipPropertyOverRandomGradients) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Tensor> params = {Tensor::Zeros({7}), Tensor::Zeros({3, 2})};
    for (Tensor& t : params) {
      for (double& g : t.mutable_grad()) g = n(rng);
    }
    ClipGradNorm(params, 1.0);
    double s = 0.0;
    for (const Tensor& t : params) {
      for (double g : t.grad()) s += g * g;
    }
    EXPECT_LE(std::sqrt(s), 1.0 + 1e-12);
  }
}

GTEST_TEST(OptimizerTest, NonFiniteGradientSkipsStep) {
  Tensor w = Tensor::Full({2}, 1.0);
  w.set_requires_grad(true);
  w.mutable_grad()[1] = std::numeric_limits<double>::infinity();
  AdamW opt({w}, TrainConfig{}, 10);
  EXPECT_TRUE(opt.Step().skipped);
  EXPECT_EQ(w.values(), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(opt.skipped_steps(), 1);
}

GTEST_TEST(OptimizerTest, CosineSchedule) {
  EXPECT_DOUBLE_EQ(CosineLearningRate(1e-3, 0, 100), 1e-3);
  EXPECT_NEAR(CosineLearningRate(1e-3, 50, 100), 5e-4, 1e-15);
  EXPECT_NEAR(CosineLearningRate(1e-3, 100, 100), 0.0, 1e-18);
  double prev = 1.0;
  for (int s = 0; s <= 100; ++s) {
    const double lr = CosineLearningRate(1e-3, s, 100);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

GTEST_TEST(SplitTest, PartitionAndDeterminism) {
  const auto [train, val] = SplitIndices(100, 0.1, 7);
  EXPECT_EQ(train.size(), 90u);
  EXPECT_EQ(val.size(), 10u);
  std::vector<int> all = train;
  all.insert(all.end(), val.begin(), val.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(SplitIndices(100, 0.1, 7), SplitIndices(100, 0.1, 7));
  EXPECT_EQ(SplitIndices(10, 0.0, 7).second.size(), 0u);
}

class TinyTrainingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    problem_ = VanDerPolProblem();
    problem_.horizon = 20;
    OracleConfig oc;
    oc.max_iters = 300;
    oc.restarts = 1;
    data_ = GenerateDataset(problem_, 24, oc, 5).samples;
    config_ = TrcConfig::ForProblem(problem_);
    config_.latent_dim = 16;
    config_.hidden_dim = 32;
    config_.num_blocks = 1;
    config_.num_heads = 2;
    config_.inner_cycles = 2;
    train_.epochs = 3;
    train_.batch_size = 8;
    train_.validation_fraction = 0.25;
    train_.seed = 9;
  }

  ControlProblem problem_;
  std::vector<Sample> data_;
  TrcConfig config_;
  TrainConfig train_;
};

TEST_F(TinyTrainingTest, SeedDeterminism) {
  const TrainResult a = Train(problem_, data_, config_, train_);
  const TrainResult b = Train(problem_, data_, config_, train_);
  ASSERT_EQ(a.history.size(), 3u);
  for (size_t e = 0; e < a.history.size(); ++e) {
    EXPECT_EQ(a.history[e].epoch, static_cast<int>(e));
    EXPECT_EQ(a.history[e].total_loss, b.history[e].total_loss);
    EXPECT_EQ(a.history[e].validation_loss, b.history[e].validation_loss);
  }
  const auto pa = a.final_model.ParameterTensors();
  const auto pb = b.final_model.ParameterTensors();
  for (size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].values(), pb[i].values());
  }
}

TEST_F(TinyTrainingTest, CallbackSeesEveryEpoch) {
  int calls = 0;
  Train(problem_, data_, config_, train_,
        [&](const MetricsRecord& m) {
          EXPECT_EQ(m.epoch, calls++);
          EXPECT_TRUE(std::isfinite(m.total_loss));
          EXPECT_EQ(m.normalized_cost_per_iter.size(), 4u);
        });
  EXPECT_EQ(calls, 3);
}

TEST_F(TinyTrainingTest, OracleSelfComparisonIsExact) {
  std::vector<Eigen::MatrixXd> controls;
  for (const Sample& s : data_) controls.push_back(s.u_star);
  const EvalReport r = EvaluateControls(problem_, data_, controls);
  EXPECT_EQ(r.cost_ratio, 1.0);
}

TEST_F(TinyTrainingTest, UntrainedModelIsWorseThanOracle) {
  const TrcModel m(problem_, config_, Normalizer::Fit(data_), 3);
  const EvalReport r = Evaluate(m, data_);
  EXPECT_GT(r.cost_ratio, 1.0);
  EXPECT_EQ(r.costs.size(), data_.size());
  EXPECT_EQ(r.residual_norms[0].size(), 3u);
  EXPECT_EQ(r.latents[0].size(), 4u);
  EXPECT_GE(r.monotone_fraction, 0.0);
  EXPECT_LE(r.monotone_fraction, 1.0);
}

GTEST_TEST(MonotoneTest, Fraction) {
  EXPECT_DOUBLE_EQ(MonotoneFraction({{3, 2, 1}, {3, 4, 1}}), 0.5);
  EXPECT_DOUBLE_EQ(MonotoneFraction({{3, 3, 3}}), 1.0);
}

GTEST_TEST(CollapseTest, Ratio) {
  Eigen::VectorXd a(2), b(2);
  a << 0, 0;
  b << 2, 0;
  const std::vector<std::vector<Eigen::VectorXd>> latents = {
      {a, a * 0.5}, {b, b * 0.5}};
  EXPECT_NEAR(LatentCollapseRatio(latents), 0.5, 1e-15);
  const std::vector<double> spread = LatentSpread(latents);
  ASSERT_EQ(spread.size(), 2u);
  EXPECT_DOUBLE_EQ(spread[0], 2.0);
  EXPECT_DOUBLE_EQ(spread[1], 1.0);
  EXPECT_THROW(LatentSpread({{a}}), ContractError);
}

}  // namespace
}  // namespace trc
