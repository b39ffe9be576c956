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

#include "trc/oracle.h"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"
#include "trc/errors.h"
#include "trc/lqr.h"

namespace trc {
namespace {

double RolloutCost(const ControlProblem& p, const Sample& s) {
  return Rollout(p, TileRows(s.x0, 1), ControlsTensor(s.u_star),
                 TileRows(s.x_target, 1))
      .cost.item();
}

GTEST_TEST(OracleTest, VdpAtTargetStaysPut) {
  const ControlProblem p = VanDerPolProblem();
  const Sample s = SolveDirectShooting(p, Eigen::Vector2d::Zero(), {});
  EXPECT_LT(s.u_star.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(s.j_star, 1e-9);
}

GTEST_TEST(OracleTest, DoubleIntegratorMatchesRiccati) {
  LqrProblem lqr;
  const double dt = 0.1;
  lqr.a = (Eigen::MatrixXd(2, 2) << 1, dt, 0, 1).finished();
  lqr.b = (Eigen::MatrixXd(2, 1) << 0, dt).finished();
  lqr.q = Eigen::Matrix2d::Identity();
  lqr.r = Eigen::MatrixXd::Ones(1, 1);
  lqr.qf = 10.0 * Eigen::Matrix2d::Identity();
  lqr.horizon = 20;
  const Eigen::Vector2d x0(1, 0);
  const double riccati = RiccatiLqr(lqr, x0).cost;
  const Sample s =
      SolveDirectShooting(testing::AsControlProblem(lqr), x0, OracleConfig{});
  EXPECT_LE(s.j_star, 1.01 * riccati);
  EXPECT_GE(s.j_star, riccati * (1 - 1e-9));
  EXPECT_NEAR(LqrCost(lqr, x0, s.u_star), s.j_star, 1e-9 * s.j_star);
}

GTEST_TEST(OracleTest, SamplesReproduceCostAndRespectBounds) {
  for (const ControlProblem& p : {VanDerPolProblem(), RocketProblem()}) {
    std::mt19937_64 rng(3);
    const InitialStateSampler sampler = DefaultInitialStateSampler(p);
    std::vector<Eigen::VectorXd> x0s, targets;
    for (int i = 0; i < 4; ++i) {
      x0s.push_back(sampler(rng));
      targets.push_back(p.x_target);
    }
    OracleConfig config;
    config.max_iters = 300;
    for (const SolveReport& r :
         SolveDirectShootingBatch(p, x0s, targets, config)) {
      ASSERT_TRUE(r.ok) << r.failure;
      const Sample& s = r.sample;
      EXPECT_NEAR(RolloutCost(p, s), s.j_star, 1e-9 * std::abs(s.j_star));
      for (int t = 0; t < p.horizon; ++t) {
        for (int c = 0; c < p.control_dim; ++c) {
          EXPECT_GE(s.u_star(t, c), p.u_min(c));
          EXPECT_LE(s.u_star(t, c), p.u_max(c));
        }
      }
      for (size_t k = 1; k < r.cost_history.size(); ++k) {
        EXPECT_LE(r.cost_history[k], r.cost_history[k - 1]);
      }
    }
  }
}

GTEST_TEST(OracleTest, RocketSolutionSatisfiesThrustNorm) {
  const ControlProblem p = RocketProblem();
  Eigen::VectorXd x0(7);
  x0 << 300, -200, 2000, 10, -20, -75, 1900;
  const Sample s = SolveDirectShooting(p, x0, OracleConfig{});
  for (int t = 0; t < p.horizon; ++t) {
    const double n = s.u_star.row(t).norm();
    EXPECT_GE(n, p.rocket.thrust_min * (1 - 1e-9));
    EXPECT_LE(n, p.rocket.thrust_max * (1 + 1e-9));
  }
  const Trajectory traj = Rollout(p, TileRows(x0, 1), ControlsTensor(s.u_star));
  const double fuel = FuelUsed(p, traj.states).item();
  EXPECT_GT(fuel, 0.0);
  EXPECT_LT(fuel, 900.0);
}

GTEST_TEST(OracleTest, BatchResultsIndependentOfGrouping) {
  const ControlProblem p = VanDerPolProblem();
  const std::vector<Eigen::VectorXd> x0s = {Eigen::Vector2d(1.0, -0.5),
                                            Eigen::Vector2d(-1.5, 1.2)};
  const std::vector<Eigen::VectorXd> targets(2, p.x_target);
  OracleConfig config;
  config.max_iters = 200;
  const auto both = SolveDirectShootingBatch(p, x0s, targets, config, {7, 8});
  const auto second =
      SolveDirectShootingBatch(p, {x0s[1]}, {targets[1]}, config, {8});
  EXPECT_EQ(both[1].sample.j_star, second[0].sample.j_star);
  EXPECT_EQ(both[1].sample.u_star, second[0].sample.u_star);
}

GTEST_TEST(OracleTest, FirstOrderOptimalityWithInactiveBounds) {
  const ControlProblem p = VanDerPolProblem();
  const Eigen::Vector2d x0(0.5, -0.3);
  OracleConfig config;
  const Sample s = SolveDirectShooting(p, x0, config);
  ASSERT_LT(s.u_star.cwiseAbs().maxCoeff(), 0.99 * p.u_max(0));
  const Eigen::MatrixXd g = TrueCostGradient(p, x0, p.x_target, s.u_star);
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 10 * config.convergence_tol);
}

GTEST_TEST(TrueCostGradientTest, MatchesFiniteDifferences) {
  const ControlProblem p = VanDerPolProblem();
  std::mt19937_64 rng(21);
  Tensor u = testing::RandomTensor({1, p.horizon, 1}, rng, -1, 1);
  const Tensor x0({1, 2}, {0.7, -1.3});
  const Tensor target = TileRows(p.x_target, 1);
  const Tensor g = TrueCostGradient(p, x0, target, u.Detach());
  const double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < p.horizon; ++i) {
    Tensor up = u.Detach(), down = u.Detach();
    up.mutable_data()[i] += h;
    down.mutable_data()[i] -= h;
    const double fd = (Rollout(p, x0, up, target).cost.item() -
                       Rollout(p, x0, down, target).cost.item()) /
                      (2 * h);
    worst = std::max(worst, std::abs(fd - g.at(i)) /
                                std::max(std::abs(g.at(i)), 1e-3));
  }
  EXPECT_LT(worst, 1e-5);
}

GTEST_TEST(TrueCostGradientTest, ZeroAtRest) {
  const ControlProblem p = VanDerPolProblem();
  const Eigen::MatrixXd g = TrueCostGradient(
      p, Eigen::Vector2d::Zero(), p.x_target, Eigen::MatrixXd::Zero(100, 1));
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-12);
}

GTEST_TEST(DatasetTest, DeterministicUnderSeed) {
  const ControlProblem p = VanDerPolProblem();
  OracleConfig config;
  config.max_iters = 100;
  const Dataset a = GenerateDataset(p, 6, config, 42);
  const Dataset b = GenerateDataset(p, 6, config, 42);
  ASSERT_EQ(a.samples.size(), 6u);
  for (size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].x0, b.samples[i].x0);
    EXPECT_EQ(a.samples[i].u_star, b.samples[i].u_star);
    EXPECT_EQ(a.samples[i].j_star, b.samples[i].j_star);
    EXPECT_LE(a.samples[i].x0.cwiseAbs().maxCoeff(), 2.0);
  }
}

GTEST_TEST(DatasetTest, RocketInitialStatesInRange) {
  const ControlProblem p = RocketProblem();
  const InitialStateSampler sampler = DefaultInitialStateSampler(p);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd x = sampler(rng);
    EXPECT_LE(x.head<2>().norm(), 500.0);
    EXPECT_GE(x(2), 1500.0);
    EXPECT_LE(x(2), 2500.0);
    EXPECT_LE(x.segment<2>(3).norm(), 50.0);
    EXPECT_GE(x(5), -100.0);
    EXPECT_LE(x(5), -50.0);
    EXPECT_GE(x(6), 1800.0);
    EXPECT_LE(x(6), 2000.0);
  }
}

}  // namespace
}  // namespace trc
