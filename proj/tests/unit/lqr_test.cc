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

#include "trc/lqr.h"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "test_util.h"
#include "trc/errors.h"

namespace trc {
namespace {

GTEST_TEST(RiccatiTest, ZeroWeightsGiveZeroCost) {
  LqrProblem lqr;
  lqr.a = Eigen::Matrix2d::Identity();
  lqr.b = Eigen::MatrixXd::Ones(2, 1);
  lqr.q = Eigen::Matrix2d::Zero();
  lqr.r = Eigen::MatrixXd::Ones(1, 1);
  lqr.qf = Eigen::Matrix2d::Zero();
  lqr.horizon = 5;
  const LqrSolution s = RiccatiLqr(lqr, Eigen::Vector2d(1, -1));
  EXPECT_EQ(s.cost, 0.0);
  EXPECT_EQ(s.controls.cwiseAbs().maxCoeff(), 0.0);
}

GTEST_TEST(RiccatiTest, ScalarOneStepByHand) {
  LqrProblem lqr;
  lqr.a = Eigen::MatrixXd::Ones(1, 1);
  lqr.b = Eigen::MatrixXd::Ones(1, 1);
  lqr.q = Eigen::MatrixXd::Ones(1, 1);
  lqr.r = Eigen::MatrixXd::Ones(1, 1);
  lqr.qf = Eigen::MatrixXd::Ones(1, 1);
  lqr.horizon = 1;
  const LqrSolution s = RiccatiLqr(lqr, Eigen::VectorXd::Ones(1));
  EXPECT_DOUBLE_EQ(s.cost, 1.5);
  EXPECT_DOUBLE_EQ(s.cost_to_go[0](0, 0), 1.5);
}

GTEST_TEST(RiccatiTest, SingularInputWeightThrows) {
  LqrProblem lqr;
  lqr.a = Eigen::MatrixXd::Ones(1, 1);
  lqr.b = Eigen::MatrixXd::Zero(1, 1);
  lqr.q = Eigen::MatrixXd::Ones(1, 1);
  lqr.r = Eigen::MatrixXd::Zero(1, 1);
  lqr.qf = Eigen::MatrixXd::Ones(1, 1);
  lqr.horizon = 2;
  EXPECT_THROW(RiccatiLqr(lqr, Eigen::VectorXd::Ones(1)), std::exception);
}

GTEST_TEST(RiccatiTest, ControlsAchieveReportedCost) {
  std::mt19937_64 rng(5);
  const LqrProblem lqr = testing::RandomDoubleIntegrator(rng, 0.1, 20);
  const Eigen::Vector2d x0(1, 0);
  const LqrSolution s = RiccatiLqr(lqr, x0);
  EXPECT_NEAR(LqrCost(lqr, x0, s.controls), s.cost, 1e-10 * s.cost);
}

// Exhaustive search over 21 control levels per step, T <= 3.
GTEST_TEST(RiccatiTest, MatchesBruteForceGrid) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    LqrProblem lqr;
    // Random stable A (spectral radius < 1).
    Eigen::Matrix2d a;
    a << unit(rng), unit(rng), unit(rng), unit(rng);
    const double rho = Eigen::EigenSolver<Eigen::Matrix2d>(a)
                           .eigenvalues()
                           .cwiseAbs()
                           .maxCoeff();
    lqr.a = a * (0.9 / std::max(rho, 0.9));
    lqr.b = Eigen::Vector2d(unit(rng), 1.0);
    lqr.q = Eigen::Matrix2d::Identity();
    lqr.r = Eigen::MatrixXd::Constant(1, 1, 0.5);
    lqr.qf = 2.0 * Eigen::Matrix2d::Identity();
    lqr.horizon = 3;
    const Eigen::Vector2d x0(unit(rng), unit(rng));
    const LqrSolution s = RiccatiLqr(lqr, x0);

    const double half = 1.2 * s.controls.cwiseAbs().maxCoeff() + 0.1;
    const int levels = 21;
    const double step = 2.0 * half / (levels - 1);
    double best = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd u(3, 1);
    for (int i = 0; i < levels; ++i) {
      for (int j = 0; j < levels; ++j) {
        for (int k = 0; k < levels; ++k) {
          u << -half + i * step, -half + j * step, -half + k * step;
          best = std::min(best, LqrCost(lqr, x0, u));
        }
      }
    }
    // The cost is quadratic in u, so rounding each entry by at most step/2
    // costs at most lambda_max(H) / 2 * T * (step / 2)^2.
    Eigen::Matrix3d h;
    const double eps = 1e-3;
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) {
        Eigen::MatrixXd up = s.controls, um = s.controls, mp = s.controls,
                        mm = s.controls;
        up(p, 0) += eps; up(q, 0) += eps;
        um(p, 0) += eps; um(q, 0) -= eps;
        mp(p, 0) -= eps; mp(q, 0) += eps;
        mm(p, 0) -= eps; mm(q, 0) -= eps;
        h(p, q) = (LqrCost(lqr, x0, up) - LqrCost(lqr, x0, um) -
                   LqrCost(lqr, x0, mp) + LqrCost(lqr, x0, mm)) /
                  (4 * eps * eps);
      }
    }
    const double lmax =
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(h).eigenvalues().maxCoeff();
    const double bound = 0.5 * lmax * 3 * (step / 2) * (step / 2);
    EXPECT_GE(best, s.cost - 1e-10);
    EXPECT_LE(best - s.cost, bound + 1e-10) << "trial " << trial;
  }
}

}  // namespace
}  // namespace trc
