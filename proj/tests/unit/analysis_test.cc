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

#include "trc/analysis.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "trc/errors.h"

namespace trc {
namespace {

Eigen::MatrixXd RandomPoints(int n, int d, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd p(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) p(i, j) = g(rng) * (j + 1);
  }
  return p;
}

int CountLines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

GTEST_TEST(PcaTest, CollinearPointsUseOneComponent) {
  Eigen::MatrixXd p(4, 3);
  for (int i = 0; i < 4; ++i) p.row(i) << i, 2.0 * i, -1.0 * i;
  const Pca2d pca = FitPca2d(p);
  EXPECT_NEAR(pca.explained[0], 1.0, 1e-12);
  EXPECT_NEAR(pca.explained[1], 0.0, 1e-12);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(pca.projections(i, 1), 0.0, 1e-12);
}

GTEST_TEST(PcaTest, ReconstructionErrorIsDiscardedVariance) {
  const Eigen::MatrixXd p = RandomPoints(60, 5, 1);
  const Pca2d pca = FitPca2d(p);
  const Eigen::MatrixXd centered = p.rowwise() - pca.mean.transpose();
  const Eigen::MatrixXd recon = pca.projections * pca.components.transpose();
  const double err = (centered - recon).squaredNorm() / p.rows();
  double discarded = 0.0;
  for (int i = 2; i < pca.eigenvalues.size(); ++i) {
    discarded += pca.eigenvalues(i);
  }
  EXPECT_NEAR(err, discarded, 1e-8);
  EXPECT_GE(pca.eigenvalues(0), pca.eigenvalues(1));
  EXPECT_NEAR(pca.components.col(0).norm(), 1.0, 1e-12);
  EXPECT_NEAR(pca.components.col(0).dot(pca.components.col(1)), 0.0, 1e-12);
}

GTEST_TEST(PcaTest, InvariantToRowOrder) {
  const Eigen::MatrixXd p = RandomPoints(30, 4, 2);
  Eigen::MatrixXd reversed = p.colwise().reverse();
  const Pca2d a = FitPca2d(p);
  const Pca2d b = FitPca2d(reversed);
  for (int i = 0; i < 30; ++i) {
    EXPECT_NEAR(a.projections(i, 0), b.projections(29 - i, 0), 1e-9);
    EXPECT_NEAR(a.projections(i, 1), b.projections(29 - i, 1), 1e-9);
  }
}

GTEST_TEST(PcaTest, NeedsTwoPoints) {
  EXPECT_THROW(FitPca2d(Eigen::MatrixXd::Zero(1, 3)), ContractError);
}

GTEST_TEST(QuantileTest, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(Quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(Quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(Quantile({4, 1, 3, 2}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(Quantile({0, 10}, 0.25), 2.5);
  EXPECT_DOUBLE_EQ(Quantile({7}, 0.75), 7.0);
}

EvalReport SyntheticReport(int n, int k) {
  EvalReport r;
  r.system = "vdp";
  r.num_samples = n;
  r.outer_iterations = k;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> costs;
    std::vector<double> norms;
    std::vector<ControlStats> stats;
    std::vector<Eigen::VectorXd> latents;
    for (int j = 0; j <= k; ++j) {
      costs.push_back(u(rng) / (j + 1));
      if (j > 0) norms.push_back(u(rng));
      stats.push_back({u(rng), u(rng), -1.0, 1.0});
      latents.push_back(Eigen::VectorXd::Constant(4, u(rng)) +
                        Eigen::VectorXd::LinSpaced(4, 0, j));
    }
    r.costs.push_back(costs);
    r.residual_norms.push_back(norms);
    r.control_stats.push_back(stats);
    r.latents.push_back(latents);
    r.final_costs.push_back(costs.back());
  }
  return r;
}

GTEST_TEST(CsvTest, RefinementRowsAndHeader) {
  const EvalReport r = SyntheticReport(100, 3);
  const std::string csv = RefinementCsv(r);
  EXPECT_EQ(CountLines(csv), 401);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "sample_id,iteration,cost,residual_norm,control_mean,"
            "control_std,control_min,control_max");
  std::istringstream in(csv);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  // Iteration 0 has no residual.
  EXPECT_NE(first.find(",,"), std::string::npos);
}

GTEST_TEST(CsvTest, QuantilesAndLatents) {
  const EvalReport r = SyntheticReport(20, 3);
  EXPECT_EQ(CountLines(RefinementQuantilesCsv(r)), 5);
  Pca2d pca;
  const std::string latents = LatentsCsv(r, &pca);
  EXPECT_EQ(CountLines(latents), 81);
  EXPECT_EQ(pca.projections.rows(), 80);
}

GTEST_TEST(CsvTest, MetricsColumns) {
  MetricsRecord m;
  m.epoch = 4;
  m.normalized_cost_per_iter = {1.0, 0.5};
  const std::string csv = MetricsCsv({m});
  EXPECT_EQ(CountLines(csv), 2);
  EXPECT_NE(csv.find("normalized_cost_1"), std::string::npos);
  EXPECT_EQ(csv.substr(csv.find('\n') + 1, 2), "4,");
}

GTEST_TEST(SummaryTest, HasHeadlineFields) {
  EvalReport r = SyntheticReport(4, 3);
  r.cost_ratio = 1.25;
  const Json j = SummaryJson(r);
  EXPECT_EQ(j.at("cost_ratio").get<double>(), 1.25);
  EXPECT_EQ(j.at("system").get<std::string>(), "vdp");
  EXPECT_FALSE(j.contains("fuel_ratio"));
}

}  // namespace
}  // namespace trc
