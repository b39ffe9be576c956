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

#ifndef TRC_ANALYSIS_H_
#define TRC_ANALYSIS_H_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "trc/config_io.h"
#include "trc/training.h"

namespace trc {

struct Pca2d {
  Eigen::MatrixXd projections;  // N x 2
  Eigen::MatrixXd components;   // d x 2, unit columns
  Eigen::VectorXd mean;         // d
  Eigen::VectorXd eigenvalues;  // all, descending; covariance uses 1/N
  double explained[2] = {0.0, 0.0};  // fraction of total variance
};

// Principal components of the rows of `points` (N >= 2). Each component's
// largest-magnitude entry is made positive.
Pca2d FitPca2d(const Eigen::MatrixXd& points);

// Linear-interpolation quantile, q in [0, 1].
double Quantile(std::vector<double> values, double q);

// Column layouts are fixed:
//   refinement.csv   sample_id,iteration,cost,residual_norm,control_mean,
//                    control_std,control_min,control_max
//   refinement_quantiles.csv
//                    iteration,cost_p25,cost_p50,cost_p75,
//                    normalized_cost_p25,normalized_cost_p50,
//                    normalized_cost_p75,control_std_p25,control_std_p50,
//                    control_std_p75
//   latents.csv      sample_id,iteration,pc1,pc2,final_cost
//   training_metrics.csv
//                    epoch,control_loss,improvement_metric,total_loss,
//                    validation_loss,learning_rate,skipped_steps,
//                    normalized_cost_0..normalized_cost_K
// residual_norm is empty on iteration 0. Rocket control statistics are over
// thrust magnitudes.
std::string RefinementCsv(const EvalReport& report);
std::string RefinementQuantilesCsv(const EvalReport& report);
// PCA over the z_H snapshots of every sample and iteration together.
std::string LatentsCsv(const EvalReport& report, Pca2d* pca = nullptr);
std::string MetricsCsv(const std::vector<MetricsRecord>& history);

// Aggregate fields of the report (per-sample arrays omitted).
Json SummaryJson(const EvalReport& report);

}  // namespace trc

#endif  // TRC_ANALYSIS_H_
