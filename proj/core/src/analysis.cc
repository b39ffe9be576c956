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

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "trc/errors.h"

namespace trc {
namespace {

// Shortest representation that parses back to the same double.
std::string Num(double v) { return fmt::format("{}", v); }

}  // namespace

Pca2d FitPca2d(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw ContractError("PCA needs at least two points");
  Pca2d out;
  out.mean = points.colwise().mean().transpose();
  const Eigen::MatrixXd centered = points.rowwise() - out.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("covariance eigen-decomposition failed");
  }
  const Eigen::Index d = cov.rows();
  out.eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const int k = static_cast<int>(std::min<Eigen::Index>(2, d));
  out.components = Eigen::MatrixXd::Zero(d, 2);
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd v = vectors.col(c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.components.col(c) = v;
  }
  out.projections = centered * out.components;
  const double total = out.eigenvalues.sum();
  for (int c = 0; c < k; ++c) {
    out.explained[c] = total > 0.0 ? out.eigenvalues(c) / total : 0.0;
  }
  return out;
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * (values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

std::string RefinementCsv(const EvalReport& r) {
  std::string out =
      "sample_id,iteration,cost,residual_norm,control_mean,control_std,"
      "control_min,control_max\n";
  for (size_t i = 0; i < r.costs.size(); ++i) {
    for (size_t k = 0; k < r.costs[i].size(); ++k) {
      const ControlStats& s = r.control_stats[i][k];
      out += fmt::format("{},{},{},{},{},{},{},{}\n", i, k, Num(r.costs[i][k]),
                         k == 0 ? "" : Num(r.residual_norms[i][k - 1]),
                         Num(s.mean), Num(s.std), Num(s.min), Num(s.max));
    }
  }
  return out;
}

std::string RefinementQuantilesCsv(const EvalReport& r) {
  std::string out =
      "iteration,cost_p25,cost_p50,cost_p75,normalized_cost_p25,"
      "normalized_cost_p50,normalized_cost_p75,control_std_p25,"
      "control_std_p50,control_std_p75\n";
  if (r.costs.empty()) return out;
  for (size_t k = 0; k < r.costs[0].size(); ++k) {
    std::vector<double> cost, normalized, spread;
    for (size_t i = 0; i < r.costs.size(); ++i) {
      cost.push_back(r.costs[i][k]);
      if (r.costs[i][0] > 0.0) normalized.push_back(r.costs[i][k] / r.costs[i][0]);
      spread.push_back(r.control_stats[i][k].std);
    }
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", k,
                       Num(Quantile(cost, 0.25)), Num(Quantile(cost, 0.5)),
                       Num(Quantile(cost, 0.75)),
                       Num(Quantile(normalized, 0.25)),
                       Num(Quantile(normalized, 0.5)),
                       Num(Quantile(normalized, 0.75)),
                       Num(Quantile(spread, 0.25)), Num(Quantile(spread, 0.5)),
                       Num(Quantile(spread, 0.75)));
  }
  return out;
}

std::string LatentsCsv(const EvalReport& r, Pca2d* pca_out) {
  std::string out = "sample_id,iteration,pc1,pc2,final_cost\n";
  if (r.latents.empty()) return out;
  const size_t iters = r.latents[0].size();
  const Eigen::Index d = r.latents[0][0].size();
  Eigen::MatrixXd points(r.latents.size() * iters, d);
  for (size_t i = 0; i < r.latents.size(); ++i) {
    for (size_t k = 0; k < iters; ++k) {
      points.row(i * iters + k) = r.latents[i][k].transpose();
    }
  }
  const Pca2d pca = FitPca2d(points);
  for (size_t i = 0; i < r.latents.size(); ++i) {
    for (size_t k = 0; k < iters; ++k) {
      const Eigen::Index row = static_cast<Eigen::Index>(i * iters + k);
      out += fmt::format("{},{},{},{},{}\n", i, k,
                         Num(pca.projections(row, 0)),
                         Num(pca.projections(row, 1)),
                         Num(r.costs[i].back()));
    }
  }
  if (pca_out) *pca_out = pca;
  return out;
}

std::string MetricsCsv(const std::vector<MetricsRecord>& history) {
  size_t iters = 0;
  for (const MetricsRecord& m : history) {
    iters = std::max(iters, m.normalized_cost_per_iter.size());
  }
  std::string out =
      "epoch,control_loss,improvement_metric,total_loss,validation_loss,"
      "learning_rate,skipped_steps";
  for (size_t k = 0; k < iters; ++k) out += fmt::format(",normalized_cost_{}", k);
  out += "\n";
  for (const MetricsRecord& m : history) {
    out += fmt::format("{},{},{},{},{},{},{}", m.epoch, Num(m.control_loss),
                       Num(m.improvement_metric), Num(m.total_loss),
                       Num(m.validation_loss), Num(m.learning_rate),
                       m.skipped_steps);
    for (size_t k = 0; k < iters; ++k) {
      out += "," + (k < m.normalized_cost_per_iter.size()
                        ? Num(m.normalized_cost_per_iter[k])
                        : std::string());
    }
    out += "\n";
  }
  return out;
}

Json SummaryJson(const EvalReport& r) {
  Json j;
  j["system"] = r.system;
  j["num_samples"] = r.num_samples;
  j["outer_iterations"] = r.outer_iterations;
  j["mean_trc_cost"] = r.mean_trc_cost;
  j["mean_oracle_cost"] = r.mean_oracle_cost;
  j["cost_ratio"] = r.cost_ratio;
  j["terminal_error"] = {{"mean", r.terminal_error_mean},
                         {"median", r.terminal_error_median},
                         {"max", r.terminal_error_max}};
  j["mean_cost_per_iter"] = r.mean_cost_per_iter;
  j["mean_normalized_cost_per_iter"] = r.mean_normalized_cost_per_iter;
  j["cost_reduction_ratio"] = r.cost_reduction_ratio;
  j["improvement_metric"] = r.improvement_metric;
  j["monotone_fraction"] = r.monotone_fraction;
  j["median_residual_norm"] = r.median_residual_norm;
  j["cosine_positive_fraction"] = r.cosine_positive_fraction;
  j["mean_cosine"] = r.mean_cosine;
  j["latent_collapse_ratio"] = r.latent_collapse_ratio;
  j["latent_spread"] = r.latent_spread;
  if (r.has_rocket_stats) {
    j["rocket"] = {{"mean_trc_fuel", r.mean_trc_fuel},
                   {"mean_oracle_fuel", r.mean_oracle_fuel},
                   {"fuel_ratio", r.fuel_ratio},
                   {"thrust_bounds_fraction", r.thrust_bounds_fraction},
                   {"glideslope_ok_fraction", r.glideslope_ok_fraction},
                   {"max_glideslope_depth", r.max_glideslope_depth}};
  }
  return j;
}

}  // namespace trc
