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

#ifndef TRC_TRAINING_H_
#define TRC_TRAINING_H_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trc/model.h"
#include "trc/oracle.h"
#include "trc/tensor.h"

namespace trc {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 50;
  double lambda = 0.1;
  double grad_clip_norm = 1.0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double validation_fraction = 0.1;
  uint64_t seed = 42;
  // Consecutive non-finite epochs before training aborts.
  int divergence_patience = 3;

  // lambda 0.1 / 50 epochs for vdp, 0.5 / 200 epochs for the rocket.
  static TrainConfig ForProblem(const ControlProblem& problem);
  void Validate() const;
};

struct LossTerms {
  Tensor total;        // scalar
  Tensor control;      // scalar, batch mean of |u_K - u*|^2 (normalized)
  Tensor improvement;  // scalar, batch mean of the per-iteration gain
};

// Final-accuracy term minus lambda times the mean normalized cost drop over
// iterations 1..K-1. With lambda == 0, `total` is `control`. Samples whose
// J0 is not positive contribute no improvement term. Throws TrainingError
// when the loss is not finite.
LossTerms ProcessSupervisionLoss(const ForwardRecord& record,
                                 const Tensor& u_star,
                                 const Normalizer& normalizer, double lambda);

// Average relative cost drop per refinement step over k = 0..K-2. Rows with
// J0 <= 0 are skipped; returns 0 when K < 2 or no row qualifies.
double ImprovementMetric(const std::vector<std::vector<double>>& costs, int K);

// Cosine annealing from lr0 at step 0 towards 0 at `total_steps`.
double CosineLearningRate(double lr0, int step, int total_steps);

// Scales all gradients so their global norm is at most `max_norm`. Returns
// the norm before clipping.
double ClipGradNorm(std::vector<Tensor>& params, double max_norm);

class AdamW {
 public:
  struct StepReport {
    bool skipped = false;
    double grad_norm = 0.0;  // before clipping
    double learning_rate = 0.0;
  };

  AdamW(std::vector<Tensor> params, const TrainConfig& config,
        int total_steps);

  // Clips, then applies one decoupled-decay Adam update with the scheduled
  // learning rate. Non-finite gradients skip the update.
  StepReport Step();
  void ZeroGrad();

  int step_count() const { return step_; }
  int skipped_steps() const { return skipped_; }

 private:
  std::vector<Tensor> params_;
  TrainConfig config_;
  int total_steps_;
  int step_ = 0;
  int skipped_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

struct MetricsRecord {
  int epoch = 0;
  double control_loss = 0.0;
  double improvement_metric = 0.0;
  double total_loss = 0.0;
  double validation_loss = 0.0;
  double learning_rate = 0.0;
  int skipped_steps = 0;
  std::vector<double> normalized_cost_per_iter;  // mean J_k / J_0
};

struct TrainResult {
  TrcModel final_model;
  TrcModel best_model;
  int best_epoch = 0;
  std::vector<MetricsRecord> history;
};

using EpochCallback = std::function<void(const MetricsRecord&)>;

// Seeded 90/10 split, normalizer fit on the training part, shuffled
// mini-batches. Deterministic for a fixed seed.
TrainResult Train(const ControlProblem& problem,
                  const std::vector<Sample>& samples, const TrcConfig& config,
                  const TrainConfig& train_config,
                  const EpochCallback& on_epoch = {});

// Splits indices 0..n-1 into (train, validation).
std::pair<std::vector<int>, std::vector<int>> SplitIndices(
    int n, double validation_fraction, uint64_t seed);

struct ControlStats {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct EvalReport {
  std::string system;
  int num_samples = 0;
  int outer_iterations = 0;

  double mean_trc_cost = 0.0;
  double mean_oracle_cost = 0.0;
  double cost_ratio = 0.0;
  double terminal_error_mean = 0.0;
  double terminal_error_median = 0.0;
  double terminal_error_max = 0.0;

  std::vector<double> mean_cost_per_iter;
  std::vector<double> mean_normalized_cost_per_iter;
  double cost_reduction_ratio = 0.0;  // mean(J_K) / mean(J_0)
  double improvement_metric = 0.0;
  double monotone_fraction = 0.0;
  std::vector<double> median_residual_norm;
  double cosine_positive_fraction = 0.0;
  double mean_cosine = 0.0;
  double latent_collapse_ratio = 0.0;
  std::vector<double> latent_spread;  // mean pairwise z_H distance per k

  bool has_rocket_stats = false;
  double mean_trc_fuel = 0.0;
  double mean_oracle_fuel = 0.0;
  double fuel_ratio = 0.0;
  double thrust_bounds_fraction = 0.0;  // trajectories fully within bounds
  double glideslope_ok_fraction = 0.0;  // depth below 5 m
  double max_glideslope_depth = 0.0;

  // Per sample.
  std::vector<std::vector<double>> costs;           // N x (K+1)
  std::vector<std::vector<double>> residual_norms;  // N x K
  std::vector<std::vector<ControlStats>> control_stats;  // N x (K+1)
  std::vector<std::vector<Eigen::VectorXd>> latents;     // N x (K+1)
  std::vector<Eigen::MatrixXd> final_controls;  // after thrust projection
  std::vector<double> final_costs;
};

// Cost summary of arbitrary controls against the oracle, without a model.
// Fills the cost, terminal-error and rocket fields of the report.
EvalReport EvaluateControls(const ControlProblem& problem,
                            const std::vector<Sample>& samples,
                            const std::vector<Eigen::MatrixXd>& controls);

// Runs the model on every sample with frozen parameters.
EvalReport Evaluate(const TrcModel& model, const std::vector<Sample>& samples,
                    int batch_size = 100);

// Mean pairwise distance between samples' latents at each iteration.
std::vector<double> LatentSpread(
    const std::vector<std::vector<Eigen::VectorXd>>& latents);

// Mean pairwise distance at the last iteration over that at iteration 0.
double LatentCollapseRatio(
    const std::vector<std::vector<Eigen::VectorXd>>& latents);

// Fraction of samples whose cost never increases across iterations.
double MonotoneFraction(const std::vector<std::vector<double>>& costs,
                        double rel_tol = 0.0);

}  // namespace trc

#endif  // TRC_TRAINING_H_
