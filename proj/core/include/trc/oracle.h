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

#ifndef TRC_ORACLE_H_
#define TRC_ORACLE_H_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "trc/dynamics.h"
#include "trc/tensor.h"

namespace trc {

// Direct shooting by Adam on the control sequence. Controls are optimized in
// box-normalized coordinates w = (u - center) / half_range, so step_size is
// a fraction of the admissible range.
struct OracleConfig {
  int max_iters = 2000;  // per penalty round
  double step_size = 0.05;
  double convergence_tol = 1e-7;
  int convergence_window = 10;
  int restarts = 3;
  uint64_t seed = 0;
  // Spread of the random restarts, as a fraction of the half range.
  double restart_spread = 0.3;

  // Rocket penalty method: hinge-squared weights, multiplied by
  // penalty_growth after each of penalty_rounds rounds.
  double thrust_penalty = 1e-4;        // per N^2
  double glideslope_penalty = 1.0;     // per m^2
  double terminal_velocity_penalty = 10.0;
  int penalty_rounds = 3;
  double penalty_growth = 10.0;

  void Validate() const;
};

// One supervised record: optimal controls from x0 to x_target.
struct Sample {
  Eigen::VectorXd x0;
  Eigen::VectorXd x_target;
  Eigen::MatrixXd u_star;  // T x d_u
  double j_star = 0.0;
};

struct SolveReport {
  Sample sample;
  bool ok = false;
  bool converged = false;  // tolerance met (as opposed to max_iters)
  int iterations = 0;
  std::string failure;
  // Accepted objective values of the winning restart in the final round.
  std::vector<double> cost_history;
};

// Solves every (x0, target) pair. Lanes are independent, so results do not
// depend on how samples are grouped. `sample_ids` seed each sample's random
// restarts; they default to 0..N-1.
std::vector<SolveReport> SolveDirectShootingBatch(
    const ControlProblem& problem, const std::vector<Eigen::VectorXd>& x0s,
    const std::vector<Eigen::VectorXd>& targets, const OracleConfig& config,
    const std::vector<uint64_t>& sample_ids = {});

// Single-sample convenience. Throws DivergenceError when no restart yields a
// finite cost.
Sample SolveDirectShooting(const ControlProblem& problem,
                           const Eigen::VectorXd& x0,
                           const OracleConfig& config);
Sample SolveDirectShooting(const ControlProblem& problem,
                           const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& x_target,
                           const OracleConfig& config);

// Draws an initial state from the problem's documented start distribution.
using InitialStateSampler = std::function<Eigen::VectorXd(std::mt19937_64&)>;
InitialStateSampler DefaultInitialStateSampler(const ControlProblem& problem);

struct Dataset {
  ControlProblem problem;
  OracleConfig oracle;
  uint64_t seed = 0;
  int requested = 0;
  int failure_count = 0;
  int converged_count = 0;
  std::vector<Sample> samples;
};

// Samples n initial states (deterministic under seed) and solves each.
// Failed samples are skipped and counted; more than 5% failures throws.
Dataset GenerateDataset(const ControlProblem& problem, int n_samples,
                        const OracleConfig& config, uint64_t seed,
                        const InitialStateSampler& sampler = {},
                        int chunk_size = 256);

// dJ/du through the differentiable rollout, T x d_u.
Eigen::MatrixXd TrueCostGradient(const ControlProblem& problem,
                                 const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& x_target,
                                 const Eigen::MatrixXd& controls);
// Batched form: controls [B, T, d_u] -> gradient [B, T, d_u].
Tensor TrueCostGradient(const ControlProblem& problem, const Tensor& x0,
                        const Tensor& x_target, const Tensor& controls);

// Conversions between a T x d_u matrix and a [1, T, d_u] tensor.
Tensor ControlsTensor(const Eigen::MatrixXd& controls);
Eigen::MatrixXd ControlsMatrix(const Tensor& controls, int lane = 0);

}  // namespace trc

#endif  // TRC_ORACLE_H_
