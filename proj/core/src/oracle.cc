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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "trc/errors.h"
#include "trc/ops.h"

namespace trc {
namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kStepGrowth = 1.1;
// Step size below step_size * kStallRatio means no descent is possible.
constexpr double kStallRatio = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct PenaltyWeights {
  double thrust = 0.0;
  double glideslope = 0.0;
  double terminal_velocity = 0.0;
};

// One restart of one sample.
struct Lane {
  int sample = 0;
  std::vector<double> w;  // accepted point, box-normalized
  std::vector<double> g;  // objective gradient at w
  std::vector<double> m;
  std::vector<double> v;
  int adam_t = 0;
  double cost = kInf;
  double eta = 0.0;
  std::vector<double> history;
  int iterations = 0;
  bool done = false;
  bool failed = false;
  bool converged = false;
};

// Objective minimized by the oracle: the trajectory cost plus, for the
// rocket, annealed constraint penalties.
Tensor Objective(const ControlProblem& problem, const Trajectory& traj,
                 const Tensor& x_target, const PenaltyWeights& weights) {
  if (problem.system != SystemId::kRocket) return traj.cost;
  const RocketParams& p = problem.rocket;
  const int batch = traj.states.dim(0);
  const int horizon = problem.horizon;
  const int dx = problem.state_dim;
  const Tensor final_state =
      Reshape(Slice(traj.states, 1, horizon, 1), {batch, dx});
  const Tensor miss = Sub(final_state, x_target);
  const Tensor pos_term = Scale(SumLastAxis(Square(Slice(miss, 1, 0, 3))),
                                problem.cost.w_pos);
  const Tensor vel_excess =
      Relu(AddScalar(NormLastAxis(Slice(miss, 1, 3, 3)), -p.v_tol));
  const Tensor vel_term = Scale(Reshape(Square(vel_excess), {batch}),
                                weights.terminal_velocity);

  const Tensor thrust = Reshape(ThrustMagnitude(traj.controls), {batch, horizon});
  const Tensor below = Relu(Neg(AddScalar(thrust, -p.thrust_min)));
  const Tensor above = Relu(AddScalar(thrust, -p.thrust_max));
  const Tensor thrust_term =
      Scale(SumLastAxis(Add(Square(below), Square(above))), weights.thrust);

  const Tensor excess =
      Reshape(GlideslopeExcess(problem, traj.states), {batch, horizon + 1});
  const Tensor glide_term =
      Scale(SumLastAxis(Square(Relu(excess))), weights.glideslope);

  return Add(Add(FuelUsed(problem, traj.states), Add(pos_term, vel_term)),
             Add(thrust_term, glide_term));
}

struct BoxMap {
  Tensor center;  // [d_u]
  Tensor half;    // [d_u]
};

BoxMap MakeBoxMap(const ControlProblem& problem) {
  return {VectorTensor(0.5 * (problem.u_max + problem.u_min)),
          VectorTensor(0.5 * (problem.u_max - problem.u_min))};
}

Tensor ToControls(const BoxMap& box, const Tensor& w) {
  return Add(Mul(w, box.half), box.center);
}

struct Evaluation {
  std::vector<double> cost;
  std::vector<std::vector<double>> grad;
};

Evaluation EvaluateLanes(const ControlProblem& problem, const BoxMap& box,
                         const std::vector<const Eigen::VectorXd*>& x0s,
                         const std::vector<const Eigen::VectorXd*>& targets,
                         const std::vector<const std::vector<double>*>& ws,
                         const PenaltyWeights& weights) {
  const int lanes = static_cast<int>(ws.size());
  const int dx = problem.state_dim;
  const int flat = problem.flat_control_dim();
  std::vector<double> x0_data, target_data, w_data;
  x0_data.reserve(static_cast<size_t>(lanes) * dx);
  target_data.reserve(static_cast<size_t>(lanes) * dx);
  w_data.reserve(static_cast<size_t>(lanes) * flat);
  for (int l = 0; l < lanes; ++l) {
    x0_data.insert(x0_data.end(), x0s[l]->data(), x0s[l]->data() + dx);
    target_data.insert(target_data.end(), targets[l]->data(),
                       targets[l]->data() + dx);
    w_data.insert(w_data.end(), ws[l]->begin(), ws[l]->end());
  }
  Evaluation eval;
  eval.cost.assign(lanes, kInf);
  eval.grad.assign(lanes, std::vector<double>(flat, 0.0));
  try {
    Tape tape;
    TapeScope scope(&tape);
    Tensor w({lanes, problem.horizon, problem.control_dim}, std::move(w_data));
    w.set_requires_grad(true);
    const Tensor x0({lanes, dx}, std::move(x0_data));
    const Tensor target({lanes, dx}, std::move(target_data));
    const Trajectory traj = Rollout(problem, x0, ToControls(box, w), target);
    const Tensor objective = Objective(problem, traj, target, weights);
    Backward(Sum(objective), tape);
    const std::vector<double> g = w.grad();
    for (int l = 0; l < lanes; ++l) {
      eval.cost[l] = objective.at(l);
      std::copy_n(g.begin() + static_cast<int64_t>(l) * flat, flat,
                  eval.grad[l].begin());
    }
  } catch (const InfeasibleMassError&) {
    if (lanes == 1) return eval;
    // Isolate the infeasible lanes; the rest are evaluated individually.
    for (int l = 0; l < lanes; ++l) {
      Evaluation one = EvaluateLanes(problem, box, {x0s[l]}, {targets[l]},
                                     {ws[l]}, weights);
      eval.cost[l] = one.cost[0];
      eval.grad[l] = std::move(one.grad[0]);
    }
  }
  for (int l = 0; l < lanes; ++l) {
    if (!std::isfinite(eval.cost[l])) eval.cost[l] = kInf;
  }
  return eval;
}

std::vector<double> InitialGuess(const ControlProblem& problem,
                                 const Eigen::VectorXd& x0) {
  const int horizon = problem.horizon;
  const int du = problem.control_dim;
  std::vector<double> w(static_cast<size_t>(horizon) * du);
  for (int t = 0; t < horizon; ++t) {
    for (int j = 0; j < du; ++j) {
      double u = 0.0;
      if (problem.system == SystemId::kRocket && j == 2) {
        u = x0(6) * problem.rocket.g_mars;  // hover thrust
      }
      const double center = 0.5 * (problem.u_max(j) + problem.u_min(j));
      const double half = 0.5 * (problem.u_max(j) - problem.u_min(j));
      w[t * du + j] = std::clamp((u - center) / half, -1.0, 1.0);
    }
  }
  return w;
}

std::vector<double> AdamProposal(const Lane& lane) {
  const double c1 = 1.0 - std::pow(kAdamBeta1, lane.adam_t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, lane.adam_t);
  std::vector<double> w(lane.w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    const double step =
        lane.eta * (lane.m[i] / c1) / (std::sqrt(lane.v[i] / c2) + kAdamEps);
    w[i] = std::clamp(lane.w[i] - step, -1.0, 1.0);
  }
  return w;
}

void AdamAccumulate(Lane& lane) {
  ++lane.adam_t;
  for (size_t i = 0; i < lane.g.size(); ++i) {
    lane.m[i] = kAdamBeta1 * lane.m[i] + (1.0 - kAdamBeta1) * lane.g[i];
    lane.v[i] =
        kAdamBeta2 * lane.v[i] + (1.0 - kAdamBeta2) * lane.g[i] * lane.g[i];
  }
}

void ResetLaneForRound(Lane& lane, double cost, std::vector<double> grad,
                       double eta) {
  lane.cost = cost;
  lane.g = std::move(grad);
  lane.m.assign(lane.w.size(), 0.0);
  lane.v.assign(lane.w.size(), 0.0);
  lane.adam_t = 0;
  lane.eta = eta;
  lane.history.assign(1, cost);
  lane.done = false;
  lane.converged = false;
  if (!std::isfinite(cost)) {
    lane.failed = true;
    lane.done = true;
    return;
  }
  AdamAccumulate(lane);
}

}  // namespace

void OracleConfig::Validate() const {
  if (max_iters < 1) throw ContractError("oracle max_iters must be >= 1");
  if (!(step_size > 0.0)) throw ContractError("oracle step size must be > 0");
  if (!(convergence_tol > 0.0)) {
    throw ContractError("oracle convergence_tol must be > 0");
  }
  if (convergence_window < 1 || restarts < 1 || penalty_rounds < 1) {
    throw ContractError("oracle window, restarts and rounds must be >= 1");
  }
}

std::vector<SolveReport> SolveDirectShootingBatch(
    const ControlProblem& problem, const std::vector<Eigen::VectorXd>& x0s,
    const std::vector<Eigen::VectorXd>& targets, const OracleConfig& config,
    const std::vector<uint64_t>& sample_ids) {
  problem.Validate();
  config.Validate();
  const int n = static_cast<int>(x0s.size());
  if (static_cast<int>(targets.size()) != n ||
      (!sample_ids.empty() && static_cast<int>(sample_ids.size()) != n)) {
    throw DimensionError("oracle batch inputs have mismatched lengths");
  }
  for (int i = 0; i < n; ++i) {
    if (x0s[i].size() != problem.state_dim ||
        targets[i].size() != problem.state_dim) {
      throw DimensionError("oracle x0/target has the wrong dimension");
    }
    if (!x0s[i].allFinite()) throw ContractError("oracle x0 must be finite");
    if (problem.system == SystemId::kRocket &&
        !(x0s[i](6) >= problem.rocket.m_dry)) {
      throw InfeasibleMassError("initial mass below dry mass", 0);
    }
  }
  const BoxMap box = MakeBoxMap(problem);

  std::vector<Lane> lanes;
  lanes.reserve(static_cast<size_t>(n) * config.restarts);
  for (int i = 0; i < n; ++i) {
    const uint64_t id = sample_ids.empty() ? static_cast<uint64_t>(i)
                                           : sample_ids[i];
    std::seed_seq seq{static_cast<uint32_t>(config.seed),
                      static_cast<uint32_t>(config.seed >> 32),
                      static_cast<uint32_t>(id), static_cast<uint32_t>(id >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::vector<double> guess = InitialGuess(problem, x0s[i]);
    for (int r = 0; r < config.restarts; ++r) {
      Lane lane;
      lane.sample = i;
      lane.w = guess;
      if (r > 0) {
        for (double& v : lane.w) {
          v = std::clamp(v + config.restart_spread * unit(rng), -1.0, 1.0);
        }
      }
      lanes.push_back(std::move(lane));
    }
  }

  const int rounds =
      problem.system == SystemId::kRocket ? config.penalty_rounds : 1;
  for (int round = 0; round < rounds; ++round) {
    const double anneal = std::pow(config.penalty_growth, round);
    const PenaltyWeights weights{config.thrust_penalty * anneal,
                                 config.glideslope_penalty * anneal,
                                 config.terminal_velocity_penalty * anneal};
    std::vector<int> live;
    for (int l = 0; l < static_cast<int>(lanes.size()); ++l) {
      if (!lanes[l].failed) live.push_back(l);
    }
    // Objective changes with the weights, so each round starts afresh.
    {
      std::vector<const Eigen::VectorXd*> xs, ts;
      std::vector<const std::vector<double>*> ws;
      for (int l : live) {
        xs.push_back(&x0s[lanes[l].sample]);
        ts.push_back(&targets[lanes[l].sample]);
        ws.push_back(&lanes[l].w);
      }
      Evaluation eval = EvaluateLanes(problem, box, xs, ts, ws, weights);
      for (size_t k = 0; k < live.size(); ++k) {
        Lane& lane = lanes[live[k]];
        ResetLaneForRound(lane, eval.cost[k], std::move(eval.grad[k]),
                          config.step_size);
        ++lane.iterations;
      }
    }
    for (int iter = 1; iter < config.max_iters; ++iter) {
      std::vector<int> active;
      for (int l : live) {
        if (!lanes[l].done) active.push_back(l);
      }
      if (active.empty()) break;
      std::vector<std::vector<double>> proposals;
      proposals.reserve(active.size());
      std::vector<const Eigen::VectorXd*> xs, ts;
      for (int l : active) {
        proposals.push_back(AdamProposal(lanes[l]));
        xs.push_back(&x0s[lanes[l].sample]);
        ts.push_back(&targets[lanes[l].sample]);
      }
      std::vector<const std::vector<double>*> ws;
      for (const auto& p : proposals) ws.push_back(&p);
      Evaluation eval = EvaluateLanes(problem, box, xs, ts, ws, weights);
      for (size_t k = 0; k < active.size(); ++k) {
        Lane& lane = lanes[active[k]];
        ++lane.iterations;
        if (eval.cost[k] <= lane.cost) {
          lane.w = std::move(proposals[k]);
          lane.g = std::move(eval.grad[k]);
          lane.cost = eval.cost[k];
          AdamAccumulate(lane);
          lane.eta = std::min(config.step_size, lane.eta * kStepGrowth);
          lane.history.push_back(lane.cost);
          const size_t h = lane.history.size();
          if (h > static_cast<size_t>(config.convergence_window)) {
            const double before = lane.history[h - 1 - config.convergence_window];
            const double rel = (before - lane.cost) /
                               std::max(std::abs(lane.cost), 1e-12);
            if (rel < config.convergence_tol) {
              lane.done = true;
              lane.converged = true;
            }
          }
        } else {
          // Stale momentum need not point downhill; restart it from the
          // current gradient so the shrinking step is a descent step.
          lane.eta *= 0.5;
          const double c1 = 1.0 - std::pow(kAdamBeta1, lane.adam_t);
          for (size_t i = 0; i < lane.m.size(); ++i) lane.m[i] = c1 * lane.g[i];
          if (lane.eta < config.step_size * kStallRatio) {
            lane.done = true;
            lane.converged = true;
          }
        }
      }
    }
  }

  std::vector<SolveReport> reports(n);
  std::vector<int> best(n, -1);
  for (int l = 0; l < static_cast<int>(lanes.size()); ++l) {
    const Lane& lane = lanes[l];
    if (lane.failed) continue;
    int& b = best[lane.sample];
    if (b < 0 || lane.cost < lanes[b].cost) b = l;
  }
  const Tensor lo = VectorTensor(problem.u_min);
  const Tensor hi = VectorTensor(problem.u_max);
  for (int i = 0; i < n; ++i) {
    SolveReport& report = reports[i];
    report.sample.x0 = x0s[i];
    report.sample.x_target = targets[i];
    if (best[i] < 0) {
      report.failure = "no restart produced a finite cost";
      continue;
    }
    const Lane& lane = lanes[best[i]];
    report.iterations = lane.iterations;
    report.converged = lane.converged;
    report.cost_history = lane.history;
    NoGradScope no_grad;
    Tensor u = Clamp(
        ToControls(box, Tensor({1, problem.horizon, problem.control_dim},
                               lane.w)),
        lo, hi);
    if (problem.system == SystemId::kRocket) u = ProjectThrust(problem, u);
    try {
      const Trajectory traj = Rollout(problem, TileRows(x0s[i], 1), u,
                                      TileRows(targets[i], 1));
      report.sample.j_star = traj.cost.item();
    } catch (const InfeasibleMassError& e) {
      report.failure = e.what();
      continue;
    }
    report.sample.u_star = ControlsMatrix(u);
    if (!std::isfinite(report.sample.j_star)) {
      report.failure = "non-finite optimal cost";
      continue;
    }
    report.ok = true;
  }
  return reports;
}

Sample SolveDirectShooting(const ControlProblem& problem,
                           const Eigen::VectorXd& x0,
                           const OracleConfig& config) {
  return SolveDirectShooting(problem, x0, problem.x_target, config);
}

Sample SolveDirectShooting(const ControlProblem& problem,
                           const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& x_target,
                           const OracleConfig& config) {
  auto reports = SolveDirectShootingBatch(problem, {x0}, {x_target}, config);
  if (!reports[0].ok) {
    throw DivergenceError("direct shooting failed: " + reports[0].failure +
                          " (try a smaller step size)");
  }
  return std::move(reports[0].sample);
}

InitialStateSampler DefaultInitialStateSampler(const ControlProblem& problem) {
  switch (problem.system) {
    case SystemId::kVanDerPol:
      return [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        Eigen::VectorXd x(2);
        x(0) = u(rng);
        x(1) = u(rng);
        return x;
      };
    case SystemId::kRocket:
      return [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto disc = [&](double radius, double& a, double& b) {
          const double rad = radius * std::sqrt(unit(rng));
          const double ang = 2.0 * std::numbers::pi * unit(rng);
          a = rad * std::cos(ang);
          b = rad * std::sin(ang);
        };
        Eigen::VectorXd x(7);
        disc(500.0, x(0), x(1));
        x(2) = 1500.0 + 1000.0 * unit(rng);
        disc(50.0, x(3), x(4));
        x(5) = -100.0 + 50.0 * unit(rng);
        x(6) = 1800.0 + 200.0 * unit(rng);
        return x;
      };
    case SystemId::kLinear:
      break;
  }
  return [dx = problem.state_dim](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd x(dx);
    for (int i = 0; i < dx; ++i) x(i) = u(rng);
    return x;
  };
}

Dataset GenerateDataset(const ControlProblem& problem, int n_samples,
                        const OracleConfig& config, uint64_t seed,
                        const InitialStateSampler& sampler, int chunk_size) {
  if (n_samples < 1) throw ContractError("n_samples must be >= 1");
  if (chunk_size < 1) throw ContractError("chunk_size must be >= 1");
  Dataset dataset;
  dataset.problem = problem;
  dataset.oracle = config;
  dataset.oracle.seed = seed;
  dataset.seed = seed;
  dataset.requested = n_samples;
  const InitialStateSampler draw =
      sampler ? sampler : DefaultInitialStateSampler(problem);
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> x0s(n_samples);
  for (auto& x : x0s) x = draw(rng);
  for (int begin = 0; begin < n_samples; begin += chunk_size) {
    const int end = std::min(n_samples, begin + chunk_size);
    std::vector<Eigen::VectorXd> xs(x0s.begin() + begin, x0s.begin() + end);
    std::vector<Eigen::VectorXd> ts(xs.size(), problem.x_target);
    std::vector<uint64_t> ids;
    for (int i = begin; i < end; ++i) ids.push_back(static_cast<uint64_t>(i));
    auto reports = SolveDirectShootingBatch(problem, xs, ts, dataset.oracle, ids);
    for (auto& r : reports) {
      if (!r.ok) {
        ++dataset.failure_count;
        continue;
      }
      if (r.converged) ++dataset.converged_count;
      dataset.samples.push_back(std::move(r.sample));
    }
  }
  if (dataset.failure_count * 20 > n_samples) {
    throw DivergenceError("dataset generation failed for " +
                          std::to_string(dataset.failure_count) + " of " +
                          std::to_string(n_samples) + " samples (> 5%)");
  }
  return dataset;
}

Tensor TrueCostGradient(const ControlProblem& problem, const Tensor& x0,
                        const Tensor& x_target, const Tensor& controls) {
  Tape tape;
  TapeScope scope(&tape);
  Tensor u = controls.Clone();
  u.set_requires_grad(true);
  const Trajectory traj = Rollout(problem, x0, u, x_target);
  Backward(Sum(traj.cost), tape);
  return Tensor(controls.shape(), u.grad());
}

Eigen::MatrixXd TrueCostGradient(const ControlProblem& problem,
                                 const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& x_target,
                                 const Eigen::MatrixXd& controls) {
  return ControlsMatrix(TrueCostGradient(problem, TileRows(x0, 1),
                                         TileRows(x_target, 1),
                                         ControlsTensor(controls)));
}

Tensor ControlsTensor(const Eigen::MatrixXd& controls) {
  const int rows = static_cast<int>(controls.rows());
  const int cols = static_cast<int>(controls.cols());
  std::vector<double> data(static_cast<size_t>(rows) * cols);
  for (int t = 0; t < rows; ++t) {
    for (int j = 0; j < cols; ++j) data[t * cols + j] = controls(t, j);
  }
  return Tensor({1, rows, cols}, std::move(data));
}

Eigen::MatrixXd ControlsMatrix(const Tensor& controls, int lane) {
  const int rows = controls.dim(1);
  const int cols = controls.dim(2);
  Eigen::MatrixXd m(rows, cols);
  const int64_t base = static_cast<int64_t>(lane) * rows * cols;
  for (int t = 0; t < rows; ++t) {
    for (int j = 0; j < cols; ++j) m(t, j) = controls.at(base + t * cols + j);
  }
  return m;
}

}  // namespace trc
