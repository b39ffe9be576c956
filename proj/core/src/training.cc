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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "trc/dynamics.h"
#include "trc/errors.h"
#include "trc/ops.h"

namespace trc {
namespace {

constexpr double kPi = 3.14159265358979323846;

uint64_t SplitMix(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Batch {
  Tensor x0;
  Tensor target;
  Tensor u_star;
};

Batch MakeBatch(const std::vector<Sample>& samples,
                const std::vector<int>& indices, size_t begin, size_t end) {
  const int b = static_cast<int>(end - begin);
  const int dx = static_cast<int>(samples[indices[begin]].x0.size());
  const int t = static_cast<int>(samples[indices[begin]].u_star.rows());
  const int du = static_cast<int>(samples[indices[begin]].u_star.cols());
  std::vector<double> x0(static_cast<size_t>(b) * dx);
  std::vector<double> target(x0.size());
  std::vector<double> u(static_cast<size_t>(b) * t * du);
  for (int i = 0; i < b; ++i) {
    const Sample& s = samples[indices[begin + i]];
    for (int j = 0; j < dx; ++j) {
      x0[i * dx + j] = s.x0(j);
      target[i * dx + j] = s.x_target(j);
    }
    for (int r = 0; r < t; ++r) {
      for (int c = 0; c < du; ++c) {
        u[(static_cast<size_t>(i) * t + r) * du + c] = s.u_star(r, c);
      }
    }
  }
  return {Tensor({b, dx}, std::move(x0)), Tensor({b, dx}, std::move(target)),
          Tensor({b, t, du}, std::move(u))};
}

std::vector<std::vector<double>> CostRows(const ForwardRecord& record) {
  const int b = record.costs[0].dim(0);
  std::vector<std::vector<double>> rows(b);
  for (int i = 0; i < b; ++i) {
    for (const Tensor& c : record.costs) rows[i].push_back(c.at(i));
  }
  return rows;
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

double MeanOf(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

ControlStats StatsOf(const std::vector<double>& v) {
  ControlStats s;
  s.mean = MeanOf(v);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / v.size());
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

// Per-step values summarized for one lane: raw components, or thrust
// magnitudes for the rocket.
std::vector<double> StepValues(const ControlProblem& problem,
                               const Tensor& controls, int lane) {
  const int t = controls.dim(1);
  const int du = controls.dim(2);
  const double* base = controls.data().data() +
                       static_cast<size_t>(lane) * t * du;
  std::vector<double> out;
  if (problem.system == SystemId::kRocket) {
    for (int r = 0; r < t; ++r) {
      double n2 = 0.0;
      for (int c = 0; c < du; ++c) n2 += base[r * du + c] * base[r * du + c];
      out.push_back(std::sqrt(n2));
    }
  } else {
    out.assign(base, base + static_cast<size_t>(t) * du);
  }
  return out;
}

Eigen::MatrixXd LaneMatrix(const Tensor& controls, int lane) {
  return ControlsMatrix(controls, lane);
}

Tensor StackControls(const std::vector<Eigen::MatrixXd>& controls,
                     size_t begin, size_t end) {
  const int t = static_cast<int>(controls[begin].rows());
  const int du = static_cast<int>(controls[begin].cols());
  std::vector<double> data;
  data.reserve((end - begin) * t * du);
  for (size_t i = begin; i < end; ++i) {
    for (int r = 0; r < t; ++r) {
      for (int c = 0; c < du; ++c) data.push_back(controls[i](r, c));
    }
  }
  return Tensor({static_cast<int>(end - begin), t, du}, std::move(data));
}

}  // namespace

TrainConfig TrainConfig::ForProblem(const ControlProblem& problem) {
  TrainConfig c;
  if (problem.system == SystemId::kRocket) {
    c.lambda = 0.5;
    c.epochs = 200;
  }
  return c;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("learning_rate must be > 0");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (epochs < 1) throw ContractError("epochs must be >= 1");
  if (!(lambda >= 0.0)) throw ContractError("lambda must be >= 0");
  if (!(grad_clip_norm > 0.0)) throw ContractError("grad_clip_norm must be > 0");
  if (!(weight_decay >= 0.0)) throw ContractError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ContractError("adam_eps must be > 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ContractError("validation_fraction must lie in [0, 1)");
  }
  if (divergence_patience < 1) {
    throw ContractError("divergence_patience must be >= 1");
  }
}

LossTerms ProcessSupervisionLoss(const ForwardRecord& record,
                                 const Tensor& u_star,
                                 const Normalizer& normalizer, double lambda) {
  if (lambda < 0.0) throw ContractError("lambda must be >= 0");
  const Tensor& u_final = record.controls.back();
  if (u_final.shape() != u_star.shape()) {
    throw DimensionError("u_star shape " + ShapeToString(u_star.shape()) +
                         " does not match controls " +
                         ShapeToString(u_final.shape()));
  }
  const int batch = u_final.dim(0);
  const int flat = u_final.dim(1) * u_final.dim(2);
  const int k_iters = record.iterations();

  const Tensor diff = Sub(normalizer.NormalizeControls(u_final),
                          normalizer.NormalizeControls(u_star));
  LossTerms terms;
  terms.control = Mean(SumLastAxis(Reshape(Square(diff), {batch, flat})));

  if (lambda == 0.0 || k_iters < 2) {
    terms.total = terms.control;
    terms.improvement = Tensor::Scalar(0.0);
  } else {
    const Tensor& j0 = record.costs[0];
    std::vector<double> mask(batch), fill(batch);
    for (int i = 0; i < batch; ++i) {
      const bool ok = j0.at(i) > 0.0;
      mask[i] = ok ? 1.0 : 0.0;
      fill[i] = ok ? 0.0 : 1.0;
    }
    const Tensor mask_t({batch}, mask);
    const Tensor denom = Add(Mul(j0, mask_t), Tensor({batch}, fill));
    Tensor gain = Tensor::Zeros({batch});
    for (int k = 1; k <= k_iters - 1; ++k) {
      gain = Add(gain, Div(Sub(record.costs[k - 1], record.costs[k]), denom));
    }
    terms.improvement =
        Mean(Scale(Mul(gain, mask_t), 1.0 / static_cast<double>(k_iters - 1)));
    terms.total = Sub(terms.control, Scale(terms.improvement, lambda));
  }

  if (!std::isfinite(terms.total.item())) {
    std::ostringstream msg;
    msg << "non-finite loss (control " << terms.control.item()
        << ", improvement " << terms.improvement.item()
        << ") on a batch of " << batch << "; mean costs per iteration:";
    for (const Tensor& c : record.costs) {
      msg << ' ' << MeanOf(c.values());
    }
    throw TrainingError(msg.str());
  }
  return terms;
}

double ImprovementMetric(const std::vector<std::vector<double>>& costs,
                         int K) {
  if (K < 2) return 0.0;
  double total = 0.0;
  int rows = 0;
  for (const std::vector<double>& row : costs) {
    if (static_cast<int>(row.size()) < K) {
      throw DimensionError("cost row has " + std::to_string(row.size()) +
                           " entries, need at least " + std::to_string(K));
    }
    if (!(row[0] > 0.0)) continue;
    double sum = 0.0;
    for (int k = 0; k <= K - 2; ++k) sum += (row[k] - row[k + 1]) / row[0];
    total += sum;
    ++rows;
  }
  if (rows == 0) return 0.0;
  return total / (static_cast<double>(rows) * (K - 1));
}

double CosineLearningRate(double lr0, int step, int total_steps) {
  if (total_steps <= 0) return lr0;
  const double progress =
      std::clamp(static_cast<double>(step) / total_steps, 0.0, 1.0);
  return lr0 * 0.5 * (1.0 + std::cos(kPi * progress));
}

double ClipGradNorm(std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const Tensor& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.impl()->grad) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (std::isfinite(norm) && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= scale;
    }
  }
  return norm;
}

AdamW::AdamW(std::vector<Tensor> params, const TrainConfig& config,
             int total_steps)
    : params_(std::move(params)), config_(config), total_steps_(total_steps) {
  for (const Tensor& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::ZeroGrad() {
  for (Tensor& p : params_) p.ZeroGrad();
}

AdamW::StepReport AdamW::Step() {
  StepReport report;
  report.learning_rate =
      CosineLearningRate(config_.learning_rate, step_, total_steps_);
  report.grad_norm = ClipGradNorm(params_, config_.grad_clip_norm);
  ++step_;
  if (!std::isfinite(report.grad_norm)) {
    report.skipped = true;
    ++skipped_;
    return report;
  }
  // The bias corrections count only applied updates.
  const int t = step_ - skipped_;
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  const double lr = report.learning_rate;
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    std::span<double> w = p.mutable_data();
    const std::vector<double>* grad = p.has_grad() ? &p.impl()->grad : nullptr;
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (size_t j = 0; j < w.size(); ++j) {
      const double g = grad ? (*grad)[j] : 0.0;
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g;
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      w[j] -= lr * config_.weight_decay * w[j];
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + config_.adam_eps);
    }
  }
  return report;
}

std::pair<std::vector<int>, std::vector<int>> SplitIndices(
    int n, double validation_fraction, uint64_t seed) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(SplitMix(seed, 2));
  std::shuffle(order.begin(), order.end(), rng);
  int n_val = static_cast<int>(std::lround(validation_fraction * n));
  n_val = std::clamp(n_val, 0, std::max(0, n - 1));
  std::vector<int> val(order.begin(), order.begin() + n_val);
  std::vector<int> train(order.begin() + n_val, order.end());
  return {train, val};
}

TrainResult Train(const ControlProblem& problem,
                  const std::vector<Sample>& samples, const TrcConfig& config,
                  const TrainConfig& train_config,
                  const EpochCallback& on_epoch) {
  train_config.Validate();
  config.Validate();
  config.CheckCompatible(problem);
  if (samples.empty()) throw ContractError("training needs at least one sample");

  auto [train_idx, val_idx] = SplitIndices(
      static_cast<int>(samples.size()), train_config.validation_fraction,
      train_config.seed);
  std::vector<Sample> train_samples;
  for (int i : train_idx) train_samples.push_back(samples[i]);
  const Normalizer normalizer = Normalizer::Fit(train_samples);

  TrcModel model(problem, config, normalizer, SplitMix(train_config.seed, 1));
  const size_t n_train = train_idx.size();
  const int bs = train_config.batch_size;
  const int steps_per_epoch = static_cast<int>((n_train + bs - 1) / bs);
  AdamW optimizer(model.ParameterTensors(), train_config,
                  steps_per_epoch * train_config.epochs);
  std::mt19937_64 shuffle_rng(SplitMix(train_config.seed, 3));

  std::vector<MetricsRecord> history;
  TrcModel best = model.Clone();
  int best_epoch = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  const int K = config.outer_iterations;

  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng);
    MetricsRecord rec;
    rec.epoch = epoch;
    double control_sum = 0.0, total_sum = 0.0;
    size_t counted = 0;
    bool finite = true;
    std::vector<std::vector<double>> epoch_costs;
    const int skipped_before = optimizer.skipped_steps();

    for (size_t begin = 0; begin < n_train; begin += bs) {
      const size_t end = std::min(n_train, begin + bs);
      const Batch batch = MakeBatch(samples, train_idx, begin, end);
      Tape tape;
      optimizer.ZeroGrad();
      LossTerms terms;
      ForwardRecord record;
      try {
        TapeScope scope(&tape);
        record = model.Forward(batch.x0, batch.target);
        terms = ProcessSupervisionLoss(record, batch.u_star, normalizer,
                                       train_config.lambda);
      } catch (const TrainingError&) {
        finite = false;
        continue;
      } catch (const InfeasibleMassError&) {
        finite = false;
        continue;
      }
      Backward(terms.total, tape);
      tape.Clear();
      const AdamW::StepReport step = optimizer.Step();
      rec.learning_rate = step.learning_rate;
      const double n = static_cast<double>(end - begin);
      control_sum += terms.control.item() * n;
      total_sum += terms.total.item() * n;
      counted += end - begin;
      for (std::vector<double>& row : CostRows(record)) {
        epoch_costs.push_back(std::move(row));
      }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.control_loss = counted ? control_sum / counted : nan;
    rec.total_loss = counted ? total_sum / counted : nan;
    rec.improvement_metric = ImprovementMetric(epoch_costs, K);
    rec.skipped_steps = optimizer.skipped_steps() - skipped_before;
    rec.normalized_cost_per_iter.assign(K + 1, 0.0);
    int normalized_rows = 0;
    for (const std::vector<double>& row : epoch_costs) {
      if (!(row[0] > 0.0)) continue;
      for (int k = 0; k <= K; ++k) {
        rec.normalized_cost_per_iter[k] += row[k] / row[0];
      }
      ++normalized_rows;
    }
    for (double& v : rec.normalized_cost_per_iter) {
      v = normalized_rows ? v / normalized_rows : nan;
    }

    if (!val_idx.empty()) {
      NoGradScope no_grad;
      double val_sum = 0.0;
      for (size_t begin = 0; begin < val_idx.size(); begin += bs) {
        const size_t end = std::min(val_idx.size(), begin + bs);
        const Batch batch = MakeBatch(samples, val_idx, begin, end);
        try {
          const ForwardRecord record = model.Forward(batch.x0, batch.target);
          val_sum += ProcessSupervisionLoss(record, batch.u_star, normalizer,
                                            train_config.lambda)
                         .total.item() *
                     static_cast<double>(end - begin);
        } catch (const TrainingError&) {
          val_sum = nan;
        } catch (const InfeasibleMassError&) {
          val_sum = nan;
        }
      }
      rec.validation_loss = val_sum / static_cast<double>(val_idx.size());
    } else {
      rec.validation_loss = rec.total_loss;
    }

    const bool epoch_ok = finite && std::isfinite(rec.total_loss) &&
                          rec.skipped_steps == 0;
    bad_epochs = epoch_ok ? 0 : bad_epochs + 1;
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (std::isfinite(rec.validation_loss) && rec.validation_loss < best_loss) {
      best_loss = rec.validation_loss;
      best = model.Clone();
      best_epoch = epoch;
    }
    if (bad_epochs >= train_config.divergence_patience) {
      throw TrainingError("training diverged: " + std::to_string(bad_epochs) +
                          " consecutive non-finite epochs ending at epoch " +
                          std::to_string(epoch));
    }
  }
  return TrainResult{std::move(model), std::move(best), best_epoch,
                     std::move(history)};
}

std::vector<double> LatentSpread(
    const std::vector<std::vector<Eigen::VectorXd>>& latents) {
  const size_t n = latents.size();
  if (n < 2) throw ContractError("latent spread needs at least two samples");
  std::vector<double> spread(latents[0].size());
  for (size_t k = 0; k < spread.size(); ++k) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        sum += (latents[i][k] - latents[j][k]).norm();
      }
    }
    spread[k] = sum / (0.5 * n * (n - 1));
  }
  return spread;
}

double LatentCollapseRatio(
    const std::vector<std::vector<Eigen::VectorXd>>& latents) {
  const std::vector<double> spread = LatentSpread(latents);
  return spread.front() > 0.0 ? spread.back() / spread.front() : 0.0;
}

double MonotoneFraction(const std::vector<std::vector<double>>& costs,
                        double rel_tol) {
  if (costs.empty()) return 0.0;
  int count = 0;
  for (const std::vector<double>& row : costs) {
    bool ok = true;
    for (size_t k = 1; k < row.size(); ++k) {
      if (row[k] > row[k - 1] * (1.0 + rel_tol)) ok = false;
    }
    count += ok ? 1 : 0;
  }
  return static_cast<double>(count) / costs.size();
}

EvalReport EvaluateControls(const ControlProblem& problem,
                            const std::vector<Sample>& samples,
                            const std::vector<Eigen::MatrixXd>& controls) {
  if (samples.size() != controls.size()) {
    throw DimensionError("got " + std::to_string(controls.size()) +
                         " control sequences for " +
                         std::to_string(samples.size()) + " samples");
  }
  if (samples.empty()) throw ContractError("evaluation needs samples");
  NoGradScope no_grad;
  const bool rocket = problem.system == SystemId::kRocket;
  EvalReport report;
  report.system = SystemName(problem.system);
  report.num_samples = static_cast<int>(samples.size());
  report.has_rocket_stats = rocket;

  std::vector<Eigen::MatrixXd> oracle_controls;
  std::vector<int> all(samples.size());
  std::iota(all.begin(), all.end(), 0);
  for (const Sample& s : samples) oracle_controls.push_back(s.u_star);

  std::vector<double> trc_cost, oracle_cost, term_err, trc_fuel, oracle_fuel;
  int bounds_ok = 0, glide_ok = 0;
  double max_depth = 0.0;
  const size_t chunk = 256;
  for (size_t begin = 0; begin < samples.size(); begin += chunk) {
    const size_t end = std::min(samples.size(), begin + chunk);
    const Batch batch = MakeBatch(samples, all, begin, end);
    const Tensor u = StackControls(controls, begin, end);
    const Tensor u_ref = StackControls(oracle_controls, begin, end);
    const Trajectory traj = Rollout(problem, batch.x0, u, batch.target);
    const Trajectory ref = Rollout(problem, batch.x0, u_ref, batch.target);
    const Tensor err =
        NormLastAxis(TerminalError(problem, traj.states, batch.target));
    for (size_t i = 0; i < end - begin; ++i) {
      trc_cost.push_back(traj.cost.at(i));
      oracle_cost.push_back(ref.cost.at(i));
      term_err.push_back(err.at(i));
    }
    if (rocket) {
      const Tensor fuel = FuelUsed(problem, traj.states);
      const Tensor ref_fuel = FuelUsed(problem, ref.states);
      const Tensor thrust = ThrustMagnitude(u);
      const std::vector<double> depth =
          GlideslopeViolationDepth(problem, traj.states);
      const int t = problem.horizon;
      const double lo = problem.rocket.thrust_min * (1.0 - 1e-9);
      const double hi = problem.rocket.thrust_max * (1.0 + 1e-9);
      for (size_t i = 0; i < end - begin; ++i) {
        trc_fuel.push_back(fuel.at(i));
        oracle_fuel.push_back(ref_fuel.at(i));
        bool ok = true;
        for (int r = 0; r < t; ++r) {
          const double m = thrust.at(i * t + r);
          if (!(m >= lo && m <= hi)) ok = false;
        }
        bounds_ok += ok ? 1 : 0;
        glide_ok += depth[i] < 5.0 ? 1 : 0;
        max_depth = std::max(max_depth, depth[i]);
      }
    }
  }
  const double n = static_cast<double>(samples.size());
  report.mean_trc_cost = MeanOf(trc_cost);
  report.mean_oracle_cost = MeanOf(oracle_cost);
  report.cost_ratio = report.mean_trc_cost / report.mean_oracle_cost;
  report.terminal_error_mean = MeanOf(term_err);
  report.terminal_error_median = Median(term_err);
  report.terminal_error_max = *std::max_element(term_err.begin(), term_err.end());
  report.final_costs = trc_cost;
  report.final_controls = controls;
  if (rocket) {
    report.mean_trc_fuel = MeanOf(trc_fuel);
    report.mean_oracle_fuel = MeanOf(oracle_fuel);
    report.fuel_ratio = report.mean_trc_fuel / report.mean_oracle_fuel;
    report.thrust_bounds_fraction = bounds_ok / n;
    report.glideslope_ok_fraction = glide_ok / n;
    report.max_glideslope_depth = max_depth;
  }
  return report;
}

EvalReport Evaluate(const TrcModel& model, const std::vector<Sample>& samples,
                    int batch_size) {
  if (samples.empty()) throw ContractError("evaluation needs samples");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  const ControlProblem& problem = model.problem();
  for (const Sample& s : samples) {
    if (s.x0.size() != problem.state_dim ||
        s.u_star.rows() != problem.horizon ||
        s.u_star.cols() != problem.control_dim) {
      throw DimensionError("dataset shapes do not match the checkpoint");
    }
  }
  const bool rocket = problem.system == SystemId::kRocket;
  NoGradScope no_grad;
  std::vector<int> all(samples.size());
  std::iota(all.begin(), all.end(), 0);

  std::vector<std::vector<double>> costs, residual_norms;
  std::vector<std::vector<ControlStats>> stats;
  std::vector<std::vector<Eigen::VectorXd>> latents;
  std::vector<Eigen::MatrixXd> final_controls;
  std::vector<double> cosines;
  int K = 0;
  for (size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const size_t end = std::min(samples.size(), begin + batch_size);
    const Batch batch = MakeBatch(samples, all, begin, end);
    const ForwardRecord record = model.Forward(batch.x0, batch.target);
    K = record.iterations();
    Tensor final_u = record.controls.back();
    if (rocket) final_u = ProjectThrust(problem, final_u);
    Tensor grad;
    if (K >= 1) {
      grad = TrueCostGradient(problem, batch.x0, batch.target,
                              record.controls[0]);
    }
    const int b = static_cast<int>(end - begin);
    const int dz = record.latents[0].dim(1);
    const size_t flat = static_cast<size_t>(problem.horizon) *
                        problem.control_dim;
    for (int i = 0; i < b; ++i) {
      std::vector<double> c, r;
      std::vector<ControlStats> st;
      std::vector<Eigen::VectorXd> z;
      for (const Tensor& t : record.costs) c.push_back(t.at(i));
      for (const Tensor& t : record.residual_norms) r.push_back(t.at(i));
      for (const Tensor& u : record.controls) {
        st.push_back(StatsOf(StepValues(problem, u, i)));
      }
      for (const Tensor& t : record.latents) {
        z.push_back(Eigen::Map<const Eigen::VectorXd>(
            t.data().data() + static_cast<size_t>(i) * dz, dz));
      }
      costs.push_back(std::move(c));
      residual_norms.push_back(std::move(r));
      stats.push_back(std::move(st));
      latents.push_back(std::move(z));
      final_controls.push_back(LaneMatrix(final_u, i));
      if (K >= 1) {
        const double* du = record.residuals[0].data().data() + i * flat;
        const double* g = grad.data().data() + i * flat;
        double dot = 0.0, n1 = 0.0, n2 = 0.0;
        for (size_t j = 0; j < flat; ++j) {
          dot -= du[j] * g[j];
          n1 += du[j] * du[j];
          n2 += g[j] * g[j];
        }
        cosines.push_back(n1 > 0.0 && n2 > 0.0
                              ? dot / std::sqrt(n1 * n2)
                              : 0.0);
      }
    }
  }

  EvalReport report = EvaluateControls(problem, samples, final_controls);
  report.outer_iterations = K;
  report.costs = costs;
  report.residual_norms = residual_norms;
  report.control_stats = std::move(stats);
  report.latents = std::move(latents);

  const double n = static_cast<double>(samples.size());
  report.mean_cost_per_iter.assign(K + 1, 0.0);
  report.mean_normalized_cost_per_iter.assign(K + 1, 0.0);
  int normalized_rows = 0;
  for (const std::vector<double>& row : costs) {
    for (int k = 0; k <= K; ++k) report.mean_cost_per_iter[k] += row[k] / n;
    if (row[0] > 0.0) {
      for (int k = 0; k <= K; ++k) {
        report.mean_normalized_cost_per_iter[k] += row[k] / row[0];
      }
      ++normalized_rows;
    }
  }
  for (double& v : report.mean_normalized_cost_per_iter) {
    v = normalized_rows ? v / normalized_rows : 0.0;
  }
  report.cost_reduction_ratio =
      report.mean_cost_per_iter[0] > 0.0
          ? report.mean_cost_per_iter[K] / report.mean_cost_per_iter[0]
          : 0.0;
  report.improvement_metric = ImprovementMetric(costs, K);
  report.monotone_fraction = MonotoneFraction(costs);
  for (int k = 0; k < K; ++k) {
    std::vector<double> col;
    for (const std::vector<double>& row : residual_norms) col.push_back(row[k]);
    report.median_residual_norm.push_back(Median(col));
  }
  if (!cosines.empty()) {
    report.mean_cosine = MeanOf(cosines);
    report.cosine_positive_fraction =
        std::count_if(cosines.begin(), cosines.end(),
                      [](double c) { return c > 0.0; }) /
        static_cast<double>(cosines.size());
  }
  if (samples.size() >= 2) {
    report.latent_spread = LatentSpread(report.latents);
    report.latent_collapse_ratio =
        report.latent_spread.front() > 0.0
            ? report.latent_spread.back() / report.latent_spread.front()
            : 0.0;
  }
  return report;
}

}  // namespace trc
