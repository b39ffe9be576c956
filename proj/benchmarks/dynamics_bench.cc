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

#include <benchmark/benchmark.h>

#include "trc/dynamics.h"
#include "trc/ops.h"
#include "trc/oracle.h"
#include "trc/tensor.h"

namespace trc {
namespace {

void BM_VdpRollout(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const ControlProblem p = VanDerPolProblem();
  const Tensor x0 = Tensor::Full({batch, 2}, 0.5);
  const Tensor u = Tensor::Full({batch, p.horizon, 1}, 0.1);
  NoGradScope no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(Rollout(p, x0, u));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_VdpRollout)->Arg(1)->Arg(64)->Arg(256);

void BM_VdpRolloutWithGradient(benchmark::State& state) {
  const ControlProblem p = VanDerPolProblem();
  const Tensor x0 = Tensor::Full({64, 2}, 0.5);
  Tensor u = Tensor::Full({64, p.horizon, 1}, 0.1);
  u.set_requires_grad(true);
  for (auto _ : state) {
    Tape tape;
    TapeScope scope(&tape);
    Backward(Sum(Rollout(p, x0, u).cost), tape);
    u.ZeroGrad();
  }
}
BENCHMARK(BM_VdpRolloutWithGradient);

void BM_RocketRollout(benchmark::State& state) {
  const ControlProblem p = RocketProblem();
  Eigen::VectorXd x0(7);
  x0 << 100, -50, 2000, 5, 5, -75, 1900;
  Eigen::VectorXd thrust(3);
  thrust << 0, 0, 1900 * p.rocket.g_mars;
  std::vector<double> u;
  for (int t = 0; t < p.horizon; ++t) {
    u.insert(u.end(), thrust.data(), thrust.data() + 3);
  }
  const Tensor controls({1, p.horizon, 3}, u);
  NoGradScope no_grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Rollout(p, TileRows(x0, 1), controls));
  }
}
BENCHMARK(BM_RocketRollout);

void BM_OracleVdp(benchmark::State& state) {
  const ControlProblem p = VanDerPolProblem();
  OracleConfig config;
  config.restarts = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        SolveDirectShooting(p, Eigen::Vector2d(1.0, -0.5), config));
  }
}
BENCHMARK(BM_OracleVdp)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace trc
