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

#include "trc/model.h"
#include "trc/normalizer.h"
#include "trc/training.h"

namespace trc {
namespace {

TrcModel MakeModel(int latent, int hidden, int blocks) {
  const ControlProblem p = VanDerPolProblem();
  TrcConfig c = TrcConfig::ForProblem(p);
  c.latent_dim = latent;
  c.hidden_dim = hidden;
  c.num_blocks = blocks;
  return TrcModel(p, c, Normalizer::Identity(2, 1), 1);
}

// Single-sample inference at the default size and the desk-scale size.
void BM_ForwardSingle(benchmark::State& state) {
  const TrcModel m = state.range(0) == 0 ? MakeModel(256, 512, 3)
                                         : MakeModel(128, 256, 2);
  const Tensor x0({1, 2}, {1.0, -0.5});
  const Tensor target = Tensor::Zeros({1, 2});
  NoGradScope no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(m.Forward(x0, target));
}
BENCHMARK(BM_ForwardSingle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// One training step: forward, loss, backward over a batch of 64.
void BM_TrainStep(benchmark::State& state) {
  const TrcModel m = MakeModel(128, 256, 2);
  std::vector<double> x(128);
  for (int i = 0; i < 128; ++i) x[i] = 0.01 * i - 0.6;
  const Tensor x0({64, 2}, x);
  const Tensor target = Tensor::Zeros({64, 2});
  const Tensor u_star = Tensor::Zeros({64, 100, 1});
  for (auto _ : state) {
    Tape tape;
    TapeScope scope(&tape);
    const LossTerms loss = ProcessSupervisionLoss(
        m.Forward(x0, target), u_star, m.normalizer(), 0.1);
    Backward(loss.total, tape);
    for (Tensor t : m.ParameterTensors()) t.ZeroGrad();
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace trc
