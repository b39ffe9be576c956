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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <unistd.h>

#include <filesystem>

#include "test_util.h"
#include "trc/checkpoint.h"
#include "trc/config_io.h"
#include "trc/dataset_io.h"
#include "trc/errors.h"

namespace trc {
namespace {

namespace fs = std::filesystem;

fs::path TempDir() {
  const fs::path dir = fs::temp_directory_path() /
                       ("trc_io_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

Dataset SmallDataset() {
  ControlProblem p = VanDerPolProblem();
  p.horizon = 10;
  OracleConfig oc;
  oc.max_iters = 100;
  oc.restarts = 1;
  return GenerateDataset(p, 5, oc, 3);
}

TrcModel SmallModel(const ControlProblem& p, uint64_t seed) {
  TrcConfig c = TrcConfig::ForProblem(p);
  c.latent_dim = 16;
  c.hidden_dim = 32;
  c.num_blocks = 1;
  c.num_heads = 2;
  return TrcModel(p, c, Normalizer::Identity(p.state_dim, p.control_dim),
                  seed);
}

// |a - b| / |a| over all elements.
double RelativeDiff(const Tensor& a, const Tensor& b) {
  double diff = 0.0;
  double norm = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    diff += (a.at(i) - b.at(i)) * (a.at(i) - b.at(i));
    norm += a.at(i) * a.at(i);
  }
  return std::sqrt(diff / norm);
}

GTEST_TEST(DatasetIoTest, RoundTripIsByteIdentical) {
  const Dataset d = SmallDataset();
  const std::string text = SerializeDataset(d);
  const Dataset back = ParseDataset(text);
  EXPECT_EQ(SerializeDataset(back), text);
  ASSERT_EQ(back.samples.size(), d.samples.size());
  EXPECT_EQ(back.samples[2].u_star, d.samples[2].u_star);
  EXPECT_EQ(back.samples[2].j_star, d.samples[2].j_star);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);

  const fs::path path = TempDir() / "d.jsonl";
  WriteDataset(path.string(), d);
  EXPECT_EQ(ReadTextFile(path.string()), text);
}

GTEST_TEST(DatasetIoTest, RejectsCorruption) {
  const std::string text = SerializeDataset(SmallDataset());
  EXPECT_THROW(ParseDataset(""), IoError);
  EXPECT_THROW(ParseDataset("{not json\n"), IoError);
  // Drop the last record: the header count no longer matches.
  const std::string truncated =
      text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  EXPECT_THROW(ParseDataset(truncated), IoError);
  EXPECT_THROW(ReadDataset("/nonexistent/trc.jsonl"), IoError);
}

GTEST_TEST(CheckpointTest, RoundTripIsByteIdentical) {
  const ControlProblem p = VanDerPolProblem();
  const TrcModel m = SmallModel(p, 5);
  MetricsRecord rec;
  rec.epoch = 0;
  rec.control_loss = 1.5;
  rec.normalized_cost_per_iter = {1.0, 0.5, 0.25, 0.2};
  const std::string bytes = SerializeCheckpoint(m, TrainConfig{}, {rec});
  const Checkpoint c = ParseCheckpoint(bytes);
  EXPECT_EQ(SerializeCheckpoint(c.model, c.train_config, c.history), bytes);
  ASSERT_EQ(c.history.size(), 1u);
  EXPECT_EQ(c.history[0].normalized_cost_per_iter,
            rec.normalized_cost_per_iter);
  EXPECT_EQ(c.model.ParamCount(), m.ParamCount());
}

GTEST_TEST(CheckpointTest, ForwardAfterReloadMatches) {
  const ControlProblem p = VanDerPolProblem();
  const TrcModel m = SmallModel(p, 6);
  const fs::path path = TempDir() / "m.ckpt";
  SaveCheckpoint(path.string(), m, TrainConfig{});
  const Checkpoint c = LoadCheckpoint(path.string());
  const Tensor x0({3, 2}, {1.0, -0.5, -1.5, 0.5, 0.2, 2.0});
  const Tensor target = Tensor::Zeros({3, 2});
  const ForwardRecord a = m.Forward(x0, target);
  const ForwardRecord b = c.model.Forward(x0, target);
  EXPECT_LT(RelativeDiff(a.controls.back(), b.controls.back()), 1e-6);
  EXPECT_LT(RelativeDiff(a.costs.back(), b.costs.back()), 1e-6);
}

GTEST_TEST(CheckpointTest, RejectsCorruption) {
  const TrcModel m = SmallModel(VanDerPolProblem(), 7);
  const std::string bytes = SerializeCheckpoint(m, TrainConfig{}, {});
  EXPECT_THROW(ParseCheckpoint("NOTACKPT"), IoError);
  EXPECT_THROW(ParseCheckpoint(bytes.substr(0, bytes.size() - 4)), IoError);
  std::string flipped = bytes;
  flipped[flipped.size() - 3] ^= 0x10;
  EXPECT_THROW(ParseCheckpoint(flipped), IoError);
  EXPECT_THROW(LoadCheckpoint("/nonexistent/trc.ckpt"), IoError);
}

GTEST_TEST(ConfigIoTest, RoundTripsAndUnknownKeys) {
  TrcConfig c;
  c.latent_dim = 64;
  c.inner_cycles = 2;
  const TrcConfig back = TrcConfigFromJson(ToJson(c));
  EXPECT_EQ(back.latent_dim, 64);
  EXPECT_EQ(back.inner_cycles, 2);
  EXPECT_THROW(TrcConfigFromJson(Json{{"latent_dimension", 3}}),
               ContractError);
  EXPECT_THROW(TrainConfigFromJson(Json{{"epochs", "many"}}), ContractError);

  TrainConfig t;
  t.lambda = 0.3;
  t.seed = 123456789012345ull;
  const TrainConfig tb = TrainConfigFromJson(ToJson(t));
  EXPECT_EQ(tb.lambda, 0.3);
  EXPECT_EQ(tb.seed, t.seed);

  const ControlProblem rocket = RocketProblem();
  const ControlProblem rb = ProblemFromJson(ToJson(rocket));
  EXPECT_EQ(ToJson(rb), ToJson(rocket));
}

GTEST_TEST(ConfigIoTest, NormalizerRoundTrip) {
  const Normalizer n = Normalizer::Fit(SmallDataset().samples);
  const Normalizer back = NormalizerFromJson(ToJson(n));
  EXPECT_EQ(back.state_mean, n.state_mean);
  EXPECT_EQ(back.state_std, n.state_std);
  EXPECT_EQ(back.control_mean, n.control_mean);
  EXPECT_EQ(back.control_std, n.control_std);
}

GTEST_TEST(ConfigIoTest, AtomicWriteCreatesParents) {
  const fs::path path = TempDir() / "nested" / "deeper" / "x.txt";
  WriteFileAtomic(path.string(), "hello\n");
  EXPECT_EQ(ReadTextFile(path.string()), "hello\n");
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  EXPECT_THROW(ReadJsonFile(path.string()), IoError);
}

}  // namespace
}  // namespace trc
