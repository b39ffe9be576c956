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

#include "trc/ops.h"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>

#include "op_cases.h"
#include "test_util.h"
#include "trc/errors.h"

namespace trc {
namespace {

using testing::ElementwiseGradError;
using testing::RandomTensor;
using testing::WeightedSum;

GTEST_TEST(MatMulTest, Identity) {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor m({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(MatMul(eye, m).values(), m.values());
}

GTEST_TEST(MatMulTest, HandArithmetic) {
  const Tensor out = MatMul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4}));
  EXPECT_EQ(out.shape(), (Shape{1, 1}));
  EXPECT_EQ(out.item(), 11.0);
}

GTEST_TEST(MatMulTest, MismatchNamesBothShapes) {
  try {
    MatMul(Tensor::Zeros({2, 3}), Tensor::Zeros({2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find(ShapeToString({2, 3})), std::string::npos) << what;
  }
}

GTEST_TEST(MatMulTest, GradientOfSum) {
  std::mt19937_64 rng(1);
  Tensor a = RandomTensor({4, 5}, rng);
  Tensor b = RandomTensor({5, 3}, rng);
  EXPECT_LT(ElementwiseGradError([&] { return Sum(MatMul(a, b)); }, {a, b}),
            1e-7);
}

GTEST_TEST(ElementwiseTest, Examples) {
  Tensor x({1}, {3});
  x.set_requires_grad(true);
  Tape tape;
  {
    TapeScope scope(&tape);
    const Tensor y = Square(x);
    EXPECT_EQ(y.item(), 9.0);
    Backward(Sum(y), tape);
  }
  EXPECT_EQ(x.grad()[0], 6.0);
  EXPECT_EQ(Add(Tensor({2}, {1, 2}), Tensor({2}, {0, 0})).values(),
            (std::vector<double>{1, 2}));
}

GTEST_TEST(ElementwiseTest, MeanGradient) {
  std::mt19937_64 rng(2);
  Tensor x = RandomTensor({100}, rng);
  Tape tape;
  TapeScope scope(&tape);
  Backward(Mean(x), tape);
  for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 0.01);
}

GTEST_TEST(ElementwiseTest, TrailingBroadcast) {
  const Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b({3}, {10, 20, 30});
  EXPECT_EQ(Add(a, b).values(), (std::vector<double>{11, 22, 33, 14, 25, 36}));
  const Tensor col({2, 1}, {1, 2});
  EXPECT_EQ(Mul(a, col).values(), (std::vector<double>{1, 2, 3, 8, 10, 12}));
  EXPECT_THROW(Add(a, Tensor::Zeros({2})), DimensionError);
}

GTEST_TEST(LayerNormTest, ConstantRowMapsToZero) {
  const Tensor y = LayerNorm(Tensor({3}, {1, 1, 1}), Tensor::Full({3}, 1.0),
                             Tensor::Zeros({3}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

GTEST_TEST(LayerNormTest, StandardizedRowIsKept) {
  const Tensor y = LayerNorm(Tensor({2}, {-1, 1}), Tensor::Full({2}, 1.0),
                             Tensor::Zeros({2}));
  EXPECT_NEAR(y.at(0), -1.0, 1e-5);
  EXPECT_NEAR(y.at(1), 1.0, 1e-5);
}

GTEST_TEST(LayerNormTest, Gradient) {
  std::mt19937_64 rng(4);
  Tensor x = RandomTensor({3, 6}, rng);
  Tensor g = RandomTensor({6}, rng);
  Tensor b = RandomTensor({6}, rng);
  EXPECT_LT(ElementwiseGradError(
                [&] { return WeightedSum(LayerNorm(x, g, b)); }, {x, g, b}),
            1e-6);
}

GTEST_TEST(GeluTest, Values) {
  EXPECT_EQ(Gelu(Tensor::Scalar(0.0)).item(), 0.0);
  EXPECT_NEAR(Gelu(Tensor::Scalar(10.0)).item(), 10.0, 1e-12);
}

GTEST_TEST(GeluTest, GradientAtHalf) {
  Tensor x = Tensor::Scalar(0.5);
  x.set_requires_grad(true);
  EXPECT_LT(ElementwiseGradError([&] { return Gelu(x); }, {x}), 1e-7);
}

GTEST_TEST(SoftmaxTest, Values) {
  const Tensor a = Softmax(Tensor({2}, {0, 0}));
  EXPECT_EQ(a.values(), (std::vector<double>{0.5, 0.5}));
  const Tensor b = Softmax(Tensor({2}, {1000, 0}));
  EXPECT_EQ(b.at(0), 1.0);
  EXPECT_EQ(b.at(1), 0.0);
}

GTEST_TEST(SoftmaxTest, RowsSumToOne) {
  std::mt19937_64 rng(5);
  const Tensor y = Softmax(RandomTensor({7, 5}, rng, -20, 20));
  for (int r = 0; r < 7; ++r) {
    double s = 0.0;
    for (int c = 0; c < 5; ++c) s += y.at(r * 5 + c);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

GTEST_TEST(SoftmaxTest, Gradient) {
  std::mt19937_64 rng(6);
  Tensor x = RandomTensor({4, 5}, rng, -3, 3);
  EXPECT_LT(ElementwiseGradError([&] { return WeightedSum(Softmax(x)); }, {x}),
            1e-6);
}

GTEST_TEST(ShapeOpsTest, ConcatSliceRoundTrip) {
  const Tensor a({2, 2}, {1, 2, 3, 4});
  const Tensor b({2, 1}, {5, 6});
  const Tensor c = Concat({a, b}, 1);
  EXPECT_EQ(c.values(), (std::vector<double>{1, 2, 5, 3, 4, 6}));
  EXPECT_EQ(Slice(c, 1, 2, 1).values(), b.values());
  const Tensor s = Stack({a, a}, 0);
  EXPECT_EQ(s.shape(), (Shape{2, 2, 2}));
  const Tensor p = Permute(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), {1, 0});
  EXPECT_EQ(p.values(), (std::vector<double>{1, 4, 2, 5, 3, 6}));
}

GTEST_TEST(OpsPropertyTest, GradientsMatchFiniteDifferences) {
  for (const testing::OpCase& op : testing::AllOps()) {
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
      std::mt19937_64 rng(1000 + draw);
      std::vector<Tensor> inputs;
      for (const Shape& s : op.shapes) {
        inputs.push_back(RandomTensor(s, rng, op.lo, op.hi));
      }
      worst = std::max(worst, ElementwiseGradError(
                                  [&] { return WeightedSum(op.fn(inputs)); },
                                  inputs));
    }
    EXPECT_LT(worst, 1e-5) << op.name;
  }
}

}  // namespace
}  // namespace trc
