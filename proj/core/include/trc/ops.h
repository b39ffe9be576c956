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

#ifndef TRC_OPS_H_
#define TRC_OPS_H_

#include <vector>

#include "trc/tensor.h"

// Differentiable tensor operations. Every function records itself on the
// active tape when any input requires a gradient. Binary elementwise ops
// broadcast by trailing-dimension alignment: dimensions are compared from
// the right and must match or be 1; missing leading dimensions count as 1.
namespace trc {

// [m,k] x [k,n] -> [m,n].
Tensor MatMul(const Tensor& a, const Tensor& b);
// [N,m,k] x [N,k,n] -> [N,m,n].
Tensor BatchMatMul(const Tensor& a, const Tensor& b);

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Div(const Tensor& a, const Tensor& b);

Tensor Scale(const Tensor& x, double factor);
Tensor AddScalar(const Tensor& x, double value);
Tensor Neg(const Tensor& x);
Tensor Square(const Tensor& x);
Tensor Sqrt(const Tensor& x);
Tensor Relu(const Tensor& x);
// Tanh-approximation GELU.
Tensor Gelu(const Tensor& x);

// Elementwise clamp to [lo, hi] (broadcast against x). The gradient passes
// through where lo <= x <= hi and is zero elsewhere.
Tensor Clamp(const Tensor& x, const Tensor& lo, const Tensor& hi);

// Full reductions to a rank-0 tensor.
Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);
// Reduces the last axis away: [..., n] -> [...].
Tensor SumLastAxis(const Tensor& x);
// Euclidean norm over the last axis, kept as size 1: [..., n] -> [..., 1].
// The gradient at a zero vector is taken as zero.
Tensor NormLastAxis(const Tensor& x);

Tensor Reshape(const Tensor& x, const Shape& shape);
Tensor Concat(const std::vector<Tensor>& parts, int axis);
// Joins equally shaped tensors along a new axis.
Tensor Stack(const std::vector<Tensor>& parts, int axis);
Tensor Slice(const Tensor& x, int axis, int start, int length);
Tensor Permute(const Tensor& x, const std::vector<int>& perm);

// Normalizes the last axis to zero mean and unit variance, then applies
// gamma and beta (both shaped [d]).
Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps = 1e-5);
// Numerically stable softmax over the last axis.
Tensor Softmax(const Tensor& x);

}  // namespace trc

#endif  // TRC_OPS_H_
