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

#include "trc/normalizer.h"

#include <algorithm>
#include <cmath>

#include "trc/dynamics.h"
#include "trc/errors.h"
#include "trc/ops.h"

namespace trc {
namespace {

Eigen::VectorXd Floor(Eigen::VectorXd v) {
  for (int i = 0; i < v.size(); ++i) {
    v(i) = std::max(v(i), Normalizer::kStdFloor);
  }
  return v;
}

}  // namespace

Normalizer Normalizer::Fit(const std::vector<Sample>& samples) {
  if (samples.empty()) throw ContractError("cannot fit a normalizer on no data");
  const int dx = static_cast<int>(samples[0].x0.size());
  const int du = static_cast<int>(samples[0].u_star.cols());
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(dx), xss = xs;
  Eigen::VectorXd us = Eigen::VectorXd::Zero(du), uss = us;
  int64_t nu = 0;
  for (const Sample& s : samples) {
    xs += s.x0;
    xss += s.x0.cwiseProduct(s.x0);
    for (int t = 0; t < s.u_star.rows(); ++t) {
      const Eigen::VectorXd u = s.u_star.row(t).transpose();
      us += u;
      uss += u.cwiseProduct(u);
      ++nu;
    }
  }
  const double n = static_cast<double>(samples.size());
  Normalizer norm;
  norm.state_mean = xs / n;
  norm.state_std = Floor(
      (xss / n - norm.state_mean.cwiseProduct(norm.state_mean))
          .cwiseMax(0.0)
          .cwiseSqrt());
  norm.control_mean = us / static_cast<double>(nu);
  norm.control_std = Floor(
      (uss / static_cast<double>(nu) -
       norm.control_mean.cwiseProduct(norm.control_mean))
          .cwiseMax(0.0)
          .cwiseSqrt());
  return norm;
}

Normalizer Normalizer::Identity(int state_dim, int control_dim) {
  Normalizer norm;
  norm.state_mean = Eigen::VectorXd::Zero(state_dim);
  norm.state_std = Eigen::VectorXd::Ones(state_dim);
  norm.control_mean = Eigen::VectorXd::Zero(control_dim);
  norm.control_std = Eigen::VectorXd::Ones(control_dim);
  return norm;
}

Tensor Normalizer::NormalizeStates(const Tensor& x) const {
  return Div(Sub(x, VectorTensor(state_mean)), VectorTensor(state_std));
}

Tensor Normalizer::NormalizeError(const Tensor& e) const {
  const int de = e.dim(-1);
  return Div(e, VectorTensor(state_std.head(de)));
}

Tensor Normalizer::NormalizeControls(const Tensor& u) const {
  return Div(Sub(u, VectorTensor(control_mean)), VectorTensor(control_std));
}

Tensor Normalizer::DenormalizeControls(const Tensor& u) const {
  return Add(Mul(u, VectorTensor(control_std)), VectorTensor(control_mean));
}

Tensor Normalizer::ScaleResidual(const Tensor& du) const {
  return Mul(du, VectorTensor(control_std));
}

}  // namespace trc
