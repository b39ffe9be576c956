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

#ifndef TRC_NORMALIZER_H_
#define TRC_NORMALIZER_H_

#include <Eigen/Core>
#include <vector>

#include "trc/oracle.h"
#include "trc/tensor.h"

namespace trc {

// Per-dimension standardization of network inputs and outputs. States and
// targets share the state statistics; controls are pooled over time per
// control component.
struct Normalizer {
  static constexpr double kStdFloor = 1e-6;

  Eigen::VectorXd state_mean;
  Eigen::VectorXd state_std;
  Eigen::VectorXd control_mean;
  Eigen::VectorXd control_std;

  // Statistics of x0 and u_star over `samples`.
  static Normalizer Fit(const std::vector<Sample>& samples);
  static Normalizer Identity(int state_dim, int control_dim);

  // [B, d_x] -> [B, d_x].
  Tensor NormalizeStates(const Tensor& x) const;
  // Divides by the state std of the first d_e components; no shift.
  Tensor NormalizeError(const Tensor& e) const;
  // [B, T, d_u] -> [B, T, d_u].
  Tensor NormalizeControls(const Tensor& u) const;
  Tensor DenormalizeControls(const Tensor& u) const;
  // Multiplies by the control std only, for residual updates.
  Tensor ScaleResidual(const Tensor& du) const;
};

}  // namespace trc

#endif  // TRC_NORMALIZER_H_
