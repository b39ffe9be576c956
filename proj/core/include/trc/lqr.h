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

#ifndef TRC_LQR_H_
#define TRC_LQR_H_

#include <Eigen/Core>
#include <vector>

namespace trc {

// Finite-horizon discrete LQR: x' = A x + B u with cost
// sum_{t<T} x'Qx + u'Ru + x_T' Qf x_T.
struct LqrProblem {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd q;
  Eigen::MatrixXd r;
  Eigen::MatrixXd qf;
  int horizon = 0;

  void Validate() const;
};

struct LqrSolution {
  double cost = 0.0;
  // u_t = -gains[t] x_t.
  std::vector<Eigen::MatrixXd> gains;
  // cost_to_go[t] = P_t; cost_to_go[T] = Qf.
  std::vector<Eigen::MatrixXd> cost_to_go;
  // Closed-loop optimal controls from x0, one row per step.
  Eigen::MatrixXd controls;
};

// Backward Riccati recursion. Throws NumericalError when R + B'PB is not
// positive definite.
LqrSolution RiccatiLqr(const LqrProblem& lqr, const Eigen::VectorXd& x0);

// Cost of an open-loop control sequence (rows = steps) under the LQR model.
double LqrCost(const LqrProblem& lqr, const Eigen::VectorXd& x0,
               const Eigen::MatrixXd& controls);

}  // namespace trc

#endif  // TRC_LQR_H_
