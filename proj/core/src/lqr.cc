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

#include "trc/lqr.h"

#include <Eigen/Cholesky>

#include "trc/errors.h"

namespace trc {

void LqrProblem::Validate() const {
  const auto n = a.rows();
  const auto m = b.cols();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n ||
      qf.rows() != n || qf.cols() != n || r.rows() != m || r.cols() != m) {
    throw DimensionError("inconsistent LQR matrix dimensions");
  }
  if (horizon < 1) throw ContractError("LQR horizon must be >= 1");
}

LqrSolution RiccatiLqr(const LqrProblem& lqr, const Eigen::VectorXd& x0) {
  lqr.Validate();
  const int horizon = lqr.horizon;
  LqrSolution sol;
  sol.gains.resize(horizon);
  sol.cost_to_go.resize(horizon + 1);
  sol.cost_to_go[horizon] = lqr.qf;
  for (int t = horizon - 1; t >= 0; --t) {
    const Eigen::MatrixXd& p = sol.cost_to_go[t + 1];
    const Eigen::MatrixXd s = lqr.r + lqr.b.transpose() * p * lqr.b;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("R + B'PB is not positive definite at step " +
                           std::to_string(t));
    }
    sol.gains[t] = llt.solve(lqr.b.transpose() * p * lqr.a);
    const Eigen::MatrixXd next =
        lqr.q + lqr.a.transpose() * p * (lqr.a - lqr.b * sol.gains[t]);
    sol.cost_to_go[t] = 0.5 * (next + next.transpose());
  }
  sol.cost = x0.dot(sol.cost_to_go[0] * x0);
  sol.controls.resize(horizon, lqr.b.cols());
  Eigen::VectorXd x = x0;
  for (int t = 0; t < horizon; ++t) {
    const Eigen::VectorXd u = -sol.gains[t] * x;
    sol.controls.row(t) = u.transpose();
    x = lqr.a * x + lqr.b * u;
  }
  return sol;
}

double LqrCost(const LqrProblem& lqr, const Eigen::VectorXd& x0,
               const Eigen::MatrixXd& controls) {
  lqr.Validate();
  if (controls.rows() != lqr.horizon || controls.cols() != lqr.b.cols()) {
    throw DimensionError("LQR control sequence has the wrong shape");
  }
  Eigen::VectorXd x = x0;
  double cost = 0.0;
  for (int t = 0; t < lqr.horizon; ++t) {
    const Eigen::VectorXd u = controls.row(t).transpose();
    cost += x.dot(lqr.q * x) + u.dot(lqr.r * u);
    x = lqr.a * x + lqr.b * u;
  }
  return cost + x.dot(lqr.qf * x);
}

}  // namespace trc
