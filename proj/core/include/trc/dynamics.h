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

#ifndef TRC_DYNAMICS_H_
#define TRC_DYNAMICS_H_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "trc/tensor.h"

namespace trc {

enum class SystemId {
  kVanDerPol,
  kRocket,
  // Discrete-time linear map x' = A x + B u; used for LQR verification.
  kLinear,
};

std::string SystemName(SystemId id);
SystemId SystemFromName(const std::string& name);

enum class CostKind { kQuadratic, kFuel };

struct VdpParams {
  double mu = 1.0;
};

// Mars powered descent. Units: m, s, kg, N.
struct RocketParams {
  double g_mars = 3.71;
  double isp = 200.7;
  double g0 = 9.81;
  double thrust_min = 4000.0;
  double thrust_max = 13000.0;
  double glideslope_deg = 75.0;
  double v_tol = 1.0;
  double m_dry = 1000.0;
  double m_wet = 2000.0;

  double GlideslopeTan() const;
  void Validate() const;
};

struct LinearParams {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
};

// Quadratic kind: sum_t x'Qx + u'Ru over t < T, plus (x_T - target)'Qf(...).
// Fuel kind: m_0 - m_T + w_pos |r_T - r_target|^2
//            + w_vel max(0, |v_T - v_target| - v_tol)^2.
struct CostSpec {
  CostKind kind = CostKind::kQuadratic;
  Eigen::MatrixXd q;
  Eigen::MatrixXd r;
  Eigen::MatrixXd qf;
  double w_pos = 1.0;   // 1/m^2
  double w_vel = 10.0;  // s^2/m^2
};

struct ControlProblem {
  SystemId system = SystemId::kVanDerPol;
  int state_dim = 0;
  int control_dim = 0;
  int horizon = 0;
  double dt = 0.0;
  Eigen::VectorXd u_min;
  Eigen::VectorXd u_max;
  CostSpec cost;
  Eigen::VectorXd x_target;
  VdpParams vdp;
  RocketParams rocket;
  LinearParams linear;

  // Width of the terminal error fed back to the network. The rocket drops
  // the mass component.
  int error_dim() const;
  int flat_control_dim() const { return horizon * control_dim; }
  // Throws DimensionError / ContractError on inconsistent fields.
  void Validate() const;
};

// |u| <= 2, T = 100, dt = 0.05, Q = diag(10, 5), R = 0.5, Qf = 20 Q.
ControlProblem VanDerPolProblem(const VdpParams& params = {});
// T = 50, dt = 1.15 s, thrust box [-T_max, T_max] per axis, target at the
// origin pad with zero velocity.
ControlProblem RocketProblem(const RocketParams& params = {});
ControlProblem LinearProblem(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                             const Eigen::MatrixXd& qf, int horizon,
                             double control_bound);

// Row-major constant tensor copies of Eigen objects.
Tensor MatrixTensor(const Eigen::MatrixXd& m);
Tensor VectorTensor(const Eigen::VectorXd& v);
// [B, d] tensor holding `v` in every row.
Tensor TileRows(const Eigen::VectorXd& v, int rows);

// Continuous-time state rate for a batch: x [B, d_x], u [B, d_u].
// Throws InfeasibleMassError (step -1) if a rocket lane is below dry mass.
Tensor Derivative(const ControlProblem& problem, const Tensor& x,
                  const Tensor& u);

// One classical RK4 step with u held constant over the step.
Tensor Rk4Step(const ControlProblem& problem, const Tensor& x, const Tensor& u,
               double dt);

// Advances one horizon step: RK4 with problem.dt for continuous systems,
// the exact map for kLinear.
Tensor Step(const ControlProblem& problem, const Tensor& x, const Tensor& u);

struct Trajectory {
  Tensor states;    // [B, T+1, d_x]
  Tensor controls;  // [B, T, d_u]
  Tensor cost;      // [B]
};

// Simulates x0 [B, d_x] under controls [B, T, d_u] and evaluates the cost
// against x_target [B, d_x]. Rocket mass underflow raises
// InfeasibleMassError carrying the step index.
Trajectory Rollout(const ControlProblem& problem, const Tensor& x0,
                   const Tensor& controls, const Tensor& x_target);
// Uses problem.x_target for every lane.
Trajectory Rollout(const ControlProblem& problem, const Tensor& x0,
                   const Tensor& controls);

// Cost per lane, [B].
Tensor TrajectoryCost(const ControlProblem& problem, const Tensor& states,
                      const Tensor& controls, const Tensor& x_target);

// Componentwise clamp to [u_min, u_max]; zero gradient outside the box.
Tensor ClipControls(const ControlProblem& problem, const Tensor& controls);

// x_T - x_target restricted to the fed-back components, [B, d_e].
Tensor TerminalError(const ControlProblem& problem, const Tensor& states,
                     const Tensor& x_target);

// Rocket only: m_0 - m_T per lane, [B].
Tensor FuelUsed(const ControlProblem& problem, const Tensor& states);

// Rocket only: thrust magnitude per step, [B, T, 1].
Tensor ThrustMagnitude(const Tensor& controls);

// Rocket only: horizontal glideslope excess |r_xy| - z tan(gamma) for every
// state, [B, T+1, 1]. Positive values are violations.
Tensor GlideslopeExcess(const ControlProblem& problem, const Tensor& states);

// Rocket only, not differentiable: Euclidean distance of each state from
// the admissible glideslope cone, maximized over the trajectory, [B].
std::vector<double> GlideslopeViolationDepth(const ControlProblem& problem,
                                             const Tensor& states);

// Rocket only, not differentiable: rescales every thrust vector so that its
// norm lies in [T_min, T_max]. A zero vector maps to T_min straight up.
Tensor ProjectThrust(const ControlProblem& problem, const Tensor& controls);

}  // namespace trc

#endif  // TRC_DYNAMICS_H_
