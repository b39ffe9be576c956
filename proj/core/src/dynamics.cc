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

#include "trc/dynamics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "op_util.h"
#include "trc/errors.h"
#include "trc/ops.h"

namespace trc {
namespace {

using internal::GradOrNull;
using internal::Record;
using internal::Recording;

constexpr int kRocketStateDim = 7;

void CheckBatch(const ControlProblem& problem, const Tensor& x,
                const Tensor& u) {
  if (x.rank() != 2 || x.dim(1) != problem.state_dim || u.rank() != 2 ||
      u.dim(1) != problem.control_dim || u.dim(0) != x.dim(0)) {
    throw DimensionError("state/control batch shapes " +
                         ShapeToString(x.shape()) + " and " +
                         ShapeToString(u.shape()) + " do not fit the problem");
  }
}

// f(x, u) = [x2, mu (1 - x1^2) x2 - x1 + u].
Tensor VdpDerivative(const Tensor& x, const Tensor& u, double mu) {
  const int batch = x.dim(0);
  const auto& xv = x.values();
  const auto& uv = u.values();
  std::vector<double> out(2 * batch);
  for (int b = 0; b < batch; ++b) {
    const double x1 = xv[2 * b], x2 = xv[2 * b + 1];
    out[2 * b] = x2;
    out[2 * b + 1] = mu * (1.0 - x1 * x1) * x2 - x1 + uv[b];
  }
  Tensor y({batch, 2}, std::move(out));
  if (Recording({&x, &u})) {
    auto xi = x.impl();
    auto ui = u.impl();
    Record("vdp_derivative", y,
           [xi, ui, mu, batch](const std::vector<double>& g) {
             double* gx = GradOrNull(xi);
             double* gu = GradOrNull(ui);
             for (int b = 0; b < batch; ++b) {
               const double x1 = xi->data[2 * b], x2 = xi->data[2 * b + 1];
               const double g1 = g[2 * b], g2 = g[2 * b + 1];
               if (gx) {
                 gx[2 * b] += g2 * (-2.0 * mu * x1 * x2 - 1.0);
                 gx[2 * b + 1] += g1 + g2 * mu * (1.0 - x1 * x1);
               }
               if (gu) gu[b] += g2;
             }
           });
  }
  return y;
}

// r' = v, v' = T / m + g, m' = -|T| / (Isp g0).
Tensor RocketDerivative(const Tensor& x, const Tensor& u,
                        const RocketParams& p) {
  const int batch = x.dim(0);
  const auto& xv = x.values();
  const auto& uv = u.values();
  const double exhaust = p.isp * p.g0;
  std::vector<double> out(kRocketStateDim * batch);
  for (int b = 0; b < batch; ++b) {
    const double* s = xv.data() + kRocketStateDim * b;
    const double* thrust = uv.data() + 3 * b;
    double* d = out.data() + kRocketStateDim * b;
    const double m = s[6];
    if (!(m >= p.m_dry)) {
      throw InfeasibleMassError(
          "rocket mass " + std::to_string(m) + " kg is below dry mass " +
              std::to_string(p.m_dry) + " kg",
          -1);
    }
    const double tnorm = std::sqrt(thrust[0] * thrust[0] +
                                   thrust[1] * thrust[1] +
                                   thrust[2] * thrust[2]);
    d[0] = s[3];
    d[1] = s[4];
    d[2] = s[5];
    d[3] = thrust[0] / m;
    d[4] = thrust[1] / m;
    d[5] = thrust[2] / m - p.g_mars;
    d[6] = -tnorm / exhaust;
  }
  Tensor y({batch, kRocketStateDim}, std::move(out));
  if (Recording({&x, &u})) {
    auto xi = x.impl();
    auto ui = u.impl();
    Record("rocket_derivative", y,
           [xi, ui, exhaust, batch](const std::vector<double>& g) {
             double* gx = GradOrNull(xi);
             double* gu = GradOrNull(ui);
             for (int b = 0; b < batch; ++b) {
               const double* s = xi->data.data() + kRocketStateDim * b;
               const double* thrust = ui->data.data() + 3 * b;
               const double* gr = g.data() + kRocketStateDim * b;
               const double m = s[6];
               const double tnorm = std::sqrt(thrust[0] * thrust[0] +
                                              thrust[1] * thrust[1] +
                                              thrust[2] * thrust[2]);
               if (gx) {
                 double* gs = gx + kRocketStateDim * b;
                 gs[3] += gr[0];
                 gs[4] += gr[1];
                 gs[5] += gr[2];
                 gs[6] -= (gr[3] * thrust[0] + gr[4] * thrust[1] +
                           gr[5] * thrust[2]) /
                          (m * m);
               }
               if (gu) {
                 double* gt = gu + 3 * b;
                 for (int j = 0; j < 3; ++j) {
                   gt[j] += gr[3 + j] / m;
                   if (tnorm > 0.0) gt[j] -= gr[6] * thrust[j] / (tnorm * exhaust);
                 }
               }
             }
           });
  }
  return y;
}

Tensor LinearStep(const ControlProblem& problem, const Tensor& x,
                  const Tensor& u) {
  const Tensor a_t = MatrixTensor(problem.linear.a.transpose());
  const Tensor b_t = MatrixTensor(problem.linear.b.transpose());
  return Add(MatMul(x, a_t), MatMul(u, b_t));
}

// Lanes' quadratic form sum_j (x M)_j x_j for x [N, d].
Tensor QuadraticForm(const Tensor& x, const Eigen::MatrixXd& m) {
  return SumLastAxis(Mul(MatMul(x, MatrixTensor(m)), x));
}

Tensor TargetRows(const ControlProblem& problem, int batch) {
  return TileRows(problem.x_target, batch);
}

}  // namespace

std::string SystemName(SystemId id) {
  switch (id) {
    case SystemId::kVanDerPol:
      return "vdp";
    case SystemId::kRocket:
      return "rocket";
    case SystemId::kLinear:
      return "linear";
  }
  return "unknown";
}

SystemId SystemFromName(const std::string& name) {
  if (name == "vdp") return SystemId::kVanDerPol;
  if (name == "rocket") return SystemId::kRocket;
  if (name == "linear") return SystemId::kLinear;
  throw ContractError("unknown problem '" + name + "'");
}

double RocketParams::GlideslopeTan() const {
  return std::tan(glideslope_deg * std::numbers::pi / 180.0);
}

void RocketParams::Validate() const {
  if (!(0.0 < thrust_min && thrust_min < thrust_max)) {
    throw ContractError("rocket thrust bounds must satisfy 0 < T_min < T_max");
  }
  if (!(m_dry < m_wet)) throw ContractError("rocket m_dry must be < m_wet");
  if (!(glideslope_deg > 0.0 && glideslope_deg < 90.0)) {
    throw ContractError("rocket glideslope angle must lie in (0, 90) deg");
  }
}

int ControlProblem::error_dim() const {
  return system == SystemId::kRocket ? 6 : state_dim;
}

void ControlProblem::Validate() const {
  if (state_dim <= 0 || control_dim <= 0 || horizon <= 0) {
    throw DimensionError("problem dimensions must be positive");
  }
  if (u_min.size() != control_dim || u_max.size() != control_dim ||
      x_target.size() != state_dim) {
    throw DimensionError("bounds or target do not match problem dimensions");
  }
  if (!((u_min.array() < u_max.array()).all())) {
    throw ContractError("u_min must be < u_max componentwise");
  }
  if (system != SystemId::kLinear && !(dt > 0.0)) {
    throw ContractError("dt must be positive");
  }
  if (cost.kind == CostKind::kQuadratic) {
    if (cost.q.rows() != state_dim || cost.q.cols() != state_dim ||
        cost.qf.rows() != state_dim || cost.qf.cols() != state_dim ||
        cost.r.rows() != control_dim || cost.r.cols() != control_dim) {
      throw DimensionError("cost matrices do not match problem dimensions");
    }
  }
  switch (system) {
    case SystemId::kVanDerPol:
      if (state_dim != 2 || control_dim != 1) {
        throw DimensionError("vdp requires d_x = 2 and d_u = 1");
      }
      break;
    case SystemId::kRocket:
      if (state_dim != kRocketStateDim || control_dim != 3) {
        throw DimensionError("rocket requires d_x = 7 and d_u = 3");
      }
      if (cost.kind != CostKind::kFuel) {
        throw ContractError("rocket uses the fuel cost");
      }
      rocket.Validate();
      break;
    case SystemId::kLinear:
      if (linear.a.rows() != state_dim || linear.a.cols() != state_dim ||
          linear.b.rows() != state_dim || linear.b.cols() != control_dim) {
        throw DimensionError("linear (A, B) do not match problem dimensions");
      }
      break;
  }
}

ControlProblem VanDerPolProblem(const VdpParams& params) {
  ControlProblem p;
  p.system = SystemId::kVanDerPol;
  p.state_dim = 2;
  p.control_dim = 1;
  p.horizon = 100;
  p.dt = 0.05;
  p.u_min = Eigen::VectorXd::Constant(1, -2.0);
  p.u_max = Eigen::VectorXd::Constant(1, 2.0);
  p.cost.kind = CostKind::kQuadratic;
  p.cost.q = Eigen::Vector2d(10.0, 5.0).asDiagonal();
  p.cost.r = Eigen::MatrixXd::Constant(1, 1, 0.5);
  p.cost.qf = 20.0 * p.cost.q;
  p.x_target = Eigen::VectorXd::Zero(2);
  p.vdp = params;
  return p;
}

ControlProblem RocketProblem(const RocketParams& params) {
  ControlProblem p;
  p.system = SystemId::kRocket;
  p.state_dim = kRocketStateDim;
  p.control_dim = 3;
  p.horizon = 50;
  p.dt = 1.15;
  p.u_min = Eigen::VectorXd::Constant(3, -params.thrust_max);
  p.u_max = Eigen::VectorXd::Constant(3, params.thrust_max);
  p.cost.kind = CostKind::kFuel;
  p.x_target = Eigen::VectorXd::Zero(kRocketStateDim);
  p.rocket = params;
  return p;
}

ControlProblem LinearProblem(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                             const Eigen::MatrixXd& qf, int horizon,
                             double control_bound) {
  ControlProblem p;
  p.system = SystemId::kLinear;
  p.state_dim = static_cast<int>(a.rows());
  p.control_dim = static_cast<int>(b.cols());
  p.horizon = horizon;
  p.dt = 1.0;
  p.u_min = Eigen::VectorXd::Constant(p.control_dim, -control_bound);
  p.u_max = Eigen::VectorXd::Constant(p.control_dim, control_bound);
  p.cost.kind = CostKind::kQuadratic;
  p.cost.q = q;
  p.cost.r = r;
  p.cost.qf = qf;
  p.x_target = Eigen::VectorXd::Zero(p.state_dim);
  p.linear.a = a;
  p.linear.b = b;
  p.Validate();
  return p;
}

Tensor MatrixTensor(const Eigen::MatrixXd& m) {
  std::vector<double> data(m.size());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) data[i * m.cols() + j] = m(i, j);
  }
  return Tensor({static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                std::move(data));
}

Tensor VectorTensor(const Eigen::VectorXd& v) {
  return Tensor({static_cast<int>(v.size())},
                std::vector<double>(v.data(), v.data() + v.size()));
}

Tensor TileRows(const Eigen::VectorXd& v, int rows) {
  const int d = static_cast<int>(v.size());
  std::vector<double> data(static_cast<size_t>(rows) * d);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < d; ++j) data[r * d + j] = v(j);
  }
  return Tensor({rows, d}, std::move(data));
}

Tensor Derivative(const ControlProblem& problem, const Tensor& x,
                  const Tensor& u) {
  CheckBatch(problem, x, u);
  switch (problem.system) {
    case SystemId::kVanDerPol:
      return VdpDerivative(x, u, problem.vdp.mu);
    case SystemId::kRocket:
      return RocketDerivative(x, u, problem.rocket);
    case SystemId::kLinear:
      break;
  }
  throw ContractError("the linear system is discrete-time; use Step()");
}

Tensor Rk4Step(const ControlProblem& problem, const Tensor& x, const Tensor& u,
               double dt) {
  if (!(dt > 0.0)) throw ContractError("rk4 step requires dt > 0");
  const Tensor k1 = Derivative(problem, x, u);
  const Tensor k2 = Derivative(problem, Add(x, Scale(k1, 0.5 * dt)), u);
  const Tensor k3 = Derivative(problem, Add(x, Scale(k2, 0.5 * dt)), u);
  const Tensor k4 = Derivative(problem, Add(x, Scale(k3, dt)), u);
  const Tensor slope = Add(Add(k1, Scale(Add(k2, k3), 2.0)), k4);
  return Add(x, Scale(slope, dt / 6.0));
}

Tensor Step(const ControlProblem& problem, const Tensor& x, const Tensor& u) {
  if (problem.system == SystemId::kLinear) {
    CheckBatch(problem, x, u);
    return LinearStep(problem, x, u);
  }
  return Rk4Step(problem, x, u, problem.dt);
}

Trajectory Rollout(const ControlProblem& problem, const Tensor& x0,
                   const Tensor& controls, const Tensor& x_target) {
  const int batch = x0.dim(0);
  const int horizon = problem.horizon;
  const int du = problem.control_dim;
  if (controls.rank() != 3 || controls.dim(0) != batch ||
      controls.dim(1) != horizon || controls.dim(2) != du) {
    throw DimensionError("rollout controls " + ShapeToString(controls.shape()) +
                         " do not match [B, T, d_u] = " +
                         ShapeToString({batch, horizon, du}));
  }
  std::vector<Tensor> states;
  states.reserve(horizon + 1);
  states.push_back(x0);
  for (int t = 0; t < horizon; ++t) {
    const Tensor u_t = Reshape(Slice(controls, 1, t, 1), {batch, du});
    try {
      states.push_back(Step(problem, states.back(), u_t));
    } catch (const InfeasibleMassError& e) {
      throw InfeasibleMassError(
          std::string(e.what()) + " during step " + std::to_string(t), t);
    }
    if (problem.system == SystemId::kRocket) {
      const auto& s = states.back().values();
      for (int b = 0; b < batch; ++b) {
        const double m = s[b * kRocketStateDim + 6];
        if (!(m >= problem.rocket.m_dry)) {
          throw InfeasibleMassError(
              "rocket mass " + std::to_string(m) +
                  " kg fell below dry mass after step " + std::to_string(t),
              t);
        }
      }
    }
  }
  Trajectory traj;
  traj.states = Stack(states, 1);
  traj.controls = controls;
  traj.cost = TrajectoryCost(problem, traj.states, controls, x_target);
  return traj;
}

Trajectory Rollout(const ControlProblem& problem, const Tensor& x0,
                   const Tensor& controls) {
  return Rollout(problem, x0, controls, TargetRows(problem, x0.dim(0)));
}

Tensor TrajectoryCost(const ControlProblem& problem, const Tensor& states,
                      const Tensor& controls, const Tensor& x_target) {
  const int batch = states.dim(0);
  const int horizon = problem.horizon;
  const int dx = problem.state_dim;
  const int du = problem.control_dim;
  const Tensor final_state = Reshape(Slice(states, 1, horizon, 1), {batch, dx});
  if (problem.cost.kind == CostKind::kQuadratic) {
    const Tensor running_x =
        Reshape(Slice(states, 1, 0, horizon), {batch * horizon, dx});
    const Tensor running_u = Reshape(controls, {batch * horizon, du});
    const Tensor stage = Add(QuadraticForm(running_x, problem.cost.q),
                             QuadraticForm(running_u, problem.cost.r));
    const Tensor running = SumLastAxis(Reshape(stage, {batch, horizon}));
    const Tensor miss = Sub(final_state, x_target);
    return Add(running, QuadraticForm(miss, problem.cost.qf));
  }
  const RocketParams& p = problem.rocket;
  const Tensor miss = Sub(final_state, x_target);
  const Tensor pos_miss = Slice(miss, 1, 0, 3);
  const Tensor vel_miss = NormLastAxis(Slice(miss, 1, 3, 3));
  const Tensor pos_term = Scale(SumLastAxis(Square(pos_miss)), problem.cost.w_pos);
  const Tensor vel_term = Scale(
      Reshape(Square(Relu(AddScalar(vel_miss, -p.v_tol))), {batch}),
      problem.cost.w_vel);
  return Add(FuelUsed(problem, states), Add(pos_term, vel_term));
}

Tensor ClipControls(const ControlProblem& problem, const Tensor& controls) {
  return Clamp(controls, VectorTensor(problem.u_min),
               VectorTensor(problem.u_max));
}

Tensor TerminalError(const ControlProblem& problem, const Tensor& states,
                     const Tensor& x_target) {
  const int batch = states.dim(0);
  const int dx = problem.state_dim;
  const Tensor final_state =
      Reshape(Slice(states, 1, problem.horizon, 1), {batch, dx});
  const Tensor error = Sub(final_state, x_target);
  if (problem.error_dim() == dx) return error;
  return Slice(error, 1, 0, problem.error_dim());
}

Tensor FuelUsed(const ControlProblem& problem, const Tensor& states) {
  if (problem.system != SystemId::kRocket) {
    throw ContractError("fuel is only defined for the rocket problem");
  }
  const int batch = states.dim(0);
  const Tensor m0 = Reshape(Slice(Slice(states, 1, 0, 1), 2, 6, 1), {batch});
  const Tensor mf = Reshape(
      Slice(Slice(states, 1, problem.horizon, 1), 2, 6, 1), {batch});
  return Sub(m0, mf);
}

Tensor ThrustMagnitude(const Tensor& controls) {
  return NormLastAxis(controls);
}

Tensor GlideslopeExcess(const ControlProblem& problem, const Tensor& states) {
  const Tensor horizontal = NormLastAxis(Slice(states, 2, 0, 2));
  const Tensor altitude = Slice(states, 2, 2, 1);
  return Sub(horizontal, Scale(altitude, problem.rocket.GlideslopeTan()));
}

std::vector<double> GlideslopeViolationDepth(const ControlProblem& problem,
                                             const Tensor& states) {
  const int batch = states.dim(0);
  const int steps = states.dim(1);
  const double gamma = problem.rocket.glideslope_deg * std::numbers::pi / 180.0;
  const double tan_g = std::tan(gamma);
  const double sin_g = std::sin(gamma), cos_g = std::cos(gamma);
  const auto& s = states.values();
  std::vector<double> depth(batch, 0.0);
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < steps; ++t) {
      const double* x = s.data() + (static_cast<int64_t>(b) * steps + t) *
                                       kRocketStateDim;
      const double rho = std::hypot(x[0], x[1]);
      const double z = x[2];
      if (rho <= z * tan_g) continue;
      // Nearest point on the cone boundary, or the apex when the normal
      // projection falls below it.
      const double along = rho * sin_g + z * cos_g;
      const double d =
          along >= 0.0 ? rho * cos_g - z * sin_g : std::hypot(rho, z);
      depth[b] = std::max(depth[b], d);
    }
  }
  return depth;
}

Tensor ProjectThrust(const ControlProblem& problem, const Tensor& controls) {
  const RocketParams& p = problem.rocket;
  std::vector<double> out = controls.values();
  for (size_t i = 0; i + 2 < out.size(); i += 3) {
    const double n = std::sqrt(out[i] * out[i] + out[i + 1] * out[i + 1] +
                               out[i + 2] * out[i + 2]);
    if (n <= 0.0) {
      out[i] = 0.0;
      out[i + 1] = 0.0;
      out[i + 2] = p.thrust_min;
      continue;
    }
    const double scale = std::clamp(n, p.thrust_min, p.thrust_max) / n;
    out[i] *= scale;
    out[i + 1] *= scale;
    out[i + 2] *= scale;
  }
  return Tensor(controls.shape(), std::move(out));
}

}  // namespace trc
