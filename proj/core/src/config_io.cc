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

#include "trc/config_io.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "trc/errors.h"

namespace trc {
namespace {

void CheckKeys(const Json& j, std::initializer_list<const char*> known,
               const std::string& what) {
  if (!j.is_object()) throw ContractError(what + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool found = false;
    for (const char* k : known) found = found || it.key() == k;
    if (!found) {
      throw ContractError("unknown key '" + it.key() + "' in " + what);
    }
  }
}

template <typename T>
void Get(const Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

// Runs `fn`, turning JSON type errors into ContractError.
template <typename Fn>
auto Guarded(const std::string& what, Fn fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw ContractError("malformed " + what + ": " + e.what());
  }
}

}  // namespace

Json ToJson(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json ToJson(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd VectorFromJson(const Json& j) {
  return Guarded("vector", [&] {
    const std::vector<double> v = j.get<std::vector<double>>();
    return Eigen::VectorXd(
        Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
  });
}

Eigen::MatrixXd MatrixFromJson(const Json& j) {
  return Guarded("matrix", [&] {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const int r = static_cast<int>(rows.size());
    const int c = r ? static_cast<int>(rows[0].size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i) {
      if (static_cast<int>(rows[i].size()) != c) {
        throw ContractError("ragged matrix in JSON");
      }
      for (int k = 0; k < c; ++k) m(i, k) = rows[i][k];
    }
    return m;
  });
}

Json ToJson(const ControlProblem& p) {
  Json j;
  j["system"] = SystemName(p.system);
  j["state_dim"] = p.state_dim;
  j["control_dim"] = p.control_dim;
  j["horizon"] = p.horizon;
  j["dt"] = p.dt;
  j["u_min"] = ToJson(p.u_min);
  j["u_max"] = ToJson(p.u_max);
  j["x_target"] = ToJson(p.x_target);
  Json cost;
  cost["kind"] = p.cost.kind == CostKind::kFuel ? "fuel" : "quadratic";
  cost["q"] = ToJson(p.cost.q);
  cost["r"] = ToJson(p.cost.r);
  cost["qf"] = ToJson(p.cost.qf);
  cost["w_pos"] = p.cost.w_pos;
  cost["w_vel"] = p.cost.w_vel;
  j["cost"] = cost;
  switch (p.system) {
    case SystemId::kVanDerPol:
      j["vdp"] = {{"mu", p.vdp.mu}};
      break;
    case SystemId::kRocket:
      j["rocket"] = {{"g_mars", p.rocket.g_mars},
                     {"isp", p.rocket.isp},
                     {"g0", p.rocket.g0},
                     {"thrust_min", p.rocket.thrust_min},
                     {"thrust_max", p.rocket.thrust_max},
                     {"glideslope_deg", p.rocket.glideslope_deg},
                     {"v_tol", p.rocket.v_tol},
                     {"m_dry", p.rocket.m_dry},
                     {"m_wet", p.rocket.m_wet}};
      break;
    case SystemId::kLinear:
      j["linear"] = {{"a", ToJson(p.linear.a)}, {"b", ToJson(p.linear.b)}};
      break;
  }
  return j;
}

ControlProblem ProblemFromJson(const Json& j) {
  return Guarded("problem config", [&] {
    CheckKeys(j,
              {"system", "state_dim", "control_dim", "horizon", "dt", "u_min",
               "u_max", "x_target", "cost", "vdp", "rocket", "linear"},
              "problem config");
    if (!j.contains("system")) {
      throw ContractError("problem config needs a 'system' key");
    }
    const SystemId id = SystemFromName(j.at("system").get<std::string>());
    ControlProblem p;
    if (id == SystemId::kVanDerPol) {
      VdpParams vdp;
      if (j.contains("vdp")) {
        CheckKeys(j["vdp"], {"mu"}, "vdp params");
        Get(j["vdp"], "mu", vdp.mu);
      }
      p = VanDerPolProblem(vdp);
    } else if (id == SystemId::kRocket) {
      RocketParams r;
      if (j.contains("rocket")) {
        const Json& jr = j["rocket"];
        CheckKeys(jr,
                  {"g_mars", "isp", "g0", "thrust_min", "thrust_max",
                   "glideslope_deg", "v_tol", "m_dry", "m_wet"},
                  "rocket params");
        Get(jr, "g_mars", r.g_mars);
        Get(jr, "isp", r.isp);
        Get(jr, "g0", r.g0);
        Get(jr, "thrust_min", r.thrust_min);
        Get(jr, "thrust_max", r.thrust_max);
        Get(jr, "glideslope_deg", r.glideslope_deg);
        Get(jr, "v_tol", r.v_tol);
        Get(jr, "m_dry", r.m_dry);
        Get(jr, "m_wet", r.m_wet);
      }
      p = RocketProblem(r);
    } else {
      if (!j.contains("linear") || !j.contains("cost")) {
        throw ContractError("linear problem needs 'linear' and 'cost' keys");
      }
      CheckKeys(j["linear"], {"a", "b"}, "linear params");
      const Json& c = j["cost"];
      const double bound =
          j.contains("u_max") ? VectorFromJson(j["u_max"])(0) : 1e6;
      p = LinearProblem(MatrixFromJson(j["linear"]["a"]),
                        MatrixFromJson(j["linear"]["b"]),
                        MatrixFromJson(c.at("q")), MatrixFromJson(c.at("r")),
                        MatrixFromJson(c.at("qf")), j.value("horizon", 20),
                        bound);
    }
    Get(j, "horizon", p.horizon);
    Get(j, "dt", p.dt);
    if (j.contains("state_dim") && j["state_dim"].get<int>() != p.state_dim) {
      throw DimensionError("state_dim does not match the system");
    }
    if (j.contains("control_dim") &&
        j["control_dim"].get<int>() != p.control_dim) {
      throw DimensionError("control_dim does not match the system");
    }
    if (j.contains("u_min")) p.u_min = VectorFromJson(j["u_min"]);
    if (j.contains("u_max")) p.u_max = VectorFromJson(j["u_max"]);
    if (j.contains("x_target")) p.x_target = VectorFromJson(j["x_target"]);
    if (j.contains("cost")) {
      const Json& c = j["cost"];
      CheckKeys(c, {"kind", "q", "r", "qf", "w_pos", "w_vel"}, "cost config");
      if (c.contains("kind")) {
        const std::string kind = c["kind"].get<std::string>();
        if (kind == "fuel") {
          p.cost.kind = CostKind::kFuel;
        } else if (kind == "quadratic") {
          p.cost.kind = CostKind::kQuadratic;
        } else {
          throw ContractError("unknown cost kind '" + kind + "'");
        }
      }
      if (c.contains("q")) p.cost.q = MatrixFromJson(c["q"]);
      if (c.contains("r")) p.cost.r = MatrixFromJson(c["r"]);
      if (c.contains("qf")) p.cost.qf = MatrixFromJson(c["qf"]);
      Get(c, "w_pos", p.cost.w_pos);
      Get(c, "w_vel", p.cost.w_vel);
    }
    p.Validate();
    return p;
  });
}

Json ToJson(const TrcConfig& c) {
  return {{"state_dim", c.state_dim},
          {"control_dim", c.control_dim},
          {"horizon", c.horizon},
          {"error_dim", c.error_dim},
          {"latent_dim", c.latent_dim},
          {"hidden_dim", c.hidden_dim},
          {"num_blocks", c.num_blocks},
          {"num_heads", c.num_heads},
          {"outer_iterations", c.outer_iterations},
          {"inner_cycles", c.inner_cycles}};
}

TrcConfig TrcConfigFromJson(const Json& j, TrcConfig c) {
  return Guarded("model config", [&] {
    CheckKeys(j,
              {"state_dim", "control_dim", "horizon", "error_dim",
               "latent_dim", "hidden_dim", "num_blocks", "num_heads",
               "outer_iterations", "inner_cycles"},
              "model config");
    Get(j, "state_dim", c.state_dim);
    Get(j, "control_dim", c.control_dim);
    Get(j, "horizon", c.horizon);
    Get(j, "error_dim", c.error_dim);
    Get(j, "latent_dim", c.latent_dim);
    Get(j, "hidden_dim", c.hidden_dim);
    Get(j, "num_blocks", c.num_blocks);
    Get(j, "num_heads", c.num_heads);
    Get(j, "outer_iterations", c.outer_iterations);
    Get(j, "inner_cycles", c.inner_cycles);
    c.Validate();
    return c;
  });
}

Json ToJson(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"lambda", c.lambda},
          {"grad_clip_norm", c.grad_clip_norm},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"validation_fraction", c.validation_fraction},
          {"seed", c.seed},
          {"divergence_patience", c.divergence_patience}};
}

TrainConfig TrainConfigFromJson(const Json& j, TrainConfig c) {
  return Guarded("train config", [&] {
    CheckKeys(j,
              {"learning_rate", "batch_size", "epochs", "lambda",
               "grad_clip_norm", "weight_decay", "beta1", "beta2", "adam_eps",
               "validation_fraction", "seed", "divergence_patience"},
              "train config");
    Get(j, "learning_rate", c.learning_rate);
    Get(j, "batch_size", c.batch_size);
    Get(j, "epochs", c.epochs);
    Get(j, "lambda", c.lambda);
    Get(j, "grad_clip_norm", c.grad_clip_norm);
    Get(j, "weight_decay", c.weight_decay);
    Get(j, "beta1", c.beta1);
    Get(j, "beta2", c.beta2);
    Get(j, "adam_eps", c.adam_eps);
    Get(j, "validation_fraction", c.validation_fraction);
    Get(j, "seed", c.seed);
    Get(j, "divergence_patience", c.divergence_patience);
    c.Validate();
    return c;
  });
}

Json ToJson(const OracleConfig& c) {
  return {{"max_iters", c.max_iters},
          {"step_size", c.step_size},
          {"convergence_tol", c.convergence_tol},
          {"convergence_window", c.convergence_window},
          {"restarts", c.restarts},
          {"seed", c.seed},
          {"restart_spread", c.restart_spread},
          {"thrust_penalty", c.thrust_penalty},
          {"glideslope_penalty", c.glideslope_penalty},
          {"terminal_velocity_penalty", c.terminal_velocity_penalty},
          {"penalty_rounds", c.penalty_rounds},
          {"penalty_growth", c.penalty_growth}};
}

OracleConfig OracleConfigFromJson(const Json& j, OracleConfig c) {
  return Guarded("oracle config", [&] {
    CheckKeys(j,
              {"max_iters", "step_size", "convergence_tol",
               "convergence_window", "restarts", "seed", "restart_spread",
               "thrust_penalty", "glideslope_penalty",
               "terminal_velocity_penalty", "penalty_rounds",
               "penalty_growth"},
              "oracle config");
    Get(j, "max_iters", c.max_iters);
    Get(j, "step_size", c.step_size);
    Get(j, "convergence_tol", c.convergence_tol);
    Get(j, "convergence_window", c.convergence_window);
    Get(j, "restarts", c.restarts);
    Get(j, "seed", c.seed);
    Get(j, "restart_spread", c.restart_spread);
    Get(j, "thrust_penalty", c.thrust_penalty);
    Get(j, "glideslope_penalty", c.glideslope_penalty);
    Get(j, "terminal_velocity_penalty", c.terminal_velocity_penalty);
    Get(j, "penalty_rounds", c.penalty_rounds);
    Get(j, "penalty_growth", c.penalty_growth);
    c.Validate();
    return c;
  });
}

Json ToJson(const Normalizer& n) {
  return {{"state_mean", ToJson(n.state_mean)},
          {"state_std", ToJson(n.state_std)},
          {"control_mean", ToJson(n.control_mean)},
          {"control_std", ToJson(n.control_std)}};
}

Normalizer NormalizerFromJson(const Json& j) {
  return Guarded("normalizer", [&] {
    CheckKeys(j, {"state_mean", "state_std", "control_mean", "control_std"},
              "normalizer");
    Normalizer n;
    n.state_mean = VectorFromJson(j.at("state_mean"));
    n.state_std = VectorFromJson(j.at("state_std"));
    n.control_mean = VectorFromJson(j.at("control_mean"));
    n.control_std = VectorFromJson(j.at("control_std"));
    if (n.state_mean.size() != n.state_std.size() ||
        n.control_mean.size() != n.control_std.size()) {
      throw DimensionError("normalizer mean/std lengths differ");
    }
    return n;
  });
}

Json ToJson(const MetricsRecord& r) {
  return {{"epoch", r.epoch},
          {"control_loss", r.control_loss},
          {"improvement_metric", r.improvement_metric},
          {"total_loss", r.total_loss},
          {"validation_loss", r.validation_loss},
          {"learning_rate", r.learning_rate},
          {"skipped_steps", r.skipped_steps},
          {"normalized_cost_per_iter", r.normalized_cost_per_iter}};
}

MetricsRecord MetricsRecordFromJson(const Json& j) {
  return Guarded("metrics record", [&] {
    MetricsRecord r;
    // Non-finite values are written as null.
    auto number = [&](const char* key) {
      const Json& v = j.at(key);
      return v.is_null() ? std::nan("") : v.get<double>();
    };
    r.epoch = j.at("epoch").get<int>();
    r.control_loss = number("control_loss");
    r.improvement_metric = number("improvement_metric");
    r.total_loss = number("total_loss");
    r.validation_loss = number("validation_loss");
    r.learning_rate = number("learning_rate");
    r.skipped_steps = j.at("skipped_steps").get<int>();
    for (const Json& v : j.at("normalized_cost_per_iter")) {
      r.normalized_cost_per_iter.push_back(v.is_null() ? std::nan("")
                                                       : v.get<double>());
    }
    return r;
  });
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return ss.str();
}

Json ReadJsonFile(const std::string& path) {
  const std::string text = ReadTextFile(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw IoError("invalid JSON in '" + path + "': " + e.what());
  }
}

void WriteFileAtomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move temporary file onto '" + path + "'");
  }
}

}  // namespace trc
