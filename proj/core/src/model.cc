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

#include "trc/model.h"

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "trc/errors.h"
#include "trc/ops.h"

namespace trc {
namespace {

class Initializer {
 public:
  explicit Initializer(uint64_t seed) : rng_(seed) {}

  Tensor Uniform(const Shape& shape, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> values(NumElements(shape));
    for (double& v : values) v = dist(rng_);
    Tensor t(shape, std::move(values));
    t.set_requires_grad(true);
    return t;
  }

  Tensor Constant(const Shape& shape, double value) {
    Tensor t = Tensor::Full(shape, value);
    t.set_requires_grad(true);
    return t;
  }

  Linear MakeLinear(int in, int out, bool bias = true) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Linear layer;
    layer.weight = Uniform({in, out}, bound);
    if (bias) layer.bias = Uniform({out}, bound);
    return layer;
  }

  LayerNormParams MakeNorm(int dim) {
    return {Constant({dim}, 1.0), Constant({dim}, 0.0)};
  }

 private:
  std::mt19937_64 rng_;
};

ModelParameters InitParameters(const TrcConfig& c, uint64_t seed) {
  Initializer init(seed);
  const int dz = c.latent_dim;
  const int dh = c.hidden_dim;
  const int flat_u = c.horizon * c.control_dim;
  ModelParameters p;
  p.state_encoder = {init.MakeLinear(2 * c.state_dim + 1, dz),
                     init.MakeNorm(dz), init.MakeLinear(dz, dz)};
  p.error_encoder = {init.MakeLinear(c.error_dim, dz), init.MakeNorm(dz),
                     init.MakeLinear(dz, dz)};
  p.control_embedding = init.MakeLinear(flat_u, dz);
  const double latent_bound = 1.0 / std::sqrt(static_cast<double>(dz));
  p.h_init = init.Uniform({dz}, latent_bound);
  p.l_init = init.Uniform({dz}, latent_bound);
  p.h_proj = init.MakeLinear(dz, dz, /*bias=*/false);
  p.l_proj = init.MakeLinear(dz, dz, /*bias=*/false);
  for (int i = 0; i < c.num_blocks; ++i) {
    ReasoningBlock b;
    b.query = init.MakeLinear(dz, dz);
    b.key = init.MakeLinear(dz, dz);
    b.value = init.MakeLinear(dz, dz);
    b.attn_out = init.MakeLinear(dz, dz);
    b.attn_norm = init.MakeNorm(dz);
    b.ff_in = init.MakeLinear(dz, dh);
    b.ff_out = init.MakeLinear(dh, dz);
    b.ff_norm = init.MakeNorm(dz);
    p.reasoning.push_back(std::move(b));
  }
  p.initial_decoder = {init.MakeLinear(dz, dh), init.MakeLinear(dh, flat_u)};
  p.residual_decoder = {init.MakeLinear(dz + flat_u, dh),
                        init.MakeLinear(dh, flat_u)};
  return p;
}

void AppendLinear(std::vector<NamedTensor>& out, const std::string& prefix,
                  const Linear& layer) {
  out.push_back({prefix + ".weight", layer.weight});
  if (layer.bias.defined()) out.push_back({prefix + ".bias", layer.bias});
}

void AppendNorm(std::vector<NamedTensor>& out, const std::string& prefix,
                const LayerNormParams& norm) {
  out.push_back({prefix + ".gamma", norm.gamma});
  out.push_back({prefix + ".beta", norm.beta});
}

void AppendEncoder(std::vector<NamedTensor>& out, const std::string& prefix,
                   const EncoderMlp& enc) {
  AppendLinear(out, prefix + ".in", enc.in);
  AppendNorm(out, prefix + ".norm", enc.norm);
  AppendLinear(out, prefix + ".out", enc.out);
}

void AppendDecoder(std::vector<NamedTensor>& out, const std::string& prefix,
                   const DecoderMlp& dec) {
  AppendLinear(out, prefix + ".hidden", dec.hidden);
  AppendLinear(out, prefix + ".out", dec.out);
}

// [N, 2, d] tokens -> [N * heads, 2, d / heads].
Tensor SplitHeads(const Tensor& x, int batch, int tokens, int heads) {
  const int dk = x.dim(-1) / heads;
  return Reshape(
      Permute(Reshape(x, {batch, tokens, heads, dk}), {0, 2, 1, 3}),
      {batch * heads, tokens, dk});
}

Tensor MergeHeads(const Tensor& x, int batch, int tokens, int heads) {
  const int dk = x.dim(-1);
  return Reshape(
      Permute(Reshape(x, {batch, heads, tokens, dk}), {0, 2, 1, 3}),
      {batch * tokens, heads * dk});
}

Tensor ApplyBlock(const ReasoningBlock& b, const Tensor& tokens, int batch,
                  int num_tokens, int heads) {
  const int dz = tokens.dim(-1);
  const int dk = dz / heads;
  const Tensor q = SplitHeads(b.query(tokens), batch, num_tokens, heads);
  const Tensor k = SplitHeads(b.key(tokens), batch, num_tokens, heads);
  const Tensor v = SplitHeads(b.value(tokens), batch, num_tokens, heads);
  const Tensor scores = Scale(BatchMatMul(q, Permute(k, {0, 2, 1})),
                              1.0 / std::sqrt(static_cast<double>(dk)));
  const Tensor attended = BatchMatMul(Softmax(scores), v);
  const Tensor attn = b.attn_out(MergeHeads(attended, batch, num_tokens, heads));
  const Tensor x = b.attn_norm(Add(tokens, attn));
  const Tensor ff = b.ff_out(Gelu(b.ff_in(x)));
  return b.ff_norm(Add(x, ff));
}

}  // namespace

TrcConfig TrcConfig::ForProblem(const ControlProblem& problem) {
  TrcConfig c;
  c.state_dim = problem.state_dim;
  c.control_dim = problem.control_dim;
  c.horizon = problem.horizon;
  c.error_dim = problem.error_dim();
  c.inner_cycles = problem.system == SystemId::kRocket ? 6 : 4;
  return c;
}

void TrcConfig::Validate() const {
  if (state_dim < 1 || control_dim < 1 || horizon < 1 || error_dim < 1) {
    throw ContractError("model problem dimensions must be positive");
  }
  if (latent_dim < 1 || hidden_dim < 1 || num_blocks < 1 || num_heads < 1) {
    throw ContractError("model widths and depth must be positive");
  }
  if (latent_dim % num_heads != 0) {
    throw ContractError("latent_dim " + std::to_string(latent_dim) +
                        " is not divisible by num_heads " +
                        std::to_string(num_heads));
  }
  if (outer_iterations < 1) throw ContractError("outer_iterations must be >= 1");
  if (inner_cycles < 1) throw ContractError("inner_cycles must be >= 1");
}

void TrcConfig::CheckCompatible(const ControlProblem& problem) const {
  if (problem.state_dim != state_dim || problem.control_dim != control_dim ||
      problem.horizon != horizon || problem.error_dim() != error_dim) {
    throw DimensionError("model shapes (d_x=" + std::to_string(state_dim) +
                         ", d_u=" + std::to_string(control_dim) +
                         ", T=" + std::to_string(horizon) +
                         ") do not match the problem (d_x=" +
                         std::to_string(problem.state_dim) +
                         ", d_u=" + std::to_string(problem.control_dim) +
                         ", T=" + std::to_string(problem.horizon) + ")");
  }
}

Tensor Linear::operator()(const Tensor& x) const {
  const Tensor y = MatMul(x, weight);
  return bias.defined() ? Add(y, bias) : y;
}

Tensor LayerNormParams::operator()(const Tensor& x) const {
  return LayerNorm(x, gamma, beta);
}

Tensor EncoderMlp::operator()(const Tensor& x) const {
  return out(Gelu(norm(in(x))));
}

Tensor DecoderMlp::operator()(const Tensor& x) const {
  return out(Gelu(hidden(x)));
}

std::vector<NamedTensor> ModelParameters::Named() const {
  std::vector<NamedTensor> out;
  AppendEncoder(out, "state_encoder", state_encoder);
  AppendEncoder(out, "error_encoder", error_encoder);
  AppendLinear(out, "control_embedding", control_embedding);
  out.push_back({"h_init", h_init});
  out.push_back({"l_init", l_init});
  AppendLinear(out, "h_proj", h_proj);
  AppendLinear(out, "l_proj", l_proj);
  for (size_t i = 0; i < reasoning.size(); ++i) {
    const std::string p = "reasoning." + std::to_string(i);
    const ReasoningBlock& b = reasoning[i];
    AppendLinear(out, p + ".query", b.query);
    AppendLinear(out, p + ".key", b.key);
    AppendLinear(out, p + ".value", b.value);
    AppendLinear(out, p + ".attn_out", b.attn_out);
    AppendNorm(out, p + ".attn_norm", b.attn_norm);
    AppendLinear(out, p + ".ff_in", b.ff_in);
    AppendLinear(out, p + ".ff_out", b.ff_out);
    AppendNorm(out, p + ".ff_norm", b.ff_norm);
  }
  AppendDecoder(out, "initial_decoder", initial_decoder);
  AppendDecoder(out, "residual_decoder", residual_decoder);
  return out;
}

TrcModel::TrcModel(ControlProblem problem, TrcConfig config,
                   Normalizer normalizer, uint64_t seed)
    : problem_(std::move(problem)),
      config_(config),
      normalizer_(std::move(normalizer)) {
  problem_.Validate();
  config_.Validate();
  config_.CheckCompatible(problem_);
  if (normalizer_.state_mean.size() != config_.state_dim ||
      normalizer_.control_mean.size() != config_.control_dim) {
    throw DimensionError("normalizer dimensions do not match the model");
  }
  params_ = InitParameters(config_, seed);
}

TrcModel TrcModel::Clone() const {
  TrcModel copy = *this;
  copy.params_ = InitParameters(config_, 0);
  const std::vector<NamedTensor> src = params_.Named();
  std::vector<NamedTensor> dst = copy.params_.Named();
  for (size_t i = 0; i < src.size(); ++i) {
    std::span<const double> from = src[i].tensor.data();
    std::span<double> to = dst[i].tensor.mutable_data();
    std::copy(from.begin(), from.end(), to.begin());
  }
  return copy;
}

std::vector<Tensor> TrcModel::ParameterTensors() const {
  std::vector<Tensor> out;
  for (const NamedTensor& nt : params_.Named()) out.push_back(nt.tensor);
  return out;
}

int64_t TrcModel::ParamCount() const {
  int64_t count = 0;
  for (const NamedTensor& nt : params_.Named()) count += nt.tensor.numel();
  return count;
}

Tensor TrcModel::EncodeState(const Tensor& x0, const Tensor& x_target) const {
  if (x0.rank() != 2 || x0.dim(1) != config_.state_dim ||
      x_target.shape() != x0.shape()) {
    throw DimensionError("EncodeState expects x0 and x_target of shape [B, " +
                         std::to_string(config_.state_dim) + "], got " +
                         ShapeToString(x0.shape()) + " and " +
                         ShapeToString(x_target.shape()));
  }
  const int batch = x0.dim(0);
  const Tensor t_remaining = Tensor::Full({batch, 1}, 1.0);
  const Tensor input = Concat({normalizer_.NormalizeStates(x0),
                               normalizer_.NormalizeStates(x_target),
                               t_remaining},
                              1);
  return params_.state_encoder(input);
}

Tensor TrcModel::EncodeError(const Tensor& e) const {
  if (e.rank() != 2 || e.dim(1) != config_.error_dim) {
    throw DimensionError("EncodeError expects [B, " +
                         std::to_string(config_.error_dim) + "], got " +
                         ShapeToString(e.shape()));
  }
  return params_.error_encoder(normalizer_.NormalizeError(e));
}

Tensor TrcModel::EmbedControls(const Tensor& u) const {
  if (u.rank() != 3 || u.dim(1) != config_.horizon ||
      u.dim(2) != config_.control_dim) {
    throw DimensionError("EmbedControls expects [B, " +
                         std::to_string(config_.horizon) + ", " +
                         std::to_string(config_.control_dim) + "], got " +
                         ShapeToString(u.shape()));
  }
  const int batch = u.dim(0);
  return params_.control_embedding(Reshape(
      normalizer_.NormalizeControls(u),
      {batch, config_.horizon * config_.control_dim}));
}

Tensor TrcModel::ReasoningStep(const Tensor& self,
                               const Tensor& context) const {
  const int batch = self.dim(0);
  const int dz = config_.latent_dim;
  Tensor tokens = Reshape(Stack({self, context}, 1), {batch * 2, dz});
  for (const ReasoningBlock& block : params_.reasoning) {
    tokens = ApplyBlock(block, tokens, batch, 2, config_.num_heads);
  }
  return Reshape(Slice(Reshape(tokens, {batch, 2, dz}), 1, 0, 1), {batch, dz});
}

ForwardRecord TrcModel::Forward(const Tensor& x0,
                                const Tensor& x_target) const {
  return Forward(x0, x_target, config_.outer_iterations, config_.inner_cycles);
}

ForwardRecord TrcModel::Forward(const Tensor& x0, const Tensor& x_target,
                                int outer_iterations, int inner_cycles) const {
  if (outer_iterations < 0) throw ContractError("outer_iterations must be >= 0");
  if (inner_cycles < 1) throw ContractError("inner_cycles must be >= 1");
  const int batch = x0.dim(0);
  const int flat_u = config_.horizon * config_.control_dim;
  const Shape u_shape = {batch, config_.horizon, config_.control_dim};

  const Tensor z0 = EncodeState(x0, x_target);
  Tensor z_h = Add(params_.h_init, params_.h_proj(z0));
  Tensor z_l = Add(params_.l_init, params_.l_proj(z0));
  Tensor u = ClipControls(
      problem_, normalizer_.DenormalizeControls(
                    Reshape(params_.initial_decoder(z0), u_shape)));

  ForwardRecord record;
  record.controls.push_back(u);
  record.latents.push_back(z_h);

  auto rollout = [&](int iteration) {
    try {
      return Rollout(problem_, x0, u, x_target);
    } catch (const InfeasibleMassError& e) {
      throw InfeasibleMassError(
          std::string(e.what()) + " (outer iteration " +
              std::to_string(iteration) + ")",
          e.step());
    }
  };

  for (int k = 1; k <= outer_iterations; ++k) {
    const Trajectory traj = rollout(k - 1);
    record.costs.push_back(traj.cost);
    const Tensor error = TerminalError(problem_, traj.states, x_target);
    record.errors.push_back(error);

    const Tensor z_ctx = Add(Add(z0, EncodeError(error)), EmbedControls(u));
    for (int i = 0; i < inner_cycles; ++i) {
      z_l = ReasoningStep(z_l, Add(z_h, z_ctx));
    }
    z_h = ReasoningStep(z_h, z_l);

    const Tensor u_norm =
        Reshape(normalizer_.NormalizeControls(u), {batch, flat_u});
    const Tensor delta = normalizer_.ScaleResidual(Reshape(
        params_.residual_decoder(Concat({z_h, u_norm}, 1)), u_shape));
    u = ClipControls(problem_, Add(u, delta));

    record.residuals.push_back(delta);
    record.residual_norms.push_back(
        Reshape(NormLastAxis(Reshape(delta, {batch, flat_u})), {batch}));
    record.controls.push_back(u);
    record.latents.push_back(z_h);
  }
  const Trajectory last = rollout(outer_iterations);
  record.costs.push_back(last.cost);
  record.final_states = last.states;
  return record;
}

}  // namespace trc
