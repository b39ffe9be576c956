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

#ifndef TRC_MODEL_H_
#define TRC_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "trc/dynamics.h"
#include "trc/normalizer.h"
#include "trc/tensor.h"

namespace trc {

struct TrcConfig {
  int state_dim = 2;
  int control_dim = 1;
  int horizon = 100;
  int error_dim = 2;

  int latent_dim = 256;
  int hidden_dim = 512;
  int num_blocks = 3;
  int num_heads = 8;
  int outer_iterations = 3;
  int inner_cycles = 4;

  // Problem shapes filled in; architecture left at defaults (n = 6 for the
  // rocket).
  static TrcConfig ForProblem(const ControlProblem& problem);

  // Throws ContractError on an invalid combination.
  void Validate() const;
  // Throws DimensionError if the problem shapes disagree.
  void CheckCompatible(const ControlProblem& problem) const;
};

// y = x W + b with W stored [in, out].
struct Linear {
  Tensor weight;
  Tensor bias;  // Undefined when the layer has no bias.

  Tensor operator()(const Tensor& x) const;
};

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;

  Tensor operator()(const Tensor& x) const;
};

// Linear -> LayerNorm -> GELU -> Linear.
struct EncoderMlp {
  Linear in;
  LayerNormParams norm;
  Linear out;

  Tensor operator()(const Tensor& x) const;
};

// Linear -> GELU -> Linear.
struct DecoderMlp {
  Linear hidden;
  Linear out;

  Tensor operator()(const Tensor& x) const;
};

// Post-norm transformer block over a short token sequence.
struct ReasoningBlock {
  Linear query;
  Linear key;
  Linear value;
  Linear attn_out;
  LayerNormParams attn_norm;
  Linear ff_in;
  Linear ff_out;
  LayerNormParams ff_norm;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct ModelParameters {
  EncoderMlp state_encoder;
  EncoderMlp error_encoder;
  Linear control_embedding;
  Tensor h_init;
  Tensor l_init;
  Linear h_proj;  // W_H, no bias.
  Linear l_proj;  // W_L, no bias.
  std::vector<ReasoningBlock> reasoning;
  DecoderMlp initial_decoder;
  DecoderMlp residual_decoder;

  // Every learnable tensor in a fixed order. The returned handles alias
  // the parameters.
  std::vector<NamedTensor> Named() const;
};

// Everything produced by one forward pass over a batch of B problems.
struct ForwardRecord {
  std::vector<Tensor> controls;   // K+1 of [B, T, d_u], physical units.
  std::vector<Tensor> costs;      // K+1 of [B].
  std::vector<Tensor> latents;    // K+1 of [B, d_z], z_H snapshots.
  std::vector<Tensor> errors;     // K of [B, d_e].
  std::vector<Tensor> residuals;  // K of [B, T, d_u], physical units.
  std::vector<Tensor> residual_norms;  // K of [B].
  Tensor final_states;            // [B, T+1, d_x] for controls.back().

  int iterations() const { return static_cast<int>(controls.size()) - 1; }
};

class TrcModel {
 public:
  TrcModel(ControlProblem problem, TrcConfig config, Normalizer normalizer,
           uint64_t seed);

  // Deep copy with fresh parameter storage.
  TrcModel Clone() const;

  const ControlProblem& problem() const { return problem_; }
  const TrcConfig& config() const { return config_; }
  const Normalizer& normalizer() const { return normalizer_; }
  const ModelParameters& params() const { return params_; }
  ModelParameters& mutable_params() { return params_; }
  std::vector<Tensor> ParameterTensors() const;

  // Exact number of learnable scalars.
  int64_t ParamCount() const;

  // x0, x_target: [B, d_x] in physical units. Returns [B, d_z].
  Tensor EncodeState(const Tensor& x0, const Tensor& x_target) const;
  // e: [B, d_e] physical units.
  Tensor EncodeError(const Tensor& e) const;
  // u: [B, T, d_u] physical units.
  Tensor EmbedControls(const Tensor& u) const;
  // L(self, context) over [B, d_z] pairs.
  Tensor ReasoningStep(const Tensor& self, const Tensor& context) const;

  // Runs the configured number of outer iterations and inner cycles.
  ForwardRecord Forward(const Tensor& x0, const Tensor& x_target) const;
  // Explicit K (>= 0) and n (>= 1).
  ForwardRecord Forward(const Tensor& x0, const Tensor& x_target,
                        int outer_iterations, int inner_cycles) const;

 private:
  ControlProblem problem_;
  TrcConfig config_;
  Normalizer normalizer_;
  ModelParameters params_;
};

}  // namespace trc

#endif  // TRC_MODEL_H_
