// Copyright 2026 The mmsel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MMSEL_CORE_FUSION_HPP
#define MMSEL_CORE_FUSION_HPP

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "persist.hpp"

namespace mmsel::fusion {

/// Dimensions of the toy visual pipeline. Layers are numbered from 1; the
/// decoder has as many blocks as the DVP so that layer l pairs with DVP
/// state l.
struct FusionConfig {
  std::size_t d_v = 16;
  std::size_t d = 32;
  std::size_t n_latents = 32;
  std::size_t sampler_depth = 4;
  std::size_t ff_mult = 4;
  std::size_t dvp_layers = 24;
  std::set<std::size_t> inject_layers = {8, 16, 24};
  std::size_t n_heads = 4;

  void validate() const;
};

// All weight matrices are stored output x input and applied to row vectors,
// so a row x maps to W x.

struct AttentionWeights {
  Matrix wq, wk, wv;
  Matrix wo;  // empty means no output projection
};

struct MlpWeights {
  Matrix w1;  // (ff_mult d) x d
  Vector b1;
  Matrix w2;  // d x (ff_mult d)
  Vector b2;
};

/// Pre-norm residual block: x += Attn(LN x); x += MLP(LN x).
struct TransformerBlock {
  AttentionWeights attn;
  MlpWeights mlp;
};

/// Latents attend over the projected patches, then over themselves, then
/// through an MLP, each with a residual connection.
struct SamplerBlock {
  AttentionWeights cross;
  AttentionWeights self;
  MlpWeights mlp;
};

/// tanh-gated cross-attention from decoder states to visual states.
struct GatedCrossAttention {
  Matrix wq, wk, wv;  // d x d
  double alpha = 0.0;
};

struct FusionStack {
  FusionConfig config;
  Matrix projector;  // d x d_v
  Matrix latents;    // n_latents x d
  std::vector<SamplerBlock> sampler;
  std::vector<TransformerBlock> dvp;
  std::vector<TransformerBlock> decoder;
  std::map<std::size_t, GatedCrossAttention> xattn;  // keyed by inject layer

  /// Every weight drawn N(0, scale^2 / fan_in); gates exactly zero.
  static FusionStack random(const FusionConfig& config, std::uint64_t seed, double scale = 1.0);
  /// Every weight zero, gates zero, latents as given (or zero).
  static FusionStack zeros(const FusionConfig& config);

  /// Throws InvalidInput on any shape mismatch or non-finite weight.
  void validate() const;
};

struct AttentionResult {
  Matrix output;
  std::vector<Matrix> maps;  // one queries x keys probability matrix per head
};

Matrix layer_norm(const Matrix& x);

/// Multi-head scaled dot-product attention of `queries` over `keys_values`.
AttentionResult attend(const Matrix& queries, const Matrix& keys_values,
                       const AttentionWeights& w, std::size_t n_heads, bool causal);

/// Row-wise projection into the model width.
Matrix project(const Matrix& patch_features, const Matrix& projector);

/// Sinusoidal positional encodings, rows x dim.
Matrix sinusoidal_positions(std::size_t rows, std::size_t dim);

/// Compresses T_v patches to n_latents x d for any T_v >= 1.
Matrix perceiver_sample(const Matrix& patch_features, const Matrix& pos_enc,
                        const FusionStack& stack);

/// All dvp_layers intermediate states, state l computed from state l - 1.
std::vector<Matrix> dvp_forward(const Matrix& latents, const FusionStack& stack);

/// softmax(Q h (K v)^T / sqrt(d_k)) V v per head, heads concatenated.
Matrix cross_attention(const Matrix& h, const Matrix& v_hat, const GatedCrossAttention& w,
                       std::size_t n_heads);

/// h + tanh(alpha) XAttn(h, v_hat); returns h unchanged when tanh(alpha) == 0.
Matrix gated_xattn(const Matrix& h, const Matrix& v_hat, const GatedCrossAttention& w,
                   std::size_t n_heads);

/// Causal decoder stack with gated injections at the configured layers.
/// `visuals[l - 1]` is the visual state paired with layer l; entries for
/// non-injected layers may be empty.
Matrix fused_stack_forward(const Matrix& text_states, const std::vector<Matrix>& visuals,
                           const FusionStack& stack);

/// The same decoder stack with no injections.
Matrix text_only_forward(const Matrix& text_states, const FusionStack& stack);

/// d/d alpha_layer of sum(readout .* fused_stack_forward(...)), computed in
/// forward mode.
double gate_directional_derivative(const Matrix& text_states, const std::vector<Matrix>& visuals,
                                   const FusionStack& stack, std::size_t layer,
                                   const Matrix& readout);

persist::ArrayFile to_array_file(const FusionStack& stack);
FusionStack from_array_file(const persist::ArrayFile& file);

}  // namespace mmsel::fusion

#endif  // MMSEL_CORE_FUSION_HPP
