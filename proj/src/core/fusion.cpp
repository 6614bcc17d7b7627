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

#include "fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dual.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace mmsel::fusion {

namespace {

template <typename T>
using Mat = BasicMatrix<T>;

constexpr double kLayerNormEps = 1e-5;

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols)
    fail(ErrorKind::InvalidInput, what + " has shape " + shape_of(m) + ", expected " +
                                      std::to_string(rows) + "x" + std::to_string(cols));
}

bool is_exact_zero(double x) { return x == 0.0; }
bool is_exact_zero(const Dual& x) { return x.v == 0.0 && x.d == 0.0; }

template <typename T>
Mat<T> lift(const Matrix& m) {
  Mat<T> out(m.rows(), m.cols());
  auto dst = out.data();
  auto src = m.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = T(src[i]);
  return out;
}

/// y = x W^T (+ b), W stored output x input.
template <typename T>
Mat<T> linear(const Mat<T>& x, const Matrix& w, const Vector* bias = nullptr) {
  if (x.cols() != w.cols())
    fail(ErrorKind::InvalidInput, "linear map expects input width " + std::to_string(w.cols()) +
                                      ", got " + std::to_string(x.cols()));
  Mat<T> y(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const auto wr = w.row(o);
      T acc = bias ? T((*bias)[o]) : T(0.0);
      for (std::size_t i = 0; i < wr.size(); ++i) acc += xr[i] * T(wr[i]);
      y(r, o) = acc;
    }
  }
  return y;
}

template <typename T>
void add_to(Mat<T>& a, const Mat<T>& b) {
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) da[i] += db[i];
}

template <typename T>
T gelu(const T& x) {
  using std::erf;
  return T(0.5) * x * (T(1.0) + erf(x * T(0.70710678118654752440)));
}

template <typename T>
Mat<T> layer_norm_t(const Mat<T>& x) {
  using std::sqrt;
  Mat<T> y(x.rows(), x.cols());
  const double inv = 1.0 / static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    T mean(0.0);
    for (const T& v : xr) mean += v;
    mean *= T(inv);
    T var(0.0);
    for (const T& v : xr) var += (v - mean) * (v - mean);
    var *= T(inv);
    const T denom = sqrt(var + T(kLayerNormEps));
    for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) = (xr[c] - mean) / denom;
  }
  return y;
}

/// Scaled dot-product attention over pre-projected Q, K, V.
template <typename T>
Mat<T> attention_core(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, std::size_t n_heads,
                      bool causal, std::vector<Matrix>* maps) {
  using std::exp;
  const std::size_t width = q.cols();
  if (k.cols() != width || v.cols() != width || k.rows() != v.rows())
    fail(ErrorKind::InvalidInput, "attention projections have inconsistent widths");
  if (n_heads == 0 || width % n_heads != 0)
    fail(ErrorKind::InvalidInput, "attention width " + std::to_string(width) +
                                      " is not divisible by " + std::to_string(n_heads) +
                                      " heads");
  if (k.rows() == 0) fail(ErrorKind::InvalidInput, "attention over an empty key set");
  if (causal && q.rows() != k.rows())
    fail(ErrorKind::InvalidInput, "causal attention needs as many queries as keys");

  const std::size_t d_k = width / n_heads;
  const T scale(1.0 / std::sqrt(static_cast<double>(d_k)));
  Mat<T> out(q.rows(), width);
  std::vector<T> scores(k.rows());
  for (std::size_t head = 0; head < n_heads; ++head) {
    const std::size_t off = head * d_k;
    Matrix map;
    if (maps) map = Matrix(q.rows(), k.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) {
      const std::size_t n_keys = causal ? i + 1 : k.rows();
      T best(0.0);
      for (std::size_t j = 0; j < n_keys; ++j) {
        T s(0.0);
        for (std::size_t c = 0; c < d_k; ++c) s += q(i, off + c) * k(j, off + c);
        scores[j] = s * scale;
        if (j == 0 || scores[j] > best) best = scores[j];
      }
      T total(0.0);
      for (std::size_t j = 0; j < n_keys; ++j) {
        scores[j] = exp(scores[j] - best);
        total += scores[j];
      }
      for (std::size_t j = 0; j < n_keys; ++j) {
        const T p = scores[j] / total;
        if (maps) map(i, j) = value_of(p);
        for (std::size_t c = 0; c < d_k; ++c) out(i, off + c) += p * v(j, off + c);
      }
    }
    if (maps) maps->push_back(std::move(map));
  }
  return out;
}

template <typename T>
Mat<T> attend_t(const Mat<T>& queries, const Mat<T>& keys_values, const AttentionWeights& w,
                std::size_t n_heads, bool causal, std::vector<Matrix>* maps = nullptr) {
  Mat<T> out = attention_core(linear(queries, w.wq), linear(keys_values, w.wk),
                              linear(keys_values, w.wv), n_heads, causal, maps);
  if (!w.wo.empty()) out = linear(out, w.wo);
  return out;
}

template <typename T>
Mat<T> mlp_t(const Mat<T>& x, const MlpWeights& w) {
  Mat<T> hidden = linear(x, w.w1, &w.b1);
  for (T& h : hidden.data()) h = gelu(h);
  return linear(hidden, w.w2, &w.b2);
}

template <typename T>
void transformer_block_t(Mat<T>& x, const TransformerBlock& block, std::size_t n_heads,
                         bool causal) {
  Mat<T> n = layer_norm_t(x);
  add_to(x, attend_t(n, n, block.attn, n_heads, causal));
  add_to(x, mlp_t(layer_norm_t(x), block.mlp));
}

template <typename T>
Mat<T> cross_attention_t(const Mat<T>& h, const Matrix& v_hat, const GatedCrossAttention& w,
                         std::size_t n_heads) {
  const Mat<T> v = lift<T>(v_hat);
  return attention_core(linear(h, w.wq), linear(v, w.wk), linear(v, w.wv), n_heads, false,
                        nullptr);
}

template <typename T>
Mat<T> fused_t(Mat<T> h, const std::vector<Matrix>* visuals, const FusionStack& stack,
               const std::map<std::size_t, T>& gates) {
  const FusionConfig& cfg = stack.config;
  if (h.rows() == 0 || h.cols() != cfg.d)
    fail(ErrorKind::InvalidInput, "text states must be T x " + std::to_string(cfg.d));
  for (std::size_t layer = 1; layer <= cfg.dvp_layers; ++layer) {
    auto gate = gates.find(layer);
    if (gate != gates.end()) {
      const Matrix& v_hat = (*visuals)[layer - 1];
      if (!is_exact_zero(gate->second)) {
        Mat<T> x = cross_attention_t(h, v_hat, stack.xattn.at(layer), cfg.n_heads);
        auto hd = h.data();
        auto xd = x.data();
        for (std::size_t i = 0; i < hd.size(); ++i) hd[i] += gate->second * xd[i];
      }
    }
    transformer_block_t(h, stack.decoder[layer - 1], cfg.n_heads, true);
  }
  return h;
}

void check_visuals(const std::vector<Matrix>& visuals, const FusionStack& stack) {
  for (std::size_t layer : stack.config.inject_layers) {
    if (layer > visuals.size() || visuals[layer - 1].empty())
      fail(ErrorKind::InvalidInput,
           "missing visual state for inject layer " + std::to_string(layer));
    if (visuals[layer - 1].cols() != stack.config.d)
      fail(ErrorKind::InvalidInput, "visual state for layer " + std::to_string(layer) +
                                        " has width " + std::to_string(visuals[layer - 1].cols()));
  }
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  Matrix m(rows, cols);
  const double sd = scale / std::sqrt(static_cast<double>(cols));
  for (double& x : m.data()) x = sd * rng.normal();
  return m;
}

AttentionWeights random_attention(std::size_t d, Rng& rng, double scale, bool output) {
  AttentionWeights w{random_matrix(d, d, rng, scale), random_matrix(d, d, rng, scale),
                     random_matrix(d, d, rng, scale), {}};
  if (output) w.wo = random_matrix(d, d, rng, scale);
  return w;
}

MlpWeights random_mlp(std::size_t d, std::size_t ff, Rng& rng, double scale) {
  return MlpWeights{random_matrix(ff * d, d, rng, scale), Vector(ff * d, 0.0),
                    random_matrix(d, ff * d, rng, scale), Vector(d, 0.0)};
}

AttentionWeights zero_attention(std::size_t d) {
  return AttentionWeights{Matrix(d, d), Matrix(d, d), Matrix(d, d), Matrix(d, d)};
}

MlpWeights zero_mlp(std::size_t d, std::size_t ff) {
  return MlpWeights{Matrix(ff * d, d), Vector(ff * d, 0.0), Matrix(d, ff * d), Vector(d, 0.0)};
}

void check_attention(const AttentionWeights& w, std::size_t d, const std::string& what) {
  require_shape(w.wq, d, d, what + ".wq");
  require_shape(w.wk, d, d, what + ".wk");
  require_shape(w.wv, d, d, what + ".wv");
  if (!w.wo.empty()) require_shape(w.wo, d, d, what + ".wo");
}

void check_mlp(const MlpWeights& w, std::size_t d, std::size_t ff, const std::string& what) {
  require_shape(w.w1, ff * d, d, what + ".w1");
  require_shape(w.w2, d, ff * d, what + ".w2");
  if (w.b1.size() != ff * d || w.b2.size() != d)
    fail(ErrorKind::InvalidInput, what + " bias sizes are inconsistent");
}

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void FusionConfig::validate() const {
  if (d_v == 0 || d == 0 || n_latents == 0 || sampler_depth == 0 || ff_mult == 0 ||
      dvp_layers == 0 || n_heads == 0)
    fail(ErrorKind::InvalidInput, "fusion dimensions must all be positive");
  if (d % n_heads != 0)
    fail(ErrorKind::InvalidInput, "model width must be divisible by the head count");
  for (std::size_t layer : inject_layers)
    if (layer < 1 || layer > dvp_layers)
      fail(ErrorKind::InvalidInput, "inject layer " + std::to_string(layer) +
                                        " outside [1, " + std::to_string(dvp_layers) + "]");
}

FusionStack FusionStack::random(const FusionConfig& config, std::uint64_t seed, double scale) {
  config.validate();
  Rng rng(seed);
  const std::size_t d = config.d;
  FusionStack s;
  s.config = config;
  s.projector = random_matrix(d, config.d_v, rng, scale);
  s.latents = random_matrix(config.n_latents, d, rng, 1.0);
  for (std::size_t i = 0; i < config.sampler_depth; ++i)
    s.sampler.push_back(SamplerBlock{random_attention(d, rng, scale, true),
                                     random_attention(d, rng, scale, true),
                                     random_mlp(d, config.ff_mult, rng, scale)});
  for (std::size_t i = 0; i < config.dvp_layers; ++i)
    s.dvp.push_back(TransformerBlock{random_attention(d, rng, scale, true),
                                     random_mlp(d, config.ff_mult, rng, scale)});
  for (std::size_t i = 0; i < config.dvp_layers; ++i)
    s.decoder.push_back(TransformerBlock{random_attention(d, rng, scale, true),
                                         random_mlp(d, config.ff_mult, rng, scale)});
  for (std::size_t layer : config.inject_layers)
    s.xattn[layer] = GatedCrossAttention{random_matrix(d, d, rng, scale),
                                         random_matrix(d, d, rng, scale),
                                         random_matrix(d, d, rng, scale), 0.0};
  return s;
}

FusionStack FusionStack::zeros(const FusionConfig& config) {
  config.validate();
  const std::size_t d = config.d;
  FusionStack s;
  s.config = config;
  s.projector = Matrix(d, config.d_v);
  s.latents = Matrix(config.n_latents, d);
  for (std::size_t i = 0; i < config.sampler_depth; ++i)
    s.sampler.push_back(
        SamplerBlock{zero_attention(d), zero_attention(d), zero_mlp(d, config.ff_mult)});
  for (std::size_t i = 0; i < config.dvp_layers; ++i) {
    s.dvp.push_back(TransformerBlock{zero_attention(d), zero_mlp(d, config.ff_mult)});
    s.decoder.push_back(TransformerBlock{zero_attention(d), zero_mlp(d, config.ff_mult)});
  }
  for (std::size_t layer : config.inject_layers)
    s.xattn[layer] = GatedCrossAttention{Matrix(d, d), Matrix(d, d), Matrix(d, d), 0.0};
  return s;
}

void FusionStack::validate() const {
  config.validate();
  const std::size_t d = config.d;
  const std::size_t ff = config.ff_mult;
  require_shape(projector, d, config.d_v, "projector");
  require_shape(latents, config.n_latents, d, "latents");
  if (sampler.size() != config.sampler_depth || dvp.size() != config.dvp_layers ||
      decoder.size() != config.dvp_layers)
    fail(ErrorKind::InvalidInput, "block counts do not match the fusion config");
  for (std::size_t i = 0; i < sampler.size(); ++i) {
    check_attention(sampler[i].cross, d, "sampler cross");
    check_attention(sampler[i].self, d, "sampler self");
    check_mlp(sampler[i].mlp, d, ff, "sampler mlp");
  }
  for (const auto* blocks : {&dvp, &decoder})
    for (const auto& b : *blocks) {
      check_attention(b.attn, d, "block attention");
      check_mlp(b.mlp, d, ff, "block mlp");
    }
  if (xattn.size() != config.inject_layers.size())
    fail(ErrorKind::InvalidInput, "one gated cross-attention per inject layer is required");
  for (std::size_t layer : config.inject_layers) {
    auto it = xattn.find(layer);
    if (it == xattn.end())
      fail(ErrorKind::InvalidInput, "no cross-attention weights for layer " + std::to_string(layer));
    require_shape(it->second.wq, d, d, "xattn.wq");
    require_shape(it->second.wk, d, d, "xattn.wk");
    require_shape(it->second.wv, d, d, "xattn.wv");
    if (!std::isfinite(it->second.alpha)) fail(ErrorKind::InvalidInput, "gate is not finite");
  }
  const persist::ArrayFile file = to_array_file(*this);
  for (const auto& [name, m] : file.arrays)
    if (!all_finite(m.data())) fail(ErrorKind::InvalidInput, "weight '" + name + "' is not finite");
}

Matrix layer_norm(const Matrix& x) { return layer_norm_t(x); }

AttentionResult attend(const Matrix& queries, const Matrix& keys_values,
                       const AttentionWeights& w, std::size_t n_heads, bool causal) {
  AttentionResult r;
  r.output = attend_t(queries, keys_values, w, n_heads, causal, &r.maps);
  return r;
}

Matrix project(const Matrix& patch_features, const Matrix& projector) {
  if (patch_features.cols() != projector.cols())
    fail(ErrorKind::InvalidInput, "patch features have width " +
                                      std::to_string(patch_features.cols()) +
                                      " but the projector expects " +
                                      std::to_string(projector.cols()));
  return linear(patch_features, projector);
}

Matrix sinusoidal_positions(std::size_t rows, std::size_t dim) {
  Matrix pe(rows, dim);
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double freq = std::pow(10000.0, -static_cast<double>(c - c % 2) /
                                                static_cast<double>(dim));
      const double angle = static_cast<double>(t) * freq;
      pe(t, c) = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Matrix perceiver_sample(const Matrix& patch_features, const Matrix& pos_enc,
                        const FusionStack& stack) {
  if (patch_features.rows() != pos_enc.rows() || patch_features.cols() != pos_enc.cols())
    fail(ErrorKind::InvalidInput, "patch features " + shape_of(patch_features) +
                                      " and positional encodings " + shape_of(pos_enc) +
                                      " differ in shape");
  if (patch_features.rows() == 0) fail(ErrorKind::InvalidInput, "no patches to sample");
  Matrix with_pos = patch_features;
  auto dst = with_pos.data();
  auto src = pos_enc.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  const Matrix context = layer_norm(project(with_pos, stack.projector));

  Matrix latents = stack.latents;
  const std::size_t heads = stack.config.n_heads;
  for (const SamplerBlock& block : stack.sampler) {
    add_to(latents, attend_t(layer_norm(latents), context, block.cross, heads, false));
    const Matrix n = layer_norm(latents);
    add_to(latents, attend_t(n, n, block.self, heads, false));
    add_to(latents, mlp_t(layer_norm(latents), block.mlp));
  }
  return latents;
}

std::vector<Matrix> dvp_forward(const Matrix& latents, const FusionStack& stack) {
  if (latents.cols() != stack.config.d || latents.rows() == 0)
    fail(ErrorKind::InvalidInput, "latents must be L x " + std::to_string(stack.config.d));
  std::vector<Matrix> states;
  states.reserve(stack.dvp.size());
  Matrix x = latents;
  for (const TransformerBlock& block : stack.dvp) {
    transformer_block_t(x, block, stack.config.n_heads, false);
    states.push_back(x);
  }
  return states;
}

Matrix cross_attention(const Matrix& h, const Matrix& v_hat, const GatedCrossAttention& w,
                       std::size_t n_heads) {
  if (h.cols() != w.wq.cols() || v_hat.cols() != w.wk.cols() || v_hat.rows() == 0)
    fail(ErrorKind::InvalidInput, "cross-attention inputs " + shape_of(h) + " and " +
                                      shape_of(v_hat) + " do not match weights " +
                                      shape_of(w.wq));
  return cross_attention_t(h, v_hat, w, n_heads);
}

Matrix gated_xattn(const Matrix& h, const Matrix& v_hat, const GatedCrossAttention& w,
                   std::size_t n_heads) {
  const Matrix x = cross_attention(h, v_hat, w, n_heads);
  const double gate = std::tanh(w.alpha);
  if (gate == 0.0) return h;
  Matrix out = h;
  auto od = out.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += gate * xd[i];
  return out;
}

Matrix fused_stack_forward(const Matrix& text_states, const std::vector<Matrix>& visuals,
                           const FusionStack& stack) {
  check_visuals(visuals, stack);
  std::map<std::size_t, double> gates;
  for (std::size_t layer : stack.config.inject_layers)
    gates[layer] = std::tanh(stack.xattn.at(layer).alpha);
  return fused_t(text_states, &visuals, stack, gates);
}

Matrix text_only_forward(const Matrix& text_states, const FusionStack& stack) {
  return fused_t(text_states, nullptr, stack, std::map<std::size_t, double>{});
}

double gate_directional_derivative(const Matrix& text_states, const std::vector<Matrix>& visuals,
                                   const FusionStack& stack, std::size_t layer,
                                   const Matrix& readout) {
  check_visuals(visuals, stack);
  if (!stack.config.inject_layers.contains(layer))
    fail(ErrorKind::InvalidInput, "layer " + std::to_string(layer) + " is not an inject layer");
  std::map<std::size_t, Dual> gates;
  for (std::size_t l : stack.config.inject_layers) {
    const double alpha = stack.xattn.at(l).alpha;
    gates[l] = tanh(Dual(alpha, l == layer ? 1.0 : 0.0));
  }
  const Mat<Dual> out = fused_t(lift<Dual>(text_states), &visuals, stack, gates);
  require_shape(readout, out.rows(), out.cols(), "readout");
  double derivative = 0.0;
  for (std::size_t i = 0; i < out.data().size(); ++i)
    derivative += readout.data()[i] * out.data()[i].d;
  return derivative;
}

persist::ArrayFile to_array_file(const FusionStack& stack) {
  persist::ArrayFile f;
  f.format = "mmsel-fusion";
  f.version = 1;
  const FusionConfig& c = stack.config;
  f.meta["d_v"] = static_cast<double>(c.d_v);
  f.meta["d"] = static_cast<double>(c.d);
  f.meta["n_latents"] = static_cast<double>(c.n_latents);
  f.meta["sampler_depth"] = static_cast<double>(c.sampler_depth);
  f.meta["ff_mult"] = static_cast<double>(c.ff_mult);
  f.meta["dvp_layers"] = static_cast<double>(c.dvp_layers);
  f.meta["n_heads"] = static_cast<double>(c.n_heads);
  f.meta["inject_count"] = static_cast<double>(c.inject_layers.size());
  std::size_t k = 0;
  for (std::size_t layer : c.inject_layers)
    f.meta["inject." + std::to_string(k++)] = static_cast<double>(layer);

  auto vec = [](const Vector& v) { return Matrix(1, v.size(), v); };
  auto put_attn = [&](const std::string& p, const AttentionWeights& w) {
    f.arrays[p + ".wq"] = w.wq;
    f.arrays[p + ".wk"] = w.wk;
    f.arrays[p + ".wv"] = w.wv;
    f.arrays[p + ".wo"] = w.wo;
  };
  auto put_mlp = [&](const std::string& p, const MlpWeights& w) {
    f.arrays[p + ".w1"] = w.w1;
    f.arrays[p + ".b1"] = vec(w.b1);
    f.arrays[p + ".w2"] = w.w2;
    f.arrays[p + ".b2"] = vec(w.b2);
  };
  f.arrays["projector"] = stack.projector;
  f.arrays["latents"] = stack.latents;
  for (std::size_t i = 0; i < stack.sampler.size(); ++i) {
    const std::string p = "sampler." + std::to_string(i);
    put_attn(p + ".cross", stack.sampler[i].cross);
    put_attn(p + ".self", stack.sampler[i].self);
    put_mlp(p + ".mlp", stack.sampler[i].mlp);
  }
  for (std::size_t i = 0; i < stack.dvp.size(); ++i) {
    put_attn("dvp." + std::to_string(i) + ".attn", stack.dvp[i].attn);
    put_mlp("dvp." + std::to_string(i) + ".mlp", stack.dvp[i].mlp);
  }
  for (std::size_t i = 0; i < stack.decoder.size(); ++i) {
    put_attn("decoder." + std::to_string(i) + ".attn", stack.decoder[i].attn);
    put_mlp("decoder." + std::to_string(i) + ".mlp", stack.decoder[i].mlp);
  }
  for (const auto& [layer, w] : stack.xattn) {
    const std::string p = "xattn." + std::to_string(layer);
    f.arrays[p + ".wq"] = w.wq;
    f.arrays[p + ".wk"] = w.wk;
    f.arrays[p + ".wv"] = w.wv;
    f.arrays[p + ".alpha"] = Matrix(1, 1, Vector{w.alpha});
  }
  return f;
}

FusionStack from_array_file(const persist::ArrayFile& f) {
  if (f.format != "mmsel-fusion" || f.version != 1)
    fail(ErrorKind::Io, "not a version-1 fusion weight file");
  auto count = [&](const char* name) { return static_cast<std::size_t>(f.meta_value(name)); };
  FusionStack s;
  FusionConfig& c = s.config;
  c.d_v = count("d_v");
  c.d = count("d");
  c.n_latents = count("n_latents");
  c.sampler_depth = count("sampler_depth");
  c.ff_mult = count("ff_mult");
  c.dvp_layers = count("dvp_layers");
  c.n_heads = count("n_heads");
  c.inject_layers.clear();
  const std::size_t n_inject = count("inject_count");
  for (std::size_t k = 0; k < n_inject; ++k)
    c.inject_layers.insert(static_cast<std::size_t>(f.meta_value("inject." + std::to_string(k))));

  auto vec = [&](const std::string& name) { return f.array(name).storage(); };
  auto get_attn = [&](const std::string& p) {
    return AttentionWeights{f.array(p + ".wq"), f.array(p + ".wk"), f.array(p + ".wv"),
                            f.array(p + ".wo")};
  };
  auto get_mlp = [&](const std::string& p) {
    return MlpWeights{f.array(p + ".w1"), vec(p + ".b1"), f.array(p + ".w2"), vec(p + ".b2")};
  };
  s.projector = f.array("projector");
  s.latents = f.array("latents");
  for (std::size_t i = 0; i < c.sampler_depth; ++i) {
    const std::string p = "sampler." + std::to_string(i);
    s.sampler.push_back(SamplerBlock{get_attn(p + ".cross"), get_attn(p + ".self"),
                                     get_mlp(p + ".mlp")});
  }
  for (std::size_t i = 0; i < c.dvp_layers; ++i) {
    s.dvp.push_back(TransformerBlock{get_attn("dvp." + std::to_string(i) + ".attn"),
                                     get_mlp("dvp." + std::to_string(i) + ".mlp")});
    s.decoder.push_back(TransformerBlock{get_attn("decoder." + std::to_string(i) + ".attn"),
                                         get_mlp("decoder." + std::to_string(i) + ".mlp")});
  }
  for (std::size_t layer : c.inject_layers) {
    const std::string p = "xattn." + std::to_string(layer);
    const Matrix& alpha = f.array(p + ".alpha");
    if (alpha.data().size() != 1) fail(ErrorKind::Io, p + ".alpha must hold one value");
    s.xattn[layer] = GatedCrossAttention{f.array(p + ".wq"), f.array(p + ".wk"),
                                         f.array(p + ".wv"), alpha.data()[0]};
  }
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Io, std::string("invalid fusion weight file: ") + e.what());
  }
  return s;
}

}  // namespace mmsel::fusion
