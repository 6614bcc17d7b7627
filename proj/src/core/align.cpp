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

#include "align.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace mmsel::align {

namespace {

// -log(sigmoid(x)) = softplus(-x); -log(1 - sigmoid(x)) = softplus(x).
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_dim(std::span<const double> v, std::size_t d, const char* what) {
  if (v.size() != d)
    fail(ErrorKind::InvalidInput, std::string(what) + " has dimension " +
                                      std::to_string(v.size()) + ", expected " +
                                      std::to_string(d));
}

}  // namespace

Vector pooled_visual_embedding(std::span<const Vector> image_embeddings) {
  if (image_embeddings.empty()) fail(ErrorKind::InvalidInput, "no images to pool");
  const std::size_t d = image_embeddings.front().size();
  Vector mean(d, 0.0);
  for (const auto& e : image_embeddings) {
    require_dim(e, d, "image embedding");
    for (std::size_t i = 0; i < d; ++i) mean[i] += e[i];
  }
  for (double& x : mean) x /= static_cast<double>(image_embeddings.size());
  const double n = norm2(mean);
  if (!(n > 1e-12)) fail(ErrorKind::DegeneratePool, "mean image embedding is zero");
  for (double& x : mean) x /= n;
  return mean;
}

std::vector<std::size_t> default_negatives(std::size_t batch_size, std::size_t anchor) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < batch_size; ++j)
    if (j != anchor) out.push_back(j);
  return out;
}

AlignLoss alignment_loss(const AlignBatch& batch, std::size_t anchor) {
  if (!(batch.tau > 0.0)) fail(ErrorKind::InvalidInput, "tau must be positive");
  if (anchor >= batch.v_sig.size())
    fail(ErrorKind::InvalidInput, "anchor article " + std::to_string(anchor) + " out of range");
  const std::size_t d = batch.t_stu.size();
  require_dim(batch.v_sig[anchor], d, "anchor visual embedding");
  for (std::size_t j : batch.negatives) {
    if (j == anchor)
      fail(ErrorKind::InvalidInput, "negative set contains the anchor article");
    if (j >= batch.v_sig.size() || j >= batch.t_sig.size())
      fail(ErrorKind::InvalidInput, "negative index " + std::to_string(j) + " out of range");
    require_dim(batch.v_sig[j], d, "negative visual embedding");
    require_dim(batch.t_sig[j], d, "negative teacher text embedding");
  }

  const double inv_tau = 1.0 / batch.tau;
  const Vector& v_a = batch.v_sig[anchor];
  AlignLoss out;
  out.dloss_dt_stu.assign(d, 0.0);

  const double z_pos = dot(batch.t_stu, v_a) * inv_tau;
  out.positive = softplus(-z_pos);
  const double w_pos = -(1.0 - sigmoid(z_pos)) * inv_tau;
  for (std::size_t i = 0; i < d; ++i) out.dloss_dt_stu[i] += w_pos * v_a[i];

  if (!batch.negatives.empty()) {
    const double inv_s = 1.0 / static_cast<double>(batch.negatives.size());
    for (std::size_t j : batch.negatives) {
      const Vector& v_j = batch.v_sig[j];
      const double z_neg = dot(batch.t_stu, v_j) * inv_tau;
      out.student_negative += inv_s * softplus(z_neg);
      const double w = inv_s * sigmoid(z_neg) * inv_tau;
      for (std::size_t i = 0; i < d; ++i) out.dloss_dt_stu[i] += w * v_j[i];
      out.teacher_negative += inv_s * softplus(dot(batch.t_sig[j], v_a) * inv_tau);
    }
  }
  out.loss = out.positive + out.student_negative + out.teacher_negative;
  return out;
}

Vector mean_pool_decoder(const Matrix& states) {
  if (states.rows() == 0) fail(ErrorKind::InvalidInput, "decoder states are empty");
  Vector mean(states.cols(), 0.0);
  for (std::size_t r = 0; r < states.rows(); ++r) {
    const auto row = states.row(r);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
  }
  for (double& x : mean) x /= static_cast<double>(states.rows());
  return mean;
}

Vector TextProjector::operator()(std::span<const double> pooled) const {
  require_dim(pooled, weight_.cols(), "pooled decoder state");
  Vector out(weight_.rows());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = dot(weight_.row(r), pooled);
  const double n = norm2(out);
  if (!(n > 0.0) || !std::isfinite(n))
    fail(ErrorKind::DegenerateProjection, "projected text vector is zero");
  for (double& x : out) x /= n;
  return out;
}

double combine_losses(std::optional<double> l_lm, double l_align, double l_vrp,
                      const LossWeights& weights) {
  if (!(weights.lambda_align >= 0.0) || !(weights.lambda_vrp >= 0.0))
    fail(ErrorKind::InvalidInput, "loss weights must be non-negative");
  return l_lm.value_or(0.0) + weights.lambda_align * l_align + weights.lambda_vrp * l_vrp;
}

}  // namespace mmsel::align
