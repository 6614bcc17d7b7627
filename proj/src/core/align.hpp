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

#ifndef MMSEL_CORE_ALIGN_HPP
#define MMSEL_CORE_ALIGN_HPP

#include <optional>
#include <span>
#include <vector>

#include "matrix.hpp"

namespace mmsel::align {

/// Inputs to the image-text alignment loss for one batch of articles.
/// `t_sig` and `v_sig` are indexed by article; `negatives` lists the
/// articles contrasted against the anchor.
struct AlignBatch {
  Vector t_stu;
  std::vector<Vector> t_sig;
  std::vector<Vector> v_sig;
  std::vector<std::size_t> negatives;
  double tau = 1.0;
};

struct LossWeights {
  double lambda_align = 1.0;
  double lambda_vrp = 1.0;
};

struct AlignLoss {
  double loss = 0.0;
  Vector dloss_dt_stu;
  // Individual terms: matched pair, student-vs-negatives, teacher-vs-anchor.
  double positive = 0.0;
  double student_negative = 0.0;
  double teacher_negative = 0.0;
};

/// Mean of the image embeddings, renormalized. Throws DegeneratePool when
/// the mean vanishes.
Vector pooled_visual_embedding(std::span<const Vector> image_embeddings);

/// -log s(z(t_stu, v_a)) - mean_j log(1 - s(z(t_stu, v_j)))
///                       - mean_j log(1 - s(z(t_sig_j, v_a))),  z(x, y) = x.y / tau
AlignLoss alignment_loss(const AlignBatch& batch, std::size_t anchor);

/// Every article except `anchor`.
std::vector<std::size_t> default_negatives(std::size_t batch_size, std::size_t anchor);

/// Row mean of decoder states (T x d).
Vector mean_pool_decoder(const Matrix& states);

/// Linear map d -> d_p followed by l2 normalization.
class TextProjector {
 public:
  explicit TextProjector(Matrix weight) : weight_(std::move(weight)) {}
  static TextProjector identity(std::size_t d) { return TextProjector(Matrix::identity(d)); }

  /// Throws DegenerateProjection when the projected vector is zero.
  Vector operator()(std::span<const double> pooled) const;
  const Matrix& weight() const noexcept { return weight_; }

 private:
  Matrix weight_;  // d_p x d
};

/// L_LM + lambda_align L_align + lambda_vrp L_vrp, with L_LM = 0 when absent.
double combine_losses(std::optional<double> l_lm, double l_align, double l_vrp,
                      const LossWeights& weights);

}  // namespace mmsel::align

#endif  // MMSEL_CORE_ALIGN_HPP
