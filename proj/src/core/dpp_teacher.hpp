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

#ifndef MMSEL_CORE_DPP_TEACHER_HPP
#define MMSEL_CORE_DPP_TEACHER_HPP

#include <cstddef>
#include <vector>

#include "article.hpp"
#include "linalg.hpp"

namespace mmsel::dpp {

/// Teacher hyperparameters. Defaults are the published VRP settings.
struct TeacherParams {
  double gamma = 2.0;    // relevance scale in q_i = exp(gamma * r_i)
  double sigma = 0.8;    // RBF bandwidth over cosine distance
  double epsilon = 1e-5; // diagonal jitter on L
  double mu = 3.0;       // target expected subset size
  double alpha = 0.3;    // cardinality weight used by the student loss
  int k_max = 3;         // selection budget

  /// Throws InvalidInput when any field is out of range.
  void validate() const;
};

/// Everything derived from one article's embeddings on the way to L.
struct KernelBundle {
  Vector relevance;          // r_i = <e_text, e_i>
  Matrix similarity;         // s_ij = <e_i, e_j>
  Vector quality;            // q_i = exp(gamma r_i)
  linalg::SymMatrix kappa;   // exp(-2(1 - s_ij) / (2 sigma^2)), unit diagonal
  linalg::SymMatrix kernel;  // L = Q^1/2 kappa Q^1/2 + eps I
};

struct DppLabels {
  double t_star = 0.0;
  Vector pi;
  linalg::EigenPair eigen;
};

inline constexpr double kCalibrationTol = 1e-9;
inline constexpr int kMaxBisectionSteps = 200;
inline constexpr std::size_t kMaxOracleSize = 15;

KernelBundle build_kernel(const ArticleRecord& article, const TeacherParams& params);

/// Tr K(t) = sum_l lambda_l / (lambda_l + t). Throws InvalidInput for t < 0.
double trace_of_marginal(const linalg::EigenPair& eigen, double t);

/// Solves Tr K(t) = min(mu, n) by bracketed bisection. Returns 0 when
/// mu >= n (nothing to shrink).
double calibrate_temperature(const linalg::EigenPair& eigen, double mu,
                             double tol = kCalibrationTol);

/// Diagonal of K(t) = U diag(lambda / (lambda + t)) U^T, clamped to [0, 1].
Vector marginals(const linalg::EigenPair& eigen, double t_star);

/// Exact inclusion marginals of the L-ensemble with kernel L / t, obtained
/// by summing det(L_S) / t^|S| over all 2^n subsets. Limited to n <= 15.
Vector brute_force_marginals(const linalg::SymMatrix& kernel, double t);

/// build_kernel -> sym_eig -> calibrate_temperature -> marginals. When
/// mu >= n every image is selected with probability one and t* = 0.
DppLabels label_article(const ArticleRecord& article, const TeacherParams& params);

/// Greedy MAP: repeatedly add the item with the largest determinant ratio
/// det(L_{S+i}) / det(L_S), lowest index on ties, while the ratio is positive.
std::vector<std::size_t> greedy_map_select(const linalg::SymMatrix& kernel,
                                           std::size_t budget);

}  // namespace mmsel::dpp

#endif  // MMSEL_CORE_DPP_TEACHER_HPP
