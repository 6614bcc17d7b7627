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

#include "dpp_teacher.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace mmsel::dpp {

void TeacherParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      fail(ErrorKind::InvalidInput, std::string(name) + " must be positive and finite");
  };
  positive(gamma, "gamma");
  positive(sigma, "sigma");
  positive(epsilon, "epsilon");
  positive(mu, "mu");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    fail(ErrorKind::InvalidInput, "alpha must be non-negative");
  if (k_max < 1) fail(ErrorKind::InvalidInput, "k_max must be at least 1");
}

KernelBundle build_kernel(const ArticleRecord& article, const TeacherParams& params) {
  params.validate();
  validate_article(article);
  const std::size_t n = article.images.size();

  Vector r(n), q(n);
  Matrix s(n, n), kappa(n, n), l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    // Clamp guards the [-1, 1] range against round-off in unit vectors.
    r[i] = std::clamp(dot(article.text_embedding, article.images[i].embedding), -1.0, 1.0);
    q[i] = std::exp(params.gamma * r[i]);
  }
  const double two_sigma_sq = 2.0 * params.sigma * params.sigma;
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    kappa(i, i) = 1.0;
    l(i, i) = q[i] + params.epsilon;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sij =
          std::clamp(dot(article.images[i].embedding, article.images[j].embedding), -1.0, 1.0);
      const double dist_sq = 2.0 * (1.0 - sij);
      s(i, j) = s(j, i) = sij;
      kappa(i, j) = std::exp(-dist_sq / two_sigma_sq);
      l(i, j) = std::sqrt(q[i] * q[j]) * kappa(i, j);
    }
  }
  return KernelBundle{std::move(r), std::move(s), std::move(q),
                      linalg::SymMatrix::from_upper(std::move(kappa)),
                      linalg::SymMatrix::from_upper(std::move(l))};
}

namespace {

double shrink(double lambda, double t) {
  const double denom = lambda + t;
  return denom > 0.0 ? lambda / denom : 0.0;
}

}  // namespace

double trace_of_marginal(const linalg::EigenPair& eigen, double t) {
  if (!(t >= 0.0)) fail(ErrorKind::InvalidInput, "temperature must be non-negative");
  double sum = 0.0;
  for (double lambda : eigen.values) sum += shrink(lambda, t);
  return sum;
}

double calibrate_temperature(const linalg::EigenPair& eigen, double mu, double tol) {
  if (!(mu > 0.0)) fail(ErrorKind::InvalidInput, "mu must be positive");
  if (!(tol > 0.0)) fail(ErrorKind::InvalidInput, "tolerance must be positive");
  const double n = static_cast<double>(eigen.values.size());
  if (mu >= n) return 0.0;
  if (trace_of_marginal(eigen, 0.0) <= mu) return 0.0;

  double lo = 0.0;
  double hi = std::max(eigen.values.front(), 1e-300);
  while (trace_of_marginal(eigen, hi) >= mu) {
    lo = hi;
    hi *= 2.0;
  }
  double mid = hi;
  for (int step = 0; step < kMaxBisectionSteps; ++step) {
    mid = 0.5 * (lo + hi);
    const double tr = trace_of_marginal(eigen, mid);
    if (std::fabs(tr - mu) <= tol) break;
    if (tr > mu)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

Vector marginals(const linalg::EigenPair& eigen, double t_star) {
  if (!(t_star >= 0.0)) fail(ErrorKind::InvalidInput, "temperature must be non-negative");
  const std::size_t n = eigen.values.size();
  Vector shrunk(n);
  for (std::size_t l = 0; l < n; ++l) shrunk[l] = shrink(eigen.values[l], t_star);
  Vector pi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double u = eigen.vectors(i, l);
      sum += u * u * shrunk[l];
    }
    pi[i] = std::clamp(sum, 0.0, 1.0);
  }
  return pi;
}

Vector brute_force_marginals(const linalg::SymMatrix& kernel, double t) {
  const std::size_t n = kernel.size();
  if (n > kMaxOracleSize)
    fail(ErrorKind::OracleTooLarge, "exhaustive enumeration limited to n <= " +
                                        std::to_string(kMaxOracleSize) + ", got " +
                                        std::to_string(n));
  if (!(t > 0.0)) fail(ErrorKind::InvalidInput, "oracle temperature must be positive");

  Vector inclusion(n, 0.0);
  double total = 0.0;
  std::vector<std::size_t> subset;
  subset.reserve(n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    subset.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) subset.push_back(i);
    const double weight = linalg::principal_minor_det(kernel, subset) /
                          std::pow(t, static_cast<double>(subset.size()));
    total += weight;
    for (std::size_t i : subset) inclusion[i] += weight;
  }
  for (double& p : inclusion) p /= total;
  return inclusion;
}

DppLabels label_article(const ArticleRecord& article, const TeacherParams& params) {
  const KernelBundle bundle = build_kernel(article, params);
  DppLabels labels;
  labels.eigen = linalg::sym_eig(bundle.kernel);
  const std::size_t n = article.images.size();
  if (params.mu >= static_cast<double>(n)) {
    labels.t_star = 0.0;
    labels.pi.assign(n, 1.0);
    return labels;
  }
  labels.t_star = calibrate_temperature(labels.eigen, params.mu);
  labels.pi = marginals(labels.eigen, labels.t_star);
  return labels;
}

std::vector<std::size_t> greedy_map_select(const linalg::SymMatrix& kernel,
                                           std::size_t budget) {
  if (budget < 1) fail(ErrorKind::InvalidInput, "budget must be at least 1");
  const std::size_t n = kernel.size();
  std::vector<std::size_t> chosen;
  std::vector<bool> taken(n, false);
  double current = 1.0;
  while (chosen.size() < std::min(budget, n)) {
    std::size_t best = n;
    double best_gain = 0.0;
    double best_det = 0.0;
    std::vector<std::size_t> trial = chosen;
    trial.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      trial.back() = i;
      const double det = linalg::principal_minor_det(kernel, trial);
      const double gain = det / current;
      if (gain > best_gain) {
        best_gain = gain;
        best_det = det;
        best = i;
      }
    }
    if (best == n) break;
    chosen.push_back(best);
    taken[best] = true;
    current = best_det;
  }
  return chosen;
}

}  // namespace mmsel::dpp
