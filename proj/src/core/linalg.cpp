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

#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "errors.hpp"

namespace mmsel::linalg {

namespace {

void require_square(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    fail(ErrorKind::InvalidMatrix, "matrix must be square and non-empty, got " +
                                       std::to_string(m.rows()) + "x" +
                                       std::to_string(m.cols()));
}

constexpr int kMaxSweeps = 100;

}  // namespace

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  require_square(m_);
  const std::size_t n = m_.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!(m_(i, j) == m_(j, i)) && !(std::isnan(m_(i, j)) && std::isnan(m_(j, i))))
        fail(ErrorKind::InvalidMatrix, "matrix is not symmetric at (" +
                                           std::to_string(i) + "," +
                                           std::to_string(j) + ")");
}

SymMatrix SymMatrix::from_upper(Matrix m) {
  require_square(m);
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m(j, i) = m(i, j);
  return SymMatrix(std::move(m), Trusted{});
}

EigenPair sym_eig(const SymMatrix& sym) {
  Matrix a = sym.matrix();
  const std::size_t n = a.rows();
  for (double x : a.data())
    if (!std::isfinite(x)) fail(ErrorKind::InvalidMatrix, "non-finite matrix entry");

  Matrix v = Matrix::identity(n);
  double fro = 0.0;
  for (double x : a.data()) fro += x * x;
  fro = std::sqrt(fro);
  const double threshold = 1e-12 * fro;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::fabs(a(p, q)));
    if (off <= threshold) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenPair out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

double determinant(Matrix m) {
  require_square(m);
  const std::size_t n = m.rows();
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(m(r, col)) > std::fabs(m(pivot, col))) pivot = r;
    if (m(pivot, col) == 0.0) return 0.0;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m(pivot, c), m(col, c));
      det = -det;
    }
    const double diag = m(col, col);
    det *= diag;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m(r, col) / diag;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) m(r, c) -= f * m(col, c);
    }
  }
  return det;
}

double principal_minor_det(const SymMatrix& a, std::span<const std::size_t> subset) {
  const std::size_t k = subset.size();
  if (k == 0) return 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (subset[i] >= a.size())
      fail(ErrorKind::Index, "subset index " + std::to_string(subset[i]) +
                                 " out of range for dimension " +
                                 std::to_string(a.size()));
    for (std::size_t j = 0; j < i; ++j)
      if (subset[i] == subset[j])
        fail(ErrorKind::Index, "duplicate subset index " + std::to_string(subset[i]));
  }
  Matrix sub(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) sub(i, j) = a(subset[i], subset[j]);
  return determinant(std::move(sub));
}

bool is_psd(const SymMatrix& a, double tol) {
  const EigenPair eig = sym_eig(a);
  return eig.values.back() >= -tol;
}

double reconstruction_error(const SymMatrix& a, const EigenPair& eig) {
  const std::size_t n = a.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
      err = std::max(err, std::fabs(a(i, j) - s));
    }
  }
  return err;
}

}  // namespace mmsel::linalg
