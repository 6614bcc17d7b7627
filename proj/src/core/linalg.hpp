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

#ifndef MMSEL_CORE_LINALG_HPP
#define MMSEL_CORE_LINALG_HPP

#include <cstddef>
#include <span>

#include "matrix.hpp"

namespace mmsel::linalg {

/// Square matrix whose entries satisfy a(i,j) == a(j,i) exactly.
class SymMatrix {
 public:
  /// Throws InvalidMatrix unless `m` is square, non-empty and exactly
  /// symmetric.
  explicit SymMatrix(Matrix m);

  /// Builds from the upper triangle of `m`, mirroring it onto the lower one.
  static SymMatrix from_upper(Matrix m);

  std::size_t size() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

 private:
  struct Trusted {};
  SymMatrix(Matrix m, Trusted) : m_(std::move(m)) {}
  Matrix m_;
};

struct EigenPair {
  Vector values;   // descending
  Matrix vectors;  // column k pairs with values[k]
};

/// Cyclic Jacobi rotations. Stops once the largest off-diagonal magnitude
/// drops to 1e-12 * ||A||_F. Throws InvalidMatrix on non-finite entries.
EigenPair sym_eig(const SymMatrix& a);

/// Determinant of the principal submatrix on `subset` via LU with partial
/// pivoting. The empty subset has determinant 1.
double principal_minor_det(const SymMatrix& a, std::span<const std::size_t> subset);

/// Plain LU determinant of a general square matrix.
double determinant(Matrix m);

bool is_psd(const SymMatrix& a, double tol);

/// max |A - U diag(lambda) U^T| over all entries.
double reconstruction_error(const SymMatrix& a, const EigenPair& eig);

}  // namespace mmsel::linalg

#endif  // MMSEL_CORE_LINALG_HPP
