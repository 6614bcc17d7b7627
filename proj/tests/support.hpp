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

#ifndef MMSEL_TESTS_SUPPORT_HPP
#define MMSEL_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "core/linalg.hpp"
#include "core/matrix.hpp"
#include "core/rng.hpp"

namespace testing {

using mmsel::Matrix;
using mmsel::Rng;
using mmsel::Vector;

inline Vector random_unit(std::size_t dim, Rng& rng) {
  Vector v(dim);
  double s = 0.0;
  for (double& x : v) {
    x = rng.normal();
    s += x * x;
  }
  for (double& x : v) x /= std::sqrt(s);
  return v;
}

/// B B^T / n + jitter I, with entries of B standard normal.
inline mmsel::linalg::SymMatrix random_psd(std::size_t n, Rng& rng, double jitter = 1e-3) {
  Matrix b(n, n);
  for (double& x : b.data()) x = rng.normal();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b(i, k) * b(j, k);
      a(i, j) = s / static_cast<double>(n) + (i == j ? jitter : 0.0);
    }
  return mmsel::linalg::SymMatrix::from_upper(a);
}

/// Gaussian elimination with partial pivoting, kept separate from the
/// library's LU routine.
inline double det_by_elimination(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    if (a[p][c] == 0.0) return 0.0;
    if (p != c) {
      std::swap(a[p], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

/// Inclusion marginals of P(S) ∝ det(L_S) / t^|S| by visiting every subset.
inline Vector enumerate_marginals(const mmsel::linalg::SymMatrix& l, double t) {
  const std::size_t n = l.size();
  Vector pi(n, 0.0);
  double z = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    std::vector<std::vector<double>> sub(idx.size(), std::vector<double>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < idx.size(); ++j) sub[i][j] = l(idx[i], idx[j]);
    const double w = det_by_elimination(sub) / std::pow(t, static_cast<double>(idx.size()));
    z += w;
    for (std::size_t i : idx) pi[i] += w;
  }
  for (double& p : pi) p /= z;
  return pi;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::fmax(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return max_abs_diff(a.storage(), b.storage());
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mmsel_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string fixture(const std::string& name) {
  return std::string(MMSEL_FIXTURE_DIR) + "/" + name;
}

}  // namespace testing

#endif  // MMSEL_TESTS_SUPPORT_HPP
