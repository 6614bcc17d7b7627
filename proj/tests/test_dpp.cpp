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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/article.hpp"
#include "core/dpp_teacher.hpp"
#include "core/errors.hpp"
#include "support.hpp"

using namespace mmsel;
using linalg::SymMatrix;

namespace {

ArticleRecord make_article(const Vector& text, const std::vector<Vector>& images) {
  ArticleRecord a;
  a.id = "t";
  a.text_embedding = text;
  for (std::size_t i = 0; i < images.size(); ++i)
    a.images.push_back(ImageRecord{"t_" + std::to_string(i), images[i], std::nullopt});
  return a;
}

double sum(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("teacher parameters validate their ranges") {
  dpp::TeacherParams p;
  CHECK_NOTHROW(p.validate());
  p.sigma = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.k_max = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.alpha = -0.1;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("kernel for two orthogonal images") {
  const auto a = make_article({1, 0}, {{1, 0}, {0, 1}});
  const auto k = dpp::build_kernel(a, {});
  CHECK(k.relevance == Vector{1.0, 0.0});
  CHECK(k.quality[0] == doctest::Approx(7.38905609893065).epsilon(1e-14));
  CHECK(k.quality[1] == 1.0);
  CHECK(k.kappa(0, 0) == 1.0);
  // exp(-1.5625) and sqrt(e^2) exp(-1.5625), evaluated offline.
  CHECK(k.kappa(0, 1) == doctest::Approx(0.20961138715109781).epsilon(1e-14));
  CHECK(k.kernel(0, 1) == doctest::Approx(0.5697828247309229).epsilon(1e-14));
  CHECK(k.kernel(1, 1) == doctest::Approx(1.0 + 1e-5).epsilon(1e-14));
}

TEST_CASE("single image identical to text gives a scalar kernel") {
  const auto k = dpp::build_kernel(make_article({0, 1, 0}, {{0, 1, 0}}), {});
  CHECK(k.kernel.size() == 1);
  CHECK(k.kernel(0, 0) == doctest::Approx(7.38906609893065).epsilon(1e-14));
}

TEST_CASE("duplicate images give a rank-one kernel plus jitter") {
  const Vector e{0.6, 0.8};
  const auto k = dpp::build_kernel(make_article({1, 0}, {e, e}), {});
  CHECK(k.kappa(0, 1) == 1.0);
  const double q = k.quality[0];
  const auto eig = linalg::sym_eig(k.kernel);
  CHECK(eig.values[0] == doctest::Approx(2 * q + 1e-5).epsilon(1e-12));
  CHECK(eig.values[1] == doctest::Approx(1e-5).epsilon(1e-6));
}

TEST_CASE("kernel invariants on random articles") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(9);
    std::vector<Vector> imgs;
    for (std::size_t i = 0; i < n; ++i) imgs.push_back(testing::random_unit(12, rng));
    const auto k = dpp::build_kernel(make_article(testing::random_unit(12, rng), imgs), {});
    CHECK(linalg::is_psd(k.kernel, 1e-10));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(k.kappa(i, i) == 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(k.kappa(i, j) > 0.0);
        CHECK(k.kappa(i, j) <= 1.0);
        const double expect =
            std::sqrt(k.quality[i] * k.quality[j]) * k.kappa(i, j) + (i == j ? 1e-5 : 0.0);
        CHECK(std::fabs(k.kernel(i, j) - expect) <= 1e-12);
      }
    }
  }
}

TEST_CASE("trace of the marginal kernel") {
  linalg::EigenPair e{{1, 1}, Matrix::identity(2)};
  CHECK(dpp::trace_of_marginal(e, 1.0) == 1.0);
  CHECK(dpp::trace_of_marginal(e, 0.0) == 2.0);
  linalg::EigenPair f{{3, 1, 0.5}, Matrix::identity(3)};
  CHECK(dpp::trace_of_marginal(f, 2.0) == doctest::Approx(1.1333333333333333).epsilon(1e-15));
  CHECK_THROWS_AS(dpp::trace_of_marginal(f, -1.0), Error);
}

TEST_CASE("temperature calibration closed forms") {
  const auto i2 = linalg::sym_eig(SymMatrix(Matrix::identity(2)));
  CHECK(dpp::calibrate_temperature(i2, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
  const auto d4 = linalg::sym_eig(SymMatrix(Matrix(1, 1, {4.0})));
  const double t4 = dpp::calibrate_temperature(d4, 0.5);
  CHECK(std::fabs(dpp::trace_of_marginal(d4, t4) - 0.5) <= 1e-9);
  CHECK(t4 == doctest::Approx(4.0).epsilon(1e-7));
  CHECK(dpp::calibrate_temperature(i2, 2.0) == 0.0);

  // Duplicate pair with q = 1: the root is sqrt(eps (2 + eps)), found offline.
  const double eps = 1e-5;
  const auto dup = linalg::sym_eig(SymMatrix(Matrix(2, 2, {1 + eps, 1, 1, 1 + eps})));
  const double t = dpp::calibrate_temperature(dup, 1.0);
  CHECK(std::fabs(dpp::trace_of_marginal(dup, t) - 1.0) <= 1e-9);
  CHECK(t == doctest::Approx(0.0044721471353254974).epsilon(1e-6));
}

TEST_CASE("marginals on small closed forms") {
  const auto i2 = linalg::sym_eig(SymMatrix(Matrix::identity(2)));
  const auto pi = dpp::marginals(i2, 1.0);
  CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(dpp::brute_force_marginals(SymMatrix(Matrix::identity(2)), 1.0) == Vector{0.5, 0.5});
  const auto scalar = dpp::brute_force_marginals(SymMatrix(Matrix(1, 1, {2.5})), 0.7);
  CHECK(scalar[0] == doctest::Approx(2.5 / 3.2).epsilon(1e-15));
}

TEST_CASE("eigen marginals match enumeration") {
  Rng rng(99);
  for (std::size_t n : {5u, 6u}) {
    const auto l = testing::random_psd(n, rng);
    for (double t : {0.7, 1.0}) {
      const auto fast = dpp::marginals(linalg::sym_eig(l), t);
      CHECK(testing::max_abs_diff(fast, dpp::brute_force_marginals(l, t)) <= 1e-8);
      CHECK(testing::max_abs_diff(fast, testing::enumerate_marginals(l, t)) <= 1e-8);
    }
  }
}

TEST_CASE("enumeration refuses oversized kernels") {
  try {
    dpp::brute_force_marginals(SymMatrix(Matrix::identity(16)), 1.0);
    FAIL("expected a size error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OracleTooLarge);
  }
}

TEST_CASE("labelling applies the clamp and symmetry") {
  dpp::TeacherParams p;
  const auto one = dpp::label_article(make_article({1, 0}, {{1, 0}}), p);
  CHECK(one.t_star == 0.0);
  CHECK(one.pi == Vector{1.0});

  p.mu = 1.0;
  const double r = std::sqrt(0.5);
  const auto two = dpp::label_article(make_article({r, r}, {{1, 0}, {0, 1}}), p);
  CHECK(two.pi[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(two.pi[1] == doctest::Approx(0.5).epsilon(1e-9));

  const Vector e1{1, 0, 0}, e2{0, 1, 0};
  const Vector text{r, 0, r};
  p.mu = 1.5;
  const auto dup = dpp::label_article(make_article(text, {e1, e1, Vector{0, 0, 1}}), p);
  CHECK(dup.pi[2] > dup.pi[0]);
  CHECK(dup.pi[2] > dup.pi[1]);
  CHECK(std::fabs(sum(dup.pi) - 1.5) <= 1e-6);
  (void)e2;
}

TEST_CASE("labels sum to the target on random articles") {
  Rng rng(4);
  dpp::TeacherParams p;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(9);
    std::vector<Vector> imgs;
    for (std::size_t i = 0; i < n; ++i) imgs.push_back(testing::random_unit(8, rng));
    const auto lab = dpp::label_article(make_article(testing::random_unit(8, rng), imgs), p);
    CHECK(std::fabs(sum(lab.pi) - std::fmin(p.mu, static_cast<double>(n))) <= 1e-6);
    for (double x : lab.pi) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
}

TEST_CASE("greedy MAP selection") {
  const SymMatrix d(Matrix(3, 3, {3, 0, 0, 0, 2, 0, 0, 0, 1}));
  CHECK(dpp::greedy_map_select(d, 2) == std::vector<std::size_t>{0, 1});
  CHECK(dpp::greedy_map_select(d, 5) == std::vector<std::size_t>{0, 1, 2});

  const double eps = 1e-5;
  const SymMatrix dup(Matrix(3, 3, {1 + eps, 1, 0.2, 1, 1 + eps, 0.2, 0.2, 0.2, 1 + eps}));
  const auto pick = dpp::greedy_map_select(dup, 2);
  REQUIRE(pick.size() == 2);
  CHECK(pick[0] <= 1);
  CHECK(pick[1] == 2);
}
