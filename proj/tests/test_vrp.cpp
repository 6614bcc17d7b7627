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

#include "core/errors.hpp"
#include "core/gradcheck.hpp"
#include "core/synthetic.hpp"
#include "core/vrp_student.hpp"
#include "support.hpp"

using namespace mmsel;
using namespace mmsel::vrp;

namespace {

/// Flattens every parameter in the order w1, b1, w2, b2.
Vector flatten(const StudentModel& m) {
  Vector p(m.w1.storage());
  p.insert(p.end(), m.b1.begin(), m.b1.end());
  p.insert(p.end(), m.w2.begin(), m.w2.end());
  p.push_back(m.b2);
  return p;
}

StudentModel unflatten(StudentModel m, const Vector& p) {
  std::size_t k = 0;
  for (double& x : m.w1.data()) x = p[k++];
  for (double& x : m.b1) x = p[k++];
  for (double& x : m.w2) x = p[k++];
  m.b2 = p[k];
  return m;
}

Vector flatten(const StudentGradients& g) {
  Vector p(g.w1.storage());
  p.insert(p.end(), g.b1.begin(), g.b1.end());
  p.insert(p.end(), g.w2.begin(), g.w2.end());
  p.push_back(g.b2);
  return p;
}

std::vector<TrainingExample> random_batch(std::size_t articles, std::size_t dim, Rng& rng) {
  std::vector<TrainingExample> out;
  for (std::size_t a = 0; a < articles; ++a) {
    const std::size_t k = 1 + rng.below(5);
    TrainingExample ex{Matrix(k, dim), Vector(k)};
    for (std::size_t i = 0; i < k; ++i) {
      const auto v = testing::random_unit(dim, rng);
      std::copy(v.begin(), v.end(), ex.embeddings.row(i).begin());
      ex.pi[i] = rng.uniform();
    }
    out.push_back(std::move(ex));
  }
  return out;
}

/// Independent evaluation of w2 . gelu(W1 v + b1) + b2.
double reference_logit(const StudentModel& m, const Vector& v) {
  double z = m.b2;
  for (std::size_t h = 0; h < m.hidden_dim; ++h) {
    double a = m.b1[h];
    for (std::size_t i = 0; i < v.size(); ++i) a += m.w1(h, i) * v[i];
    z += m.w2[h] * 0.5 * a * (1.0 + std::erf(a / std::sqrt(2.0)));
  }
  return z;
}

/// One-hot images whose student probabilities are exactly `p`.
std::pair<StudentModel, ArticleRecord> scripted(const Vector& p) {
  const std::size_t n = p.size();
  StudentModel m = StudentModel::zeros(n, n);
  ArticleRecord a{"s", Vector(n, 1.0 / std::sqrt(static_cast<double>(n))), {}};
  for (std::size_t i = 0; i < n; ++i) {
    m.w1(i, i) = 10.0;  // gelu(10) == 10 in double precision
    m.w2[i] = std::log(p[i] / (1.0 - p[i])) / 10.0;
    Vector e(n, 0.0);
    e[i] = 1.0;
    a.images.push_back(ImageRecord{"img" + std::to_string(i), e, std::nullopt});
  }
  return {m, a};
}

}  // namespace

TEST_CASE("activations") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) == 0.0);
  for (double x : {-3.0, -0.4, 0.0, 0.9, 2.5}) {
    const double fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
    CHECK(gelu_derivative(x) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("forward pass") {
  Rng rng(1);
  const Vector v = testing::random_unit(6, rng);
  CHECK(student_logit(StudentModel::zeros(6, 4), v) == 0.0);

  StudentModel id = StudentModel::zeros(3, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    id.w1(i, i) = 1.0;
    id.w2[i] = 1.0;
  }
  CHECK(student_logit(id, Vector{0, 0, 0}) == 0.0);

  const auto m = StudentModel::initialize(6, 16, 0.1, 3);
  CHECK(student_logit(m, v) == doctest::Approx(reference_logit(m, v)).epsilon(1e-13));
  Rng r1(5);
  CHECK(student_forward(m, v, false, r1) == student_logit(m, v));
  CHECK_THROWS_AS(student_logit(m, Vector{1, 0}), Error);
}

TEST_CASE("dropout is active only in training mode and is seeded") {
  const auto m = StudentModel::initialize(4, 64, 0.5, 9);
  const Vector v{0.5, 0.5, 0.5, 0.5};
  Rng a(3), b(3);
  const double za = student_forward(m, v, true, a);
  CHECK(za == student_forward(m, v, true, b));
  CHECK(za != student_logit(m, v));
}

TEST_CASE("loss closed forms") {
  const auto r = vrp_loss(Vector{0, 0}, Vector{0.5, 0.5}, 1.0, 0.3);
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(r.dloss_dz == Vector{0.0, 0.0});
  const auto s = vrp_loss(Vector{0}, Vector{1}, 1.0, 0.0);
  CHECK(s.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(s.dloss_dz[0] == -0.5);
  CHECK_THROWS_AS(vrp_loss(Vector{0}, Vector{1, 0}, 1.0, 0.3), Error);
}

TEST_CASE("loss gradient matches finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.below(8);
    Vector z(k), pi(k);
    for (std::size_t i = 0; i < k; ++i) {
      z[i] = rng.uniform(-4, 4);
      pi[i] = rng.uniform();
    }
    const auto analytic = vrp_loss(z, pi, 3.0, 0.3).dloss_dz;
    const auto numeric = gradcheck::central_difference(
        [&](const Vector& x) { return vrp_loss(x, pi, 3.0, 0.3).loss; }, z);
    CHECK(gradcheck::relative_error(analytic, numeric) <= 1e-6);
  }
}

TEST_CASE("backprop matches finite differences with dropout off") {
  Rng rng(23);
  TrainConfig cfg;
  cfg.dropout = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = StudentModel::initialize(5, 7, 0.0, 100 + trial);
    const auto batch = random_batch(3, 5, rng);
    Rng unused(0);
    const auto g = backprop_student(model, batch, cfg, false, unused);
    const auto numeric = gradcheck::central_difference(
        [&](const Vector& p) { return dataset_loss(unflatten(model, p), batch, cfg.mu, cfg.alpha); },
        flatten(model));
    CHECK(gradcheck::relative_error(flatten(g), numeric) <= 1e-4);
    CHECK(g.loss == doctest::Approx(dataset_loss(model, batch, cfg.mu, cfg.alpha)).epsilon(1e-12));
  }
}

TEST_CASE("zero weights leave the output-weight gradient zero") {
  const auto model = StudentModel::zeros(4, 6);
  Rng rng(2);
  const auto batch = random_batch(2, 4, rng);
  Rng unused(0);
  const auto g = backprop_student(model, batch, TrainConfig{}, false, unused);
  for (double x : g.w2) CHECK(x == 0.0);
  for (double x : g.w1.data()) CHECK(x == 0.0);
}

TEST_CASE("single-image cardinality gradient follows the chain rule") {
  const auto model = StudentModel::initialize(3, 4, 0.0, 8);
  const Vector v{0.6, 0.0, 0.8};
  TrainingExample ex{Matrix(1, 3, v), Vector{0.25}};
  TrainConfig cfg;
  cfg.alpha = 0.3;
  cfg.mu = 3.0;
  Rng unused(0);
  const auto g = backprop_student(model, std::span<const TrainingExample>(&ex, 1), cfg, false, unused);
  const double z = student_logit(model, v);
  const double s = sigmoid(z);
  // dz/db2 == 1
  CHECK(g.b2 == doctest::Approx((s - 0.25) + 2 * 0.3 * (s - 3.0) * s * (1 - s)).epsilon(1e-13));
}

TEST_CASE("training is deterministic and a zero learning rate is a no-op") {
  synthetic::DistillableSpec spec;
  spec.n_articles = 20;
  const auto corpus = synthetic::distillable_corpus(spec);
  std::vector<TrainingExample> data;
  for (std::size_t a = 0; a < corpus.articles.size(); ++a)
    data.push_back(make_example(corpus.articles[a], corpus.pi[a]));

  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.hidden_dim = 16;
  cfg.seed = 42;
  const auto a = train_student(data, cfg);
  const auto b = train_student(data, cfg);
  CHECK(a.model == b.model);
  CHECK(a.loss_curve == b.loss_curve);

  cfg.learning_rate = 0.0;
  const auto frozen = train_student(data, cfg);
  CHECK(frozen.model == StudentModel::initialize(spec.dim, 16, cfg.dropout, 42));

  cfg.epochs = 0;
  CHECK_THROWS_AS(train_student(data, cfg), Error);
}

TEST_CASE("more epochs do not raise the training loss") {
  synthetic::DistillableSpec spec;
  spec.n_articles = 40;
  const auto corpus = synthetic::distillable_corpus(spec);
  std::vector<TrainingExample> data;
  for (std::size_t a = 0; a < corpus.articles.size(); ++a)
    data.push_back(make_example(corpus.articles[a], corpus.pi[a]));
  TrainConfig cfg;
  cfg.hidden_dim = 32;
  cfg.epochs = 1;
  const double one = train_student(data, cfg).loss_curve.back();
  cfg.epochs = 2;
  const double two = train_student(data, cfg).loss_curve.back();
  CHECK(two <= one);
}

TEST_CASE("selection rules") {
  {
    auto [m, a] = scripted({0.9, 0.2, 0.8});
    const auto r = select_images(m, a, SelectionRule::TopK, 2, 0.5);
    CHECK(r.indices == std::vector<std::size_t>{0, 2});
    CHECK(r.image_ids == std::vector<std::string>{"img0", "img2"});
    CHECK(r.probabilities[1] == doctest::Approx(0.2).epsilon(1e-12));
  }
  {
    auto [m, a] = scripted({0.4, 0.4});
    CHECK(select_images(m, a, SelectionRule::Threshold, 3, 0.5).indices.empty());
  }
  {
    auto [m, a] = scripted({0.3, 0.6, 0.5, 0.9, 0.1});
    const auto r = select_images(m, a, SelectionRule::TopK, 3, 0.5);
    CHECK(r.image_ids.size() == 3);
    CHECK(r.indices == std::vector<std::size_t>{3, 1, 2});
  }
}

TEST_CASE("student files round-trip exactly") {
  const auto m = StudentModel::initialize(5, 9, 0.1, 0xfedcba9876543210ull);
  const auto back = from_array_file(persist::parse(persist::serialize(to_array_file(m))));
  CHECK(back == m);
}
