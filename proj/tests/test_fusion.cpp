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
#include "core/fusion.hpp"
#include "core/persist.hpp"
#include "support.hpp"

using namespace mmsel;
using namespace mmsel::fusion;

namespace {

// A straightforward re-implementation on nested vectors, used as a second
// path for the forward passes.
using Rows = std::vector<Vector>;

Rows rows_of(const Matrix& m) {
  Rows r(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) r[i].assign(m.row(i).begin(), m.row(i).end());
  return r;
}

Rows affine(const Rows& x, const Matrix& w, const Vector* b = nullptr) {
  Rows y(x.size(), Vector(w.rows(), 0.0));
  for (std::size_t t = 0; t < x.size(); ++t)
    for (std::size_t o = 0; o < w.rows(); ++o) {
      double s = b ? (*b)[o] : 0.0;
      for (std::size_t i = 0; i < w.cols(); ++i) s += w(o, i) * x[t][i];
      y[t][o] = s;
    }
  return y;
}

Rows ln(const Rows& x) {
  Rows y = x;
  for (auto& r : y) {
    double m = 0.0;
    for (double v : r) m += v;
    m /= static_cast<double>(r.size());
    double var = 0.0;
    for (double v : r) var += (v - m) * (v - m);
    var /= static_cast<double>(r.size());
    for (double& v : r) v = (v - m) / std::sqrt(var + 1e-5);
  }
  return y;
}

Rows sdpa(const Rows& q, const Rows& k, const Rows& v, std::size_t heads, bool causal) {
  const std::size_t width = q[0].size(), dk = width / heads;
  Rows out(q.size(), Vector(width, 0.0));
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < q.size(); ++i) {
      const std::size_t nk = causal ? i + 1 : k.size();
      Vector w(nk);
      double mx = -1e300;
      for (std::size_t j = 0; j < nk; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dk; ++c) s += q[i][h * dk + c] * k[j][h * dk + c];
        w[j] = s / std::sqrt(static_cast<double>(dk));
        mx = std::fmax(mx, w[j]);
      }
      double z = 0.0;
      for (double& x : w) z += (x = std::exp(x - mx));
      for (std::size_t j = 0; j < nk; ++j)
        for (std::size_t c = 0; c < dk; ++c) out[i][h * dk + c] += w[j] / z * v[j][h * dk + c];
    }
  return out;
}

void add(Rows& a, const Rows& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
}

void block(Rows& x, const TransformerBlock& b, std::size_t heads, bool causal) {
  const Rows n = ln(x);
  Rows a = sdpa(affine(n, b.attn.wq), affine(n, b.attn.wk), affine(n, b.attn.wv), heads, causal);
  if (!b.attn.wo.empty()) a = affine(a, b.attn.wo);
  add(x, a);
  Rows hid = affine(ln(x), b.mlp.w1, &b.mlp.b1);
  for (auto& r : hid)
    for (double& v : r) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
  add(x, affine(hid, b.mlp.w2, &b.mlp.b2));
}

Rows reference_fused(Rows h, const std::vector<Matrix>& visuals, const FusionStack& s) {
  for (std::size_t l = 1; l <= s.config.dvp_layers; ++l) {
    if (s.config.inject_layers.count(l)) {
      const auto& g = s.xattn.at(l);
      const Rows v = rows_of(visuals[l - 1]);
      Rows x = sdpa(affine(h, g.wq), affine(v, g.wk), affine(v, g.wv), s.config.n_heads, false);
      const double gate = std::tanh(g.alpha);
      for (std::size_t i = 0; i < h.size(); ++i)
        for (std::size_t j = 0; j < h[i].size(); ++j) h[i][j] += gate * x[i][j];
    }
    block(h, s.decoder[l - 1], s.config.n_heads, true);
  }
  return h;
}

double max_diff(const Matrix& m, const Rows& r) {
  double d = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d = std::fmax(d, std::fabs(m(i, j) - r[i][j]));
  return d;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

FusionConfig tiny() {
  FusionConfig c;
  c.d_v = 3;
  c.d = 4;
  c.n_latents = 2;
  c.sampler_depth = 1;
  c.ff_mult = 2;
  c.dvp_layers = 2;
  c.inject_layers = {2};
  c.n_heads = 2;
  return c;
}

std::vector<Matrix> visuals_for(const FusionStack& s, Rng& rng) {
  return dvp_forward(random_matrix(s.config.n_latents, s.config.d, rng), s);
}

}  // namespace

TEST_CASE("configuration validation") {
  FusionConfig c = tiny();
  CHECK_NOTHROW(c.validate());
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny();
  c.inject_layers = {3};
  CHECK_THROWS_AS(c.validate(), Error);
  const auto s = FusionStack::random(tiny(), 1);
  CHECK_NOTHROW(s.validate());
  for (const auto& [layer, g] : s.xattn) CHECK(g.alpha == 0.0);
}

TEST_CASE("projection") {
  Matrix pad(4, 3);
  for (std::size_t i = 0; i < 3; ++i) pad(i, i) = 1.0;
  const Matrix e1(1, 3, {1, 0, 0});
  CHECK(project(e1, pad) == Matrix(1, 4, {1, 0, 0, 0}));
  CHECK(project(e1, Matrix(4, 3)) == Matrix(1, 4));
  Rng rng(2);
  const Matrix x = random_matrix(5, 3, rng), w = random_matrix(4, 3, rng);
  CHECK(max_diff(project(x, w), affine(rows_of(x), w)) <= 1e-14);
  CHECK_THROWS_AS(project(Matrix(1, 2), w), Error);
}

TEST_CASE("attention maps are causal distributions") {
  Rng rng(3);
  const Matrix x = random_matrix(5, 8, rng);
  const AttentionWeights w{random_matrix(8, 8, rng), random_matrix(8, 8, rng),
                           random_matrix(8, 8, rng), {}};
  const auto r = attend(x, x, w, 2, true);
  REQUIRE(r.maps.size() == 2);
  for (const auto& m : r.maps)
    for (std::size_t i = 0; i < 5; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        s += m(i, j);
        if (j > i) CHECK(m(i, j) == 0.0);
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
  const Rows ref = sdpa(affine(rows_of(x), w.wq), affine(rows_of(x), w.wk), affine(rows_of(x), w.wv), 2, true);
  CHECK(max_diff(r.output, ref) <= 1e-12);
}

TEST_CASE("perceiver output shape is independent of the patch count") {
  const FusionConfig c = tiny();
  const auto s = FusionStack::random(c, 4);
  Rng rng(5);
  for (std::size_t tv : {1u, 7u, 700u}) {
    const Matrix out = perceiver_sample(random_matrix(tv, c.d_v, rng), sinusoidal_positions(tv, c.d_v), s);
    CHECK(out.rows() == c.n_latents);
    CHECK(out.cols() == c.d);
  }
  CHECK_THROWS_AS(perceiver_sample(Matrix(2, 3), Matrix(3, 3), s), Error);
}

TEST_CASE("zero sampler weights return the initial latents") {
  FusionStack s = FusionStack::zeros(tiny());
  Rng rng(6);
  s.latents = random_matrix(2, 4, rng);
  s.projector = random_matrix(4, 3, rng);
  CHECK(perceiver_sample(random_matrix(9, 3, rng), sinusoidal_positions(9, 3), s) == s.latents);
}

TEST_CASE("single latent over two patches matches a hand softmax") {
  FusionConfig c = tiny();
  c.n_latents = 1;
  c.n_heads = 1;
  FusionStack s = FusionStack::zeros(c);
  Rng rng(7);
  s.latents = random_matrix(1, 4, rng);
  s.projector = random_matrix(4, 3, rng);
  auto& cross = s.sampler[0].cross;
  cross.wq = random_matrix(4, 4, rng);
  cross.wk = random_matrix(4, 4, rng);
  cross.wv = random_matrix(4, 4, rng);
  cross.wo = Matrix::identity(4);
  const Matrix patches = random_matrix(2, 3, rng);
  const Matrix pos = sinusoidal_positions(2, 3);

  Rows with_pos = rows_of(patches);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t j = 0; j < 3; ++j) with_pos[t][j] += pos(t, j);
  const Rows ctx = ln(affine(with_pos, s.projector));
  const Vector q = affine(ln(rows_of(s.latents)), cross.wq)[0];
  const Rows k = affine(ctx, cross.wk), v = affine(ctx, cross.wv);
  const double a0 = dot(q, k[0]) / 2.0, a1 = dot(q, k[1]) / 2.0;  // sqrt(d_k) = 2
  const double p0 = 1.0 / (1.0 + std::exp(a1 - a0)), p1 = 1.0 - p0;
  Vector expect = s.latents.storage();
  for (std::size_t j = 0; j < 4; ++j) expect[j] += p0 * v[0][j] + p1 * v[1][j];

  const Matrix out = perceiver_sample(patches, pos, s);
  CHECK(testing::max_abs_diff(out.storage(), expect) <= 1e-12);
}

TEST_CASE("visual processor") {
  FusionConfig c = tiny();
  c.dvp_layers = 24;
  c.inject_layers = {8, 16, 24};
  Rng rng(8);
  const Matrix lat = random_matrix(2, 4, rng);
  const auto zero_states = dvp_forward(lat, FusionStack::zeros(c));
  CHECK(zero_states.size() == 24);
  for (const auto& st : zero_states) CHECK(st == lat);

  FusionConfig one;
  one.d_v = 2;
  one.d = 2;
  one.n_latents = 2;
  one.sampler_depth = 1;
  one.ff_mult = 1;
  one.dvp_layers = 1;
  one.inject_layers = {1};
  one.n_heads = 1;
  const auto s = FusionStack::random(one, 9);
  const Matrix x(2, 2, {0.3, -0.2, 1.1, 0.4});
  Rows ref = rows_of(x);
  block(ref, s.dvp[0], 1, false);
  CHECK(max_diff(dvp_forward(x, s)[0], ref) <= 1e-14);
}

TEST_CASE("gated cross-attention") {
  Rng rng(10);
  const Matrix h = random_matrix(3, 4, rng), v = random_matrix(2, 4, rng);
  GatedCrossAttention g{random_matrix(4, 4, rng), random_matrix(4, 4, rng), random_matrix(4, 4, rng), 0.0};
  CHECK(gated_xattn(h, v, g, 2) == h);

  g.alpha = 20.0;
  const Matrix x = cross_attention(h, v, g, 2);
  Matrix sum = h;
  for (std::size_t i = 0; i < sum.data().size(); ++i) sum.data()[i] += x.data()[i];
  CHECK(testing::max_abs_diff(gated_xattn(h, v, g, 2), sum) <= 1e-8);

  const Matrix one_key = random_matrix(1, 4, rng);
  const Matrix single = cross_attention(random_matrix(1, 4, rng), one_key, g, 1);
  CHECK(max_diff(single, affine(rows_of(one_key), g.wv)) <= 1e-14);
}

TEST_CASE("closed gates reproduce the text-only stack exactly") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = FusionStack::random(tiny(), seed);
    Rng rng(seed);
    const Matrix text = random_matrix(3, 4, rng);
    CHECK(fused_stack_forward(text, visuals_for(s, rng), s) == text_only_forward(text, s));
  }
  FusionConfig none = tiny();
  none.inject_layers = {};
  const auto s = FusionStack::random(none, 3);
  Rng rng(3);
  const Matrix text = random_matrix(3, 4, rng);
  CHECK(fused_stack_forward(text, {}, s) == text_only_forward(text, s));
}

TEST_CASE("open gates match a step-by-step trace") {
  auto s = FusionStack::random(tiny(), 11);
  s.xattn.at(2).alpha = 0.7;
  Rng rng(12);
  const Matrix text = random_matrix(3, 4, rng);
  const auto vis = visuals_for(s, rng);
  const Matrix out = fused_stack_forward(text, vis, s);
  CHECK(max_diff(out, reference_fused(rows_of(text), vis, s)) <= 1e-12);
  CHECK(out != text_only_forward(text, s));
  CHECK_THROWS_AS(fused_stack_forward(text, {}, s), Error);
}

TEST_CASE("decoder is causal") {
  auto s = FusionStack::random(tiny(), 13);
  s.xattn.at(2).alpha = 0.5;
  Rng rng(14);
  Matrix text = random_matrix(3, 4, rng);
  const auto vis = visuals_for(s, rng);
  const Matrix before = fused_stack_forward(text, vis, s);
  for (std::size_t j = 0; j < 4; ++j) text(2, j) += 1.0;
  const Matrix after = fused_stack_forward(text, vis, s);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(before(i, j) == after(i, j));
}

TEST_CASE("forward-mode gate derivative matches finite differences") {
  Rng rng(15);
  for (double alpha : {0.0, 0.4, -1.2}) {
    auto s = FusionStack::random(tiny(), 16);
    s.xattn.at(2).alpha = alpha;
    const Matrix text = random_matrix(3, 4, rng), readout = random_matrix(3, 4, rng);
    const auto vis = visuals_for(s, rng);
    auto objective = [&](double a) {
      auto t = s;
      t.xattn.at(2).alpha = a;
      const Matrix out = fused_stack_forward(text, vis, t);
      return dot(out.data(), readout.data());
    };
    const double fd = (objective(alpha + 1e-6) - objective(alpha - 1e-6)) / 2e-6;
    const double ad = gate_directional_derivative(text, vis, s, 2, readout);
    CHECK(ad == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("fusion weights round-trip through the array file") {
  auto s = FusionStack::random(tiny(), 17);
  s.xattn.at(2).alpha = 0.25;
  const auto back = from_array_file(persist::parse(persist::serialize(to_array_file(s))));
  CHECK(back.projector == s.projector);
  CHECK(back.latents == s.latents);
  CHECK(back.xattn.at(2).alpha == 0.25);
  CHECK(back.decoder[1].mlp.w2 == s.decoder[1].mlp.w2);
  CHECK(back.sampler[0].cross.wo == s.sampler[0].cross.wo);
  CHECK(back.config.inject_layers == s.config.inject_layers);
}
