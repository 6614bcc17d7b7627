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

#include "synthetic.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"
#include "rng.hpp"
#include "vrp_student.hpp"

namespace mmsel::synthetic {

Vector random_unit(std::size_t dim, Rng& rng) {
  Vector v(dim);
  double n = 0.0;
  while (n < 1e-8) {
    for (double& x : v) x = rng.normal();
    n = norm2(v);
  }
  for (double& x : v) x /= n;
  return v;
}

namespace {

Vector shifted(const Vector& g, const Vector& w, double c) {
  Vector v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = g[i] + c * w[i];
  return normalized(v);
}

}  // namespace

DistillableCorpus distillable_corpus(const DistillableSpec& spec) {
  if (spec.images_per_article < 1 || spec.dim < 2 || spec.n_articles < 1)
    fail(ErrorKind::InvalidInput, "synthetic corpus dimensions must be positive");
  if (!(spec.mu > 0.0 && spec.mu < static_cast<double>(spec.images_per_article)))
    fail(ErrorKind::InvalidInput, "synthetic mu must lie strictly between 0 and the pool size");

  Rng rng(spec.seed);
  DistillableCorpus out;
  out.direction = random_unit(spec.dim, rng);
  const Vector& w = out.direction;

  for (std::size_t a = 0; a < spec.n_articles; ++a) {
    std::vector<Vector> base;
    for (std::size_t i = 0; i < spec.images_per_article; ++i) base.push_back(random_unit(spec.dim, rng));

    auto total = [&](double c) {
      double s = 0.0;
      for (const auto& g : base) s += vrp::sigmoid(spec.slope * dot(w, shifted(g, w, c)));
      return s;
    };
    // The sum is increasing in the shift; bracket wide enough for any slope.
    double lo = -1e3, hi = 1e3;
    for (int step = 0; step < 200 && hi - lo > 1e-13; ++step) {
      const double mid = 0.5 * (lo + hi);
      (total(mid) < spec.mu ? lo : hi) = mid;
    }
    const double c = 0.5 * (lo + hi);

    ArticleRecord article;
    article.id = "a" + std::to_string(a);
    article.text_embedding = w;
    Vector pi;
    for (std::size_t i = 0; i < base.size(); ++i) {
      Vector v = shifted(base[i], w, c);
      const double p = vrp::sigmoid(spec.slope * dot(w, v));
      pi.push_back(p);
      article.images.push_back(
          ImageRecord{article.id + "_i" + std::to_string(i), std::move(v), p > 0.5});
    }
    out.articles.push_back(std::move(article));
    out.pi.push_back(std::move(pi));
  }
  return out;
}

}  // namespace mmsel::synthetic
