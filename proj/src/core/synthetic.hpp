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

#ifndef MMSEL_CORE_SYNTHETIC_HPP
#define MMSEL_CORE_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "article.hpp"
#include "rng.hpp"

namespace mmsel::synthetic {

struct DistillableSpec {
  std::size_t n_articles = 200;
  std::size_t images_per_article = 5;
  std::size_t dim = 16;
  double mu = 3.0;
  double slope = 4.0;  // pi_i = sigmoid(slope <w, v_i>)
  std::uint64_t seed = 1;
};

struct DistillableCorpus {
  std::vector<ArticleRecord> articles;
  std::vector<Vector> pi;  // per article, sums to mu
  Vector direction;        // hidden unit vector w
};

/// Articles whose target marginals are a fixed logistic function of a
/// linear score of each image embedding, so a per-image scorer can match
/// them exactly. Each article's images share a shift along w chosen so
/// that its targets sum to mu. Gold flags mark pi > 0.5.
DistillableCorpus distillable_corpus(const DistillableSpec& spec);

/// Uniformly random unit vector.
Vector random_unit(std::size_t dim, Rng& rng);

}  // namespace mmsel::synthetic

#endif  // MMSEL_CORE_SYNTHETIC_HPP
