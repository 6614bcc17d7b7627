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

#include "article.hpp"

#include <cmath>

#include "errors.hpp"

namespace mmsel {

Vector normalized(std::span<const double> v) {
  if (v.empty()) fail(ErrorKind::InvalidInput, "empty embedding");
  for (double x : v)
    if (!std::isfinite(x)) fail(ErrorKind::InvalidInput, "non-finite embedding entry");
  const double n = norm2(v);
  if (n == 0.0) fail(ErrorKind::InvalidInput, "zero embedding cannot be normalized");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

void normalize_article(ArticleRecord& article) {
  article.text_embedding = normalized(article.text_embedding);
  for (auto& image : article.images) image.embedding = normalized(image.embedding);
}

void validate_article(const ArticleRecord& article) {
  if (article.images.empty())
    fail(ErrorKind::InvalidInput, "article '" + article.id + "' has no images");
  const std::size_t d = article.dim();
  auto check = [&](const Vector& e, const std::string& what) {
    if (e.size() != d || d == 0)
      fail(ErrorKind::InvalidInput, "article '" + article.id + "': " + what +
                                        " has dimension " + std::to_string(e.size()) +
                                        ", expected " + std::to_string(d));
    if (std::fabs(norm2(e) - 1.0) > kUnitNormTol)
      fail(ErrorKind::InvalidInput, "article '" + article.id + "': " + what +
                                        " is not unit norm");
  };
  check(article.text_embedding, "text embedding");
  for (const auto& image : article.images) check(image.embedding, "image '" + image.id + "'");
}

}  // namespace mmsel
