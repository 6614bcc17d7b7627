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

#ifndef MMSEL_CORE_ARTICLE_HPP
#define MMSEL_CORE_ARTICLE_HPP

#include <optional>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace mmsel {

struct ImageRecord {
  std::string id;
  Vector embedding;
  std::optional<bool> gold;
};

/// One document: its text embedding and candidate images. Embeddings are
/// expected to be unit length; see normalize_article.
struct ArticleRecord {
  std::string id;
  Vector text_embedding;
  std::vector<ImageRecord> images;

  std::size_t dim() const noexcept { return text_embedding.size(); }
};

inline constexpr double kUnitNormTol = 1e-6;

/// Rescales every embedding to unit length. Throws InvalidInput on a zero
/// or non-finite vector.
void normalize_article(ArticleRecord& article);

/// Throws InvalidInput unless the article has at least one image, all
/// embeddings share one dimension, and all are unit norm within 1e-6.
void validate_article(const ArticleRecord& article);

/// Throws InvalidInput if `v` is empty, non-finite or zero; otherwise
/// returns v / ||v||.
Vector normalized(std::span<const double> v);

}  // namespace mmsel

#endif  // MMSEL_CORE_ARTICLE_HPP
