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

#ifndef MMSEL_CORE_GRADCHECK_HPP
#define MMSEL_CORE_GRADCHECK_HPP

#include <cmath>
#include <span>

#include "matrix.hpp"

namespace mmsel::gradcheck {

inline constexpr double kStep = 1e-5;

/// Central differences of a scalar function of a vector.
template <typename F>
Vector central_difference(F&& f, Vector x, double h = kStep) {
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - n|| / max(||a|| + ||n||, 1e-12). Zero when both vanish.
inline double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double dlt = analytic[i] - numeric[i];
    diff += dlt * dlt;
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double scale = std::sqrt(na) + std::sqrt(nn);
  if (scale == 0.0) return 0.0;
  return std::sqrt(diff) / std::fmax(scale, 1e-12);
}

}  // namespace mmsel::gradcheck

#endif  // MMSEL_CORE_GRADCHECK_HPP
