//  Copyright (c) 2026 The mvattn Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvattn/attention.hpp"
#include "mvattn/error.hpp"

namespace mvattn::attention::reference {
namespace {

std::vector<double> project(const std::vector<double>& x, std::size_t tokens, std::size_t c,
                            const std::vector<float>& w) {
  std::vector<double> y(tokens * c, 0.0);
  for (std::size_t t = 0; t < tokens; ++t)
    for (std::size_t j = 0; j < c; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < c; ++i) acc += x[t * c + i] * static_cast<double>(w[i * c + j]);
      y[t * c + j] = acc;
    }
  return y;
}

}  // namespace

std::vector<double> dense_multiview_attention(const FeatureGrid& grid, const ProjectionWeights& w,
                                              const AttentionConfig& cfg, const Allow& allow) {
  const std::size_t t = grid.tokens();
  const std::size_t c = grid.channels();
  cfg.validate(c);
  if (w.channels != c) throw InvalidArgument("projection weights do not match the grid channels");

  const std::vector<double> x(grid.data().begin(), grid.data().end());
  const auto q = project(x, t, c, w.w_q);
  const auto k = project(x, t, c, w.w_k);
  const auto v = project(x, t, c, w.w_v);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim));

  std::vector<double> mixed(t * c, 0.0);
  std::vector<double> logits(t);
  for (std::size_t h = 0; h < cfg.head_count; ++h) {
    const std::size_t off = h * cfg.head_dim;
    for (std::size_t i = 0; i < t; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < t; ++j) {
        if (allow && !allow(i, j)) {
          logits[j] = -std::numeric_limits<double>::infinity();
          continue;
        }
        double s = 0.0;
        for (std::size_t d = 0; d < cfg.head_dim; ++d) s += q[i * c + off + d] * k[j * c + off + d];
        logits[j] = s * scale;
        mx = std::max(mx, logits[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < t; ++j) {
        logits[j] = std::isinf(logits[j]) ? 0.0 : std::exp(logits[j] - mx);
        z += logits[j];
      }
      for (std::size_t j = 0; j < t; ++j) {
        const double p = logits[j] / z;
        if (p == 0.0) continue;
        for (std::size_t d = 0; d < cfg.head_dim; ++d) mixed[i * c + off + d] += p * v[j * c + off + d];
      }
    }
  }
  return project(mixed, t, c, w.w_out);
}

Allow same_row(std::size_t size) {
  return [size](std::size_t query, std::size_t key) { return (query / size) % size == (key / size) % size; };
}

}  // namespace mvattn::attention::reference
