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
#include <cstring>
#include <limits>

#include "internal.hpp"
#include "mvattn/error.hpp"

namespace mvattn::attention {
namespace {

// Query rows processed per block in the dense variant; bounds the score
// buffer to kQueryBlock * T floats instead of T * T.
constexpr std::size_t kQueryBlock = 32;

void check_operands(const FeatureGrid& q, const FeatureGrid& k, const FeatureGrid& v, const AttentionConfig& cfg) {
  if (!q.same_shape(k) || !q.same_shape(v)) throw InvalidArgument("Q, K and V grids must share a shape");
  if (q.tokens() == 0) throw InvalidArgument("empty feature grid");
  cfg.validate(q.channels());
}

struct Projected {
  FeatureGrid q, k, v;
};

Projected project_qkv(const FeatureGrid& grid, const ProjectionWeights& w, const AttentionConfig& cfg) {
  grid.validate();
  if (w.channels != grid.channels()) throw InvalidArgument("projection weights do not match the grid channels");
  w.validate();
  cfg.validate(grid.channels());
  return {project_tokens(grid, w.w_q), project_tokens(grid, w.w_k), project_tokens(grid, w.w_v)};
}

FeatureGrid finish(const FeatureGrid& attended, const ProjectionWeights& w, const char* what) {
  FeatureGrid out = project_tokens(attended, w.w_out);
  detail::require_finite(out, what);
  return out;
}

}  // namespace

Matrix same_row_mask(std::size_t views, std::size_t size) {
  const std::size_t t = views * size * size;
  Matrix mask(t, t, -std::numeric_limits<float>::infinity());
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t row_i = (i / size) % size;
    for (std::size_t j = 0; j < t; ++j)
      if ((j / size) % size == row_i) mask(i, j) = 0.0f;
  }
  return mask;
}

FeatureGrid dense_core(const FeatureGrid& q, const FeatureGrid& k, const FeatureGrid& v, const AttentionConfig& cfg,
                       const Matrix* mask) {
  check_operands(q, k, v, cfg);
  const std::size_t t = q.tokens();
  const std::size_t c = q.channels();
  if (mask != nullptr && (mask->rows != t || mask->cols != t)) throw InvalidArgument("mask must be T x T");

  FeatureGrid out(q.views(), q.size(), c);
  std::vector<float> scores;
  for (std::size_t h = 0; h < cfg.head_count; ++h) {
    const std::size_t off = h * cfg.head_dim;
    for (std::size_t i0 = 0; i0 < t; i0 += kQueryBlock) {
      const std::size_t nq = std::min(kQueryBlock, t - i0);
      detail::attend(q.data().data() + i0 * c + off, c, nq, k.data().data() + off, c, v.data().data() + off, c, t,
                     cfg.head_dim, cfg.scale, mask ? mask->values.data() + i0 * t : nullptr, t,
                     out.data().data() + i0 * c + off, c, scores);
    }
  }
  return out;
}

FeatureGrid row_wise_core(const FeatureGrid& q, const FeatureGrid& k, const FeatureGrid& v,
                          const AttentionConfig& cfg, ExecPolicy exec) {
  check_operands(q, k, v, cfg);
  const std::size_t n = q.views();
  const std::size_t s = q.size();
  const std::size_t c = q.channels();
  const std::size_t row_tokens = n * s;
  const std::size_t row_floats = s * c;  // one view's row, contiguous

  FeatureGrid out(n, s, c);
  struct Scratch {
    std::vector<float> q, k, v, o, scores;
  };
  std::vector<Scratch> scratch(std::max(1u, exec.threads));

  detail::parallel_for(s, exec.threads, [&](std::size_t r, std::size_t worker) {
    Scratch& sc = scratch[worker];
    sc.q.resize(row_tokens * c);
    sc.k.resize(row_tokens * c);
    sc.v.resize(row_tokens * c);
    sc.o.resize(row_tokens * c);
    // Gather row r of every view: token order is (view, column).
    for (std::size_t view = 0; view < n; ++view) {
      const std::size_t src = q.token_index(view, r, 0) * c;
      std::memcpy(sc.q.data() + view * row_floats, q.data().data() + src, row_floats * sizeof(float));
      std::memcpy(sc.k.data() + view * row_floats, k.data().data() + src, row_floats * sizeof(float));
      std::memcpy(sc.v.data() + view * row_floats, v.data().data() + src, row_floats * sizeof(float));
    }
    for (std::size_t h = 0; h < cfg.head_count; ++h) {
      const std::size_t off = h * cfg.head_dim;
      detail::attend(sc.q.data() + off, c, row_tokens, sc.k.data() + off, c, sc.v.data() + off, c, row_tokens,
                     cfg.head_dim, cfg.scale, nullptr, 0, sc.o.data() + off, c, sc.scores);
    }
    for (std::size_t view = 0; view < n; ++view)
      std::memcpy(out.data().data() + out.token_index(view, r, 0) * c, sc.o.data() + view * row_floats,
                  row_floats * sizeof(float));
  });
  return out;
}

FeatureGrid dense_multiview_attention(const FeatureGrid& grid, const ProjectionWeights& w, const AttentionConfig& cfg,
                                      const Matrix* mask) {
  const Projected p = project_qkv(grid, w, cfg);
  return finish(dense_core(p.q, p.k, p.v, cfg, mask), w, "dense multiview attention output");
}

FeatureGrid row_wise_attention(const FeatureGrid& grid, const ProjectionWeights& w, const AttentionConfig& cfg,
                               ExecPolicy exec) {
  const Projected p = project_qkv(grid, w, cfg);
  return finish(row_wise_core(p.q, p.k, p.v, cfg, exec), w, "row-wise attention output");
}

}  // namespace mvattn::attention
