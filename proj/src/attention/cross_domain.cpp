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

#include <cstring>

#include "internal.hpp"
#include "mvattn/error.hpp"
#include "mvattn/kernels.hpp"

namespace mvattn::attention {
namespace {

// Attention of nq query tokens over nk key/value tokens, all C wide, with
// input and output projections. Rows of `queries` and `context` are tokens.
std::vector<float> attend_tokens(const float* queries, std::size_t nq, const float* context, std::size_t nk,
                                 std::size_t c, const ProjectionWeights& w, const AttentionConfig& cfg) {
  const kernels::KernelTable& kt = kernels::active();
  std::vector<float> q(nq * c), k(nk * c), v(nk * c), mixed(nq * c), out(nq * c), scores;
  kt.gemm_nn(nq, c, c, queries, c, w.w_q.data(), c, q.data(), c);
  kt.gemm_nn(nk, c, c, context, c, w.w_k.data(), c, k.data(), c);
  kt.gemm_nn(nk, c, c, context, c, w.w_v.data(), c, v.data(), c);
  for (std::size_t h = 0; h < cfg.head_count; ++h) {
    const std::size_t off = h * cfg.head_dim;
    detail::attend(q.data() + off, c, nq, k.data() + off, c, v.data() + off, c, nk, cfg.head_dim, cfg.scale, nullptr,
                   0, mixed.data() + off, c, scores);
  }
  kt.gemm_nn(nq, c, c, mixed.data(), c, w.w_out.data(), c, out.data(), c);
  return out;
}

void check_pair(const FeatureGrid& color, const FeatureGrid& normal, const ProjectionWeights& w,
                const AttentionConfig& cfg) {
  if (!color.same_shape(normal)) throw InvalidArgument("color and normal grids must share N, S and C");
  color.validate();
  normal.validate();
  if (w.channels != color.channels()) throw InvalidArgument("projection weights do not match the grid channels");
  w.validate();
  cfg.validate(color.channels());
}

}  // namespace

CrossDomainWeights CrossDomainWeights::random(std::size_t channels, std::uint64_t seed) {
  return {ProjectionWeights::random(channels, seed), ProjectionWeights::random(channels, seed + 1),
          ProjectionWeights::random(channels, seed + 2)};
}

std::pair<FeatureGrid, FeatureGrid> self_cross_domain_attention(const FeatureGrid& color, const FeatureGrid& normal,
                                                                const ProjectionWeights& w,
                                                                const AttentionConfig& cfg) {
  check_pair(color, normal, w, cfg);
  const std::size_t c = color.channels();
  const std::size_t per_view = color.size() * color.size();
  const std::size_t view_floats = per_view * c;

  FeatureGrid out_color(color.views(), color.size(), c);
  FeatureGrid out_normal(normal.views(), normal.size(), c);
  std::vector<float> joint(2 * view_floats);
  for (std::size_t view = 0; view < color.views(); ++view) {
    const std::size_t base = color.token_index(view, 0, 0) * c;
    std::memcpy(joint.data(), color.data().data() + base, view_floats * sizeof(float));
    std::memcpy(joint.data() + view_floats, normal.data().data() + base, view_floats * sizeof(float));
    const auto mixed = attend_tokens(joint.data(), 2 * per_view, joint.data(), 2 * per_view, c, w, cfg);
    std::memcpy(out_color.data().data() + base, mixed.data(), view_floats * sizeof(float));
    std::memcpy(out_normal.data().data() + base, mixed.data() + view_floats, view_floats * sizeof(float));
  }
  detail::require_finite(out_color, "self-cross-domain output");
  detail::require_finite(out_normal, "self-cross-domain output");
  return {std::move(out_color), std::move(out_normal)};
}

std::pair<FeatureGrid, FeatureGrid> cross_domain_attention(const FeatureGrid& color, const FeatureGrid& normal,
                                                           const ProjectionWeights& w, const AttentionConfig& cfg) {
  check_pair(color, normal, w, cfg);
  const std::size_t c = color.channels();
  const std::size_t per_view = color.size() * color.size();
  const std::size_t view_floats = per_view * c;

  FeatureGrid out_color(color.views(), color.size(), c);
  FeatureGrid out_normal(normal.views(), normal.size(), c);
  for (std::size_t view = 0; view < color.views(); ++view) {
    const std::size_t base = color.token_index(view, 0, 0) * c;
    const float* col = color.data().data() + base;
    const float* nor = normal.data().data() + base;
    const auto c_out = attend_tokens(col, per_view, nor, per_view, c, w, cfg);
    const auto n_out = attend_tokens(nor, per_view, col, per_view, c, w, cfg);
    std::memcpy(out_color.data().data() + base, c_out.data(), view_floats * sizeof(float));
    std::memcpy(out_normal.data().data() + base, n_out.data(), view_floats * sizeof(float));
  }
  detail::require_finite(out_color, "cross-domain output");
  detail::require_finite(out_normal, "cross-domain output");
  return {std::move(out_color), std::move(out_normal)};
}

std::pair<FeatureGrid, FeatureGrid> cross_domain_block(const FeatureGrid& color, const FeatureGrid& normal,
                                                       const CrossDomainWeights& w, const AttentionConfig& cfg,
                                                       CrossDomainStages stages, ExecPolicy exec) {
  if (!color.same_shape(normal)) throw InvalidArgument("color and normal grids must share N, S and C");
  std::pair<FeatureGrid, FeatureGrid> cur{color, normal};
  if (stages.self_cross) cur = self_cross_domain_attention(cur.first, cur.second, w.self_cross, cfg);
  if (stages.row_wise) {
    cur.first = row_wise_attention(cur.first, w.row_wise, cfg, exec);
    cur.second = row_wise_attention(cur.second, w.row_wise, cfg, exec);
  }
  if (stages.cross) cur = cross_domain_attention(cur.first, cur.second, w.cross, cfg);
  return cur;
}

}  // namespace mvattn::attention
