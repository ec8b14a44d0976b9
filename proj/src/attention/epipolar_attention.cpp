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
#include <string>

#include "internal.hpp"
#include "mvattn/error.hpp"

namespace mvattn::attention {
namespace {

using geometry::Vec2;

// Row through a point correspondence: the ray collapses to one pixel, and
// the rig shares its horizontal axis, so the row is the line sampled.
geometry::EpipolarLine row_through(const Vec2& p) { return {0.0, 1.0, -p.y()}; }

void samples_on(const geometry::Correspondence& corr, std::size_t count, std::vector<Vec2>& out,
                EpipolarDiagnostics* diag) {
  out.clear();
  geometry::EpipolarLine line;
  if (corr.point) {
    if (diag) ++diag->point_correspondences;
    line = row_through(*corr.point);
  } else {
    line = *corr.line;
  }
  const auto seg = geometry::clip_to_image(line);
  if (!seg) {
    if (diag) ++diag->lines_outside_image;
    return;
  }
  const Vec2 delta = (*seg)[1] - (*seg)[0];
  for (std::size_t k = 0; k < count; ++k) {
    const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(count);
    out.push_back((*seg)[0] + t * delta);
  }
}

}  // namespace

std::vector<Vec2> epipolar_sample_points(const geometry::CameraModel& view_a, const geometry::CameraModel& view_b,
                                         const Vec2& pixel, std::size_t count, EpipolarDiagnostics* diag) {
  std::vector<Vec2> out;
  if (count == 0) throw InvalidArgument("epipolar sampling needs K >= 1");
  geometry::Correspondence corr;
  try {
    corr = geometry::correspondence(view_a, view_b, pixel);
  } catch (const DegenerateLine&) {
    if (diag) ++diag->degenerate_lines;
    return out;
  }
  samples_on(corr, count, out, diag);
  return out;
}

FeatureGrid epipolar_core(const FeatureGrid& q, const FeatureGrid& k, const FeatureGrid& v,
                          std::span<const geometry::CameraModel> cameras, std::size_t samples_per_view,
                          const AttentionConfig& cfg, ExecPolicy exec, EpipolarDiagnostics* diag) {
  if (!q.same_shape(k) || !q.same_shape(v)) throw InvalidArgument("Q, K and V grids must share a shape");
  if (samples_per_view == 0) throw InvalidArgument("epipolar attention needs K >= 1");
  if (cameras.size() != q.views())
    throw InvalidArgument("epipolar attention needs one camera per view (" + std::to_string(q.views()) + ")");
  cfg.validate(q.channels());

  const std::size_t n = q.views();
  const std::size_t s = q.size();
  const std::size_t c = q.channels();
  const std::size_t max_keys = s + (n - 1) * samples_per_view;

  std::vector<geometry::PairGeometry> pairs;
  pairs.reserve(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) pairs.emplace_back(cameras[a], cameras[b]);

  FeatureGrid out(n, s, c);
  struct Scratch {
    std::vector<float> keys, values, scores;
    std::vector<Vec2> points;
    EpipolarDiagnostics diag;
  };
  std::vector<Scratch> scratch(std::max(1u, exec.threads));

  // One unit per (view, row).
  detail::parallel_for(n * s, exec.threads, [&](std::size_t unit, std::size_t worker) {
    Scratch& sc = scratch[worker];
    sc.keys.resize(max_keys * c);
    sc.values.resize(max_keys * c);
    const std::size_t view = unit / s;
    const std::size_t r = unit % s;
    const Vec2::Scalar v_coord = pixel_center(s, r);

    for (std::size_t col = 0; col < s; ++col) {
      // Own-view row context.
      const std::size_t row_src = k.token_index(view, r, 0) * c;
      std::memcpy(sc.keys.data(), k.data().data() + row_src, s * c * sizeof(float));
      std::memcpy(sc.values.data(), v.data().data() + row_src, s * c * sizeof(float));
      std::size_t nkeys = s;

      const Vec2 pixel(pixel_center(s, col), v_coord);
      for (std::size_t other = 0; other < n; ++other) {
        if (other == view) continue;
        geometry::Correspondence corr;
        try {
          corr = pairs[view * n + other].at(pixel);
        } catch (const DegenerateLine&) {
          ++sc.diag.degenerate_lines;
          continue;
        }
        samples_on(corr, samples_per_view, sc.points, &sc.diag);
        for (const Vec2& p : sc.points) {
          sample_bilinear(k, other, p, {sc.keys.data() + nkeys * c, c});
          sample_bilinear(v, other, p, {sc.values.data() + nkeys * c, c});
          ++nkeys;
        }
      }

      const std::size_t dst = out.token_index(view, r, col) * c;
      for (std::size_t h = 0; h < cfg.head_count; ++h) {
        const std::size_t off = h * cfg.head_dim;
        detail::attend(q.data().data() + dst + off, c, 1, sc.keys.data() + off, c, sc.values.data() + off, c, nkeys,
                       cfg.head_dim, cfg.scale, nullptr, 0, out.data().data() + dst + off, c, sc.scores);
      }
    }
  });

  if (diag) {
    for (const Scratch& sc : scratch) {
      diag->degenerate_lines += sc.diag.degenerate_lines;
      diag->lines_outside_image += sc.diag.lines_outside_image;
      diag->point_correspondences += sc.diag.point_correspondences;
    }
  }
  return out;
}

FeatureGrid epipolar_attention(const FeatureGrid& grid, std::span<const geometry::CameraModel> cameras,
                               std::size_t samples_per_view, const ProjectionWeights& w, const AttentionConfig& cfg,
                               ExecPolicy exec, EpipolarDiagnostics* diag) {
  grid.validate();
  if (w.channels != grid.channels()) throw InvalidArgument("projection weights do not match the grid channels");
  w.validate();
  const FeatureGrid q = project_tokens(grid, w.w_q);
  const FeatureGrid k = project_tokens(grid, w.w_k);
  const FeatureGrid v = project_tokens(grid, w.w_v);
  FeatureGrid out = project_tokens(epipolar_core(q, k, v, cameras, samples_per_view, cfg, exec, diag), w.w_out);
  detail::require_finite(out, "epipolar attention output");
  return out;
}

}  // namespace mvattn::attention
