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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "mvattn/attention.hpp"
#include "mvattn/error.hpp"
#include "mvattn/kernels.hpp"

using namespace mvattn::attention;
namespace geo = mvattn::geometry;

namespace {

double max_abs_diff(const FeatureGrid& a, const FeatureGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(double(a.data()[i]) - b.data()[i]));
  return m;
}

double max_abs_diff(const FeatureGrid& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(double(a.data()[i]) - b[i]));
  return m;
}

// Two-view grid holding view `v` of a and view `v` of b.
FeatureGrid stack_views(const FeatureGrid& a, const FeatureGrid& b, std::size_t v) {
  FeatureGrid g(2, a.size(), a.channels());
  const std::size_t floats = a.size() * a.size() * a.channels();
  std::memcpy(g.data().data(), a.data().data() + v * floats, floats * sizeof(float));
  std::memcpy(g.data().data() + floats, b.data().data() + v * floats, floats * sizeof(float));
  return g;
}

std::vector<geo::CameraModel> rig_views(double beta) {
  const auto rig = geo::CanonicalRig::make(beta, 1.0);
  return {rig.views().begin(), rig.views().end()};
}

}  // namespace

TEST(ScaledDotAttention, MatchesDoubleLoop) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> d(-1, 1);
  Matrix q(5, 6), k(9, 6), v(9, 6);
  for (auto* m : {&q, &k, &v})
    for (auto& x : m->values) x = d(rng);
  Matrix w;
  const Matrix out = scaled_dot_attention(q, k, v, 0.4f, &w);
  ASSERT_EQ(w.rows, 5u);
  ASSERT_EQ(w.cols, 9u);
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<double> p(9);
    double z = 0.0;
    for (std::size_t j = 0; j < 9; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < 6; ++c) s += double(q(i, c)) * k(j, c);
      p[j] = std::exp(0.4 * s);
      z += p[j];
    }
    for (std::size_t j = 0; j < 9; ++j) EXPECT_NEAR(w(i, j), p[j] / z, 1e-6);
    for (std::size_t c = 0; c < 6; ++c) {
      double o = 0.0;
      for (std::size_t j = 0; j < 9; ++j) o += p[j] / z * v(j, c);
      EXPECT_NEAR(out(i, c), o, 1e-6);
    }
  }
}

TEST(ScaledDotAttention, ZeroQueryAveragesValues) {
  Matrix q(1, 2, 0.0f), k(4, 2, 1.0f), v(4, 2);
  for (std::size_t j = 0; j < 4; ++j) v(j, 0) = float(j);
  const Matrix out = scaled_dot_attention(q, k, v, 1.0f);
  EXPECT_FLOAT_EQ(out(0, 0), 1.5f);
}

TEST(ScaledDotAttention, RejectsBadInput) {
  Matrix q(1, 2), k(0, 2), v(0, 2);
  EXPECT_THROW(scaled_dot_attention(q, k, v, 1.0f), mvattn::InvalidArgument);
  Matrix k2(3, 2), v2(3, 2), q2(1, 2);
  q2(0, 0) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(scaled_dot_attention(q2, k2, v2, 1.0f), mvattn::NonFinite);
  Matrix q3(1, 3);
  EXPECT_THROW(scaled_dot_attention(q3, k2, v2, 1.0f), mvattn::InvalidArgument);
}

TEST(Config, Heads) {
  const auto one = AttentionConfig::single_head(32);
  EXPECT_EQ(one.head_dim, 32u);
  EXPECT_FLOAT_EQ(one.scale, 1.0f / std::sqrt(32.0f));
  const auto four = AttentionConfig::multi_head(32, 4);
  EXPECT_EQ(four.head_dim, 8u);
  EXPECT_THROW(AttentionConfig::multi_head(30, 4), mvattn::InvalidArgument);
  EXPECT_THROW(four.validate(16), mvattn::InvalidArgument);
}

TEST(SameRowMask, Structure) {
  const Matrix m = same_row_mask(2, 3);
  ASSERT_EQ(m.rows, 18u);
  std::size_t allowed = 0;
  for (std::size_t i = 0; i < 18; ++i)
    for (std::size_t j = 0; j < 18; ++j) {
      const bool same = (i / 3) % 3 == (j / 3) % 3;
      EXPECT_EQ(m(i, j), same ? 0.0f : -std::numeric_limits<float>::infinity());
      allowed += same;
    }
  EXPECT_EQ(allowed, 18u * 6u);  // N S keys per query
}

TEST(Dense, MatchesDoubleReference) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto g = FeatureGrid::random(3, 4, 8, seed);
    const auto w = ProjectionWeights::random(8, seed + 100);
    for (std::size_t heads : {1, 2}) {
      const auto cfg = AttentionConfig::multi_head(8, heads);
      EXPECT_LE(max_abs_diff(dense_multiview_attention(g, w, cfg), reference::dense_multiview_attention(g, w, cfg)),
                1e-6);
    }
  }
}

TEST(RowWise, MatchesMaskedDenseReferenceOverSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 1 + seed % 6, s = 2 + seed % 7, c = 4 * (1 + seed % 4);
    const auto g = FeatureGrid::random(n, s, c, seed);
    const auto w = ProjectionWeights::random(c, seed + 7);
    const auto cfg = AttentionConfig::multi_head(c, seed % 2 ? 2 : 1);
    const auto fast = row_wise_attention(g, w, cfg);
    EXPECT_LE(max_abs_diff(fast, reference::dense_multiview_attention(g, w, cfg, reference::same_row(s))), 1e-6)
        << "seed " << seed;
    const Matrix mask = same_row_mask(n, s);
    EXPECT_LE(max_abs_diff(fast, dense_multiview_attention(g, w, cfg, &mask)), 1e-6);
  }
}

TEST(RowWise, ScalarAndSimdAgree) {
  const auto g = FeatureGrid::random(6, 8, 16, 3);
  const auto w = ProjectionWeights::random(16, 4);
  const auto cfg = AttentionConfig::single_head(16);
  const mvattn::kernels::KernelTable& before = mvattn::kernels::active();
  mvattn::kernels::set_active(mvattn::kernels::scalar_table());
  const auto scalar = row_wise_attention(g, w, cfg);
  mvattn::kernels::set_active(before);
  EXPECT_LE(max_abs_diff(scalar, row_wise_attention(g, w, cfg)), 1e-6);
}

TEST(RowWise, OnlyTheSameRowInfluencesAToken) {
  const auto g = FeatureGrid::random(4, 6, 8, 11);
  const auto w = ProjectionWeights::random(8, 12);
  const auto cfg = AttentionConfig::single_head(8);
  const auto base = row_wise_attention(g, w, cfg);
  auto edited = g;
  for (float& x : edited.token(2, 3, 4)) x += 0.5f;
  const auto out = row_wise_attention(edited, w, cfg);
  for (std::size_t v = 0; v < 4; ++v)
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 6; ++c) {
        const auto a = base.token(v, r, c), b = out.token(v, r, c);
        const bool same = std::equal(a.begin(), a.end(), b.begin());
        if (r == 3) EXPECT_FALSE(same);
        else EXPECT_TRUE(same) << v << "," << r << "," << c;
      }
}

TEST(RowWise, ViewPermutationEquivariance) {
  const std::size_t n = 4, s = 5, c = 8;
  const auto g = FeatureGrid::random(n, s, c, 21);
  const auto w = ProjectionWeights::random(c, 22);
  const auto cfg = AttentionConfig::single_head(c);
  const std::size_t perm[] = {2, 0, 3, 1};
  FeatureGrid pg(n, s, c);
  const std::size_t floats = s * s * c;
  for (std::size_t v = 0; v < n; ++v)
    std::memcpy(pg.data().data() + v * floats, g.data().data() + perm[v] * floats, floats * sizeof(float));
  const auto out = row_wise_attention(g, w, cfg), pout = row_wise_attention(pg, w, cfg);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t i = 0; i < floats; ++i)
      EXPECT_NEAR(pout.data()[v * floats + i], out.data()[perm[v] * floats + i], 1e-6);
}

TEST(RowWise, ThreadCountDoesNotChangeBits) {
  const auto g = FeatureGrid::random(6, 12, 16, 5);
  const auto w = ProjectionWeights::random(16, 6);
  const auto cfg = AttentionConfig::multi_head(16, 2);
  const auto one = row_wise_attention(g, w, cfg, {1});
  EXPECT_EQ(row_wise_attention(g, w, cfg, {3}), one);
  EXPECT_EQ(row_wise_attention(g, w, cfg, {8}), one);
}

TEST(RowWise, RejectsMismatchedInputs) {
  const auto g = FeatureGrid::random(2, 4, 8, 0);
  EXPECT_THROW(row_wise_attention(g, ProjectionWeights::random(4, 0), AttentionConfig::single_head(8)),
               mvattn::InvalidArgument);
  auto bad = g;
  bad.data()[5] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(row_wise_attention(bad, ProjectionWeights::random(8, 0), AttentionConfig::single_head(8)),
               mvattn::NonFinite);
  EXPECT_THROW(FeatureGrid(0, 4, 8).validate(), mvattn::InvalidArgument);
}

TEST(Sampling, PixelCentersAndBilinear) {
  EXPECT_DOUBLE_EQ(pixel_center(4, 0), -0.75);
  EXPECT_DOUBLE_EQ(pixel_center(4, 3), 0.75);
  const auto g = FeatureGrid::random(2, 4, 3, 9);
  std::vector<float> out(3);
  sample_bilinear(g, 1, {pixel_center(4, 2), pixel_center(4, 1)}, out);
  for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_EQ(out[ch], g.token(1, 1, 2)[ch]);
  // Halfway between columns 1 and 2 of row 3.
  sample_bilinear(g, 0, {0.0, pixel_center(4, 3)}, out);
  for (std::size_t ch = 0; ch < 3; ++ch)
    EXPECT_NEAR(out[ch], 0.5f * (g.token(0, 3, 1)[ch] + g.token(0, 3, 2)[ch]), 1e-6);
  // Beyond the border the edge pixel is returned.
  sample_bilinear(g, 0, {-1.0, -1.0}, out);
  for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_EQ(out[ch], g.token(0, 0, 0)[ch]);
}

TEST(EpipolarSamples, CanonicalRigHitsColumnCentres) {
  const auto views = rig_views(33.0);
  const std::size_t s = 8;
  for (std::size_t b = 1; b < 6; ++b) {
    EpipolarDiagnostics diag;
    const geo::Vec2 px(pixel_center(s, 5), pixel_center(s, 2));
    const auto pts = epipolar_sample_points(views[0], views[b], px, s, &diag);
    ASSERT_EQ(pts.size(), s);
    for (std::size_t k = 0; k < s; ++k) {
      EXPECT_NEAR(pts[k].x(), pixel_center(s, k), 1e-12);
      EXPECT_NEAR(pts[k].y(), px.y(), 1e-12);
    }
    EXPECT_EQ(diag.point_correspondences, b == 5 ? 1u : 0u);
  }
}

TEST(EpipolarSamples, GeneralPairFollowsTheLine) {
  const auto a = geo::CameraModel::perspective(35.0, 30.0, 0.0, 10.0);
  const auto b = geo::CameraModel::perspective(50.0, 40.0, 70.0, -5.0);
  const geo::Vec3 w(0.2, -0.3, 0.1);
  const geo::Vec2 pa = geo::project(a, w), pb = geo::project(b, w);
  const auto pts = epipolar_sample_points(a, b, pa, 16);
  ASSERT_EQ(pts.size(), 16u);
  const auto line = geo::epipolar_line(geo::pair_matrix(a, b), pa);
  for (const auto& p : pts) {
    EXPECT_LT(std::abs(line.distance(p)), 1e-9);
    EXPECT_LE(std::abs(p.x()), 1.0 + 1e-12);
    EXPECT_LE(std::abs(p.y()), 1.0 + 1e-12);
  }
  EXPECT_LT(std::abs(line.distance(pb)), 1e-9);
  EXPECT_THROW(epipolar_sample_points(a, b, pa, 0), mvattn::InvalidArgument);
}

TEST(Epipolar, CanonicalRigWithKEqualSMatchesRowWise) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t s = 4 + 2 * seed, c = 8;
    const auto g = FeatureGrid::random(6, s, c, seed);
    const auto w = ProjectionWeights::random(c, seed + 50);
    const auto cfg = AttentionConfig::single_head(c);
    EpipolarDiagnostics diag;
    const auto epi = epipolar_attention(g, rig_views(17.0 * seed), s, w, cfg, {}, &diag);
    EXPECT_LE(max_abs_diff(epi, row_wise_attention(g, w, cfg)), 1e-5);
    // 0/180 and 90/-90 are the antiparallel ordered pairs.
    EXPECT_EQ(diag.point_correspondences, 4 * s * s);
    EXPECT_EQ(diag.degenerate_lines, 0u);
    EXPECT_EQ(diag.lines_outside_image, 0u);
  }
}

TEST(Epipolar, ThreadsAndValidation) {
  const auto g = FeatureGrid::random(6, 6, 8, 1);
  const auto w = ProjectionWeights::random(8, 2);
  const auto cfg = AttentionConfig::single_head(8);
  const auto views = rig_views(0.0);
  EXPECT_EQ(epipolar_attention(g, views, 5, w, cfg, {4}), epipolar_attention(g, views, 5, w, cfg, {1}));
  EXPECT_THROW(epipolar_attention(g, std::span(views).first(5), 5, w, cfg), mvattn::InvalidArgument);
  EXPECT_THROW(epipolar_attention(g, views, 0, w, cfg), mvattn::InvalidArgument);
}

TEST(Epipolar, PerspectiveRigStaysFinite) {
  std::vector<geo::CameraModel> views;
  for (double off : geo::kRigAzimuthOffsets) views.push_back(geo::CameraModel::perspective(35.0, 30.0, off, 15.0));
  const auto g = FeatureGrid::random(6, 6, 8, 4);
  EpipolarDiagnostics diag;
  const auto out = epipolar_attention(g, views, 6, ProjectionWeights::random(8, 5), AttentionConfig::single_head(8),
                                      {}, &diag);
  EXPECT_NO_THROW(out.validate());
}

TEST(CrossDomain, SelfCrossMatchesTwoViewReference) {
  const std::size_t n = 3, s = 3, c = 8;
  const auto color = FeatureGrid::random(n, s, c, 1), normal = FeatureGrid::random(n, s, c, 2);
  const auto w = ProjectionWeights::random(c, 3);
  const auto cfg = AttentionConfig::single_head(c);
  const auto [oc, on] = self_cross_domain_attention(color, normal, w, cfg);
  for (std::size_t v = 0; v < n; ++v) {
    const auto ref = reference::dense_multiview_attention(stack_views(color, normal, v), w, cfg);
    const std::size_t floats = s * s * c;
    for (std::size_t i = 0; i < floats; ++i) {
      EXPECT_NEAR(oc.data()[v * floats + i], ref[i], 1e-6);
      EXPECT_NEAR(on.data()[v * floats + i], ref[floats + i], 1e-6);
    }
  }
}

TEST(CrossDomain, CrossStageMatchesReference) {
  const std::size_t n = 2, s = 4, c = 8;
  const auto color = FeatureGrid::random(n, s, c, 4), normal = FeatureGrid::random(n, s, c, 5);
  const auto w = ProjectionWeights::random(c, 6);
  const auto cfg = AttentionConfig::multi_head(c, 2);
  const auto [oc, on] = cross_domain_attention(color, normal, w, cfg);
  const std::size_t per = s * s, floats = per * c;
  // Tokens of the first half attend only to the second half and vice versa.
  const reference::Allow other = [per](std::size_t q, std::size_t k) { return (q < per) != (k < per); };
  for (std::size_t v = 0; v < n; ++v) {
    const auto ref = reference::dense_multiview_attention(stack_views(color, normal, v), w, cfg, other);
    for (std::size_t i = 0; i < floats; ++i) {
      EXPECT_NEAR(oc.data()[v * floats + i], ref[i], 1e-6);
      EXPECT_NEAR(on.data()[v * floats + i], ref[floats + i], 1e-6);
    }
  }
}

TEST(CrossDomain, BlockStagesCompose) {
  const auto color = FeatureGrid::random(3, 4, 8, 7), normal = FeatureGrid::random(3, 4, 8, 8);
  const auto w = CrossDomainWeights::random(8, 9);
  const auto cfg = AttentionConfig::single_head(8);
  const auto none = cross_domain_block(color, normal, w, cfg, {false, false, false});
  EXPECT_EQ(none.first, color);
  EXPECT_EQ(none.second, normal);
  const auto only_rows = cross_domain_block(color, normal, w, cfg, {false, true, false});
  EXPECT_EQ(only_rows.first, row_wise_attention(color, w.row_wise, cfg));
  EXPECT_EQ(only_rows.second, row_wise_attention(normal, w.row_wise, cfg));
  const auto full = cross_domain_block(color, normal, w, cfg);
  const auto s1 = self_cross_domain_attention(color, normal, w.self_cross, cfg);
  const auto s3 = cross_domain_attention(row_wise_attention(s1.first, w.row_wise, cfg),
                                         row_wise_attention(s1.second, w.row_wise, cfg), w.cross, cfg);
  EXPECT_EQ(full.first, s3.first);
  EXPECT_EQ(full.second, s3.second);
  EXPECT_THROW(cross_domain_block(color, FeatureGrid::random(3, 5, 8, 0), w, cfg), mvattn::InvalidArgument);
}

TEST(Flops, ClosedForms) {
  EXPECT_EQ(flop_count(Variant::dense, 6, 16, 32, 16), 2ull * 1536 * 1536 * 32);
  EXPECT_EQ(flop_count(Variant::row_wise, 6, 16, 32, 16), 16ull * 2 * 96 * 96 * 32);
  EXPECT_EQ(flop_count(Variant::epipolar, 6, 16, 32, 8), 2ull * 6 * 256 * (16 + 5 * 8) * 32);
  for (std::uint64_t s : {4, 16, 64, 256})
    EXPECT_EQ(flop_count(Variant::dense, 6, s, 32, 0), s * flop_count(Variant::row_wise, 6, s, 32, 0));
  EXPECT_EQ(flop_count(Variant::epipolar, 6, 32, 32, 32), flop_count(Variant::row_wise, 6, 32, 32, 0));
  EXPECT_THROW(flop_count(Variant::dense, 0, 16, 32, 16), mvattn::InvalidArgument);
}

TEST(Flops, VariantNames) {
  for (Variant v : {Variant::dense, Variant::row_wise, Variant::epipolar})
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  EXPECT_THROW(variant_from_string("sparse"), mvattn::InvalidArgument);
}

TEST(GridBinary, RoundTripIsBitExact) {
  auto g = FeatureGrid::random(2, 3, 5, 77);
  g.data()[0] = -0.0f;
  g.data()[1] = std::numeric_limits<float>::denorm_min();
  g.data()[2] = std::numeric_limits<float>::max();
  const auto bytes = encode_grid(g);
  ASSERT_EQ(bytes.size(), 16u + 4u * g.data().size());
  EXPECT_EQ(bytes[0], 2);
  EXPECT_EQ(bytes[4], 3);
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[12], 5);
  const auto back = decode_grid(bytes);
  ASSERT_TRUE(back.same_shape(g));
  EXPECT_EQ(std::memcmp(back.data().data(), g.data().data(), g.data().size() * 4), 0);
  EXPECT_TRUE(std::signbit(back.data()[0]));
}

TEST(GridBinary, RejectsMalformedInput) {
  const auto bytes = encode_grid(FeatureGrid::random(1, 2, 2, 0));
  EXPECT_THROW(decode_grid(std::span(bytes).first(10)), mvattn::InvalidArgument);
  EXPECT_THROW(decode_grid(std::span(bytes).first(bytes.size() - 1)), mvattn::InvalidArgument);
  auto skewed = bytes;
  skewed[8] = 3;  // rows != cols
  EXPECT_THROW(decode_grid(skewed), mvattn::InvalidArgument);
}

TEST(GridBinary, FileRoundTrip) {
  const auto g = FeatureGrid::random(3, 4, 2, 1);
  const std::string path = ::testing::TempDir() + "grid.bin";
  save_grid(g, path);
  EXPECT_EQ(load_grid(path), g);
  EXPECT_THROW(load_grid(path + ".missing"), mvattn::IoError);
}

TEST(ProjectionWeights, IdentityAndRandom) {
  const auto id = ProjectionWeights::identity(4);
  const auto g = FeatureGrid::random(1, 2, 4, 0);
  EXPECT_EQ(project_tokens(g, id.w_q), g);
  const auto r = ProjectionWeights::random(16, 3);
  EXPECT_EQ(r.w_q.size(), 256u);
  for (float x : r.w_k) EXPECT_LE(std::abs(x), 0.25f);
  EXPECT_EQ(ProjectionWeights::random(16, 3).w_v, r.w_v);
  EXPECT_NE(ProjectionWeights::random(16, 4).w_v, r.w_v);
}
