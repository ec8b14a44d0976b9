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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvattn/geometry.hpp"

namespace mvattn::attention {

/// N views of S x S latent tokens with C channels each, stored
/// view-major, then row, then column, then channel.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(std::size_t views, std::size_t size, std::size_t channels);

  /// Uniform [-1, 1) entries from a fixed seed.
  static FeatureGrid random(std::size_t views, std::size_t size, std::size_t channels, std::uint64_t seed);

  std::size_t views() const { return views_; }
  std::size_t size() const { return size_; }
  std::size_t channels() const { return channels_; }
  std::size_t tokens() const { return views_ * size_ * size_; }

  std::size_t token_index(std::size_t view, std::size_t row, std::size_t col) const {
    return (view * size_ + row) * size_ + col;
  }
  std::span<float> token(std::size_t view, std::size_t row, std::size_t col) {
    return {data_.data() + token_index(view, row, col) * channels_, channels_};
  }
  std::span<const float> token(std::size_t view, std::size_t row, std::size_t col) const {
    return {data_.data() + token_index(view, row, col) * channels_, channels_};
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const FeatureGrid& other) const {
    return views_ == other.views_ && size_ == other.size_ && channels_ == other.channels_;
  }

  /// Throws NonFinite on NaN/Inf and InvalidArgument on an empty shape.
  void validate() const;

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  std::size_t views_ = 0;
  std::size_t size_ = 0;
  std::size_t channels_ = 0;
  std::vector<float> data_;
};

/// Binary fixture format: 16-byte header of little-endian uint32
/// (N, S, S, C) followed by N*S*S*C little-endian float32.
std::vector<unsigned char> encode_grid(const FeatureGrid& grid);
FeatureGrid decode_grid(std::span<const unsigned char> bytes);
void save_grid(const FeatureGrid& grid, const std::string& path);
FeatureGrid load_grid(const std::string& path);

struct AttentionConfig {
  std::size_t head_count = 1;
  std::size_t head_dim = 0;
  float scale = 0.0f;

  static AttentionConfig single_head(std::size_t channels);
  static AttentionConfig multi_head(std::size_t channels, std::size_t heads);

  std::size_t channels() const { return head_count * head_dim; }
  void validate(std::size_t channels) const;
};

/// Row-major C x C matrices applied as  y = x W  to each token.
struct ProjectionWeights {
  std::size_t channels = 0;
  std::uint64_t seed = 0;
  std::vector<float> w_q, w_k, w_v, w_out;

  /// Uniform [-1, 1) / sqrt(C) from `seed`.
  static ProjectionWeights random(std::size_t channels, std::uint64_t seed);
  static ProjectionWeights identity(std::size_t channels);

  void validate() const;
};

/// Parallelism for the row-wise and epipolar variants. Rows (and views for
/// the epipolar variant) are independent work units; every unit is computed
/// the same way regardless of the thread count, so results are bit-identical.
struct ExecPolicy {
  unsigned threads = 1;
};

/// Dense row-major matrix for the attention primitive.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), values(r * c, fill) {}

  float& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  float operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// softmax(scale * q k^T) v. When `weights` is non-null it receives the
/// T x M attention weights.
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, float scale,
                            Matrix* weights = nullptr);

/// Additive score mask for the dense variant: T x T with 0 for allowed pairs
/// and -inf for blocked ones (T = N*S*S).
Matrix same_row_mask(std::size_t views, std::size_t size);

/// Every token attends over all N*S*S tokens. `mask`, when given, is added
/// to the scores before the softmax.
FeatureGrid dense_multiview_attention(const FeatureGrid& grid, const ProjectionWeights& w,
                                      const AttentionConfig& cfg, const Matrix* mask = nullptr);

/// Tokens of row r across all N views attend only among themselves.
FeatureGrid row_wise_attention(const FeatureGrid& grid, const ProjectionWeights& w, const AttentionConfig& cfg,
                               ExecPolicy exec = {});

struct EpipolarDiagnostics {
  std::size_t degenerate_lines = 0;       // E x1 = 0: the view contributed no keys
  std::size_t lines_outside_image = 0;    // line misses [-1, 1]^2: no keys
  std::size_t point_correspondences = 0;  // parallel orthographic axes, row through the point used
};

/// Image-space sample positions along the epipolar line of `pixel` (in
/// view_a) inside view_b: `count` points spaced uniformly along the segment
/// clipped to the image square, at parameters (k + 0.5) / count. When the
/// orthographic axes are parallel the ray maps to a point and the image row
/// through that point is sampled instead. Empty when there is no line.
std::vector<geometry::Vec2> epipolar_sample_points(const geometry::CameraModel& view_a,
                                                   const geometry::CameraModel& view_b,
                                                   const geometry::Vec2& pixel, std::size_t count,
                                                   EpipolarDiagnostics* diag = nullptr);

/// Each token attends over the S tokens of its own row in its own view plus
/// `samples_per_view` bilinearly interpolated tokens along its epipolar line
/// in every other view. `cameras` must have one entry per grid view.
FeatureGrid epipolar_attention(const FeatureGrid& grid, std::span<const geometry::CameraModel> cameras,
                               std::size_t samples_per_view, const ProjectionWeights& w, const AttentionConfig& cfg,
                               ExecPolicy exec = {}, EpipolarDiagnostics* diag = nullptr);

/// Centre of pixel `index` of an S-wide image axis in [-1, 1] coordinates.
double pixel_center(std::size_t size, std::size_t index);

/// Bilinear lookup with edge clamping at normalized image coordinates.
void sample_bilinear(const FeatureGrid& grid, std::size_t view, const geometry::Vec2& at, std::span<float> out);

// ---------------------------------------------------------------------------
// Cores on already-projected Q, K, V grids (no input or output projection).
// These are what the benchmark times.

FeatureGrid dense_core(const FeatureGrid& q, const FeatureGrid& k, const FeatureGrid& v, const AttentionConfig& cfg,
                       const Matrix* mask = nullptr);
FeatureGrid row_wise_core(const FeatureGrid& q, const FeatureGrid& k, const FeatureGrid& v,
                          const AttentionConfig& cfg, ExecPolicy exec = {});
FeatureGrid epipolar_core(const FeatureGrid& q, const FeatureGrid& k, const FeatureGrid& v,
                          std::span<const geometry::CameraModel> cameras, std::size_t samples_per_view,
                          const AttentionConfig& cfg, ExecPolicy exec = {}, EpipolarDiagnostics* diag = nullptr);

/// y = x W applied token-wise.
FeatureGrid project_tokens(const FeatureGrid& grid, std::span<const float> weight);

// ---------------------------------------------------------------------------
// Cross-domain block

struct CrossDomainWeights {
  ProjectionWeights self_cross;  // stage 1
  ProjectionWeights row_wise;    // stage 2
  ProjectionWeights cross;       // stage 3

  static CrossDomainWeights random(std::size_t channels, std::uint64_t seed);
};

/// Stage switches; a disabled stage passes its input through unchanged.
struct CrossDomainStages {
  bool self_cross = true;
  bool row_wise = true;
  bool cross = true;
};

/// (1) per-view self-attention over the union of the view's color and normal
/// tokens, (2) row-wise multiview attention within each domain, (3) each
/// domain's tokens attend over the other domain's tokens of the same view.
std::pair<FeatureGrid, FeatureGrid> cross_domain_block(const FeatureGrid& color, const FeatureGrid& normal,
                                                       const CrossDomainWeights& w, const AttentionConfig& cfg,
                                                       CrossDomainStages stages = {}, ExecPolicy exec = {});

/// Stage 1 alone: per view, attention over the 2*S*S color and normal tokens.
std::pair<FeatureGrid, FeatureGrid> self_cross_domain_attention(const FeatureGrid& color, const FeatureGrid& normal,
                                                                const ProjectionWeights& w,
                                                                const AttentionConfig& cfg);

/// Stage 3 alone: color queries over normal keys of the same view, and back.
std::pair<FeatureGrid, FeatureGrid> cross_domain_attention(const FeatureGrid& color, const FeatureGrid& normal,
                                                           const ProjectionWeights& w, const AttentionConfig& cfg);

// ---------------------------------------------------------------------------
// Complexity

enum class Variant { dense, epipolar, row_wise };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Multiply-accumulate count of the score and value matmuls:
///   dense    = 2 (N S^2)^2 C
///   row_wise = S * 2 (N S)^2 C
///   epipolar = 2 N S^2 (S + (N - 1) K) C
/// K is ignored by dense and row_wise. Throws InvalidArgument on zero sizes.
std::uint64_t flop_count(Variant v, std::uint64_t n, std::uint64_t s, std::uint64_t c, std::uint64_t k);

// ---------------------------------------------------------------------------
// Double-precision reference used as the equivalence oracle.

namespace reference {

/// Pair predicate over flat token indices; true means "query may attend key".
using Allow = std::function<bool(std::size_t query, std::size_t key)>;

/// Straightforward dense multiview attention in double precision with the
/// same projections. Returns values in FeatureGrid layout.
std::vector<double> dense_multiview_attention(const FeatureGrid& grid, const ProjectionWeights& w,
                                              const AttentionConfig& cfg, const Allow& allow = {});

/// Allow predicate for "same row index, any view".
Allow same_row(std::size_t size);

}  // namespace reference

}  // namespace mvattn::attention
