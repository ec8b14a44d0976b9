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
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

#include "internal.hpp"
#include "mvattn/error.hpp"
#include "mvattn/kernels.hpp"

namespace mvattn::attention {
namespace {

constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("grid dimension exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

std::vector<float> random_matrix(std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  const float s = 1.0f / std::sqrt(static_cast<float>(c));
  std::vector<float> m(c * c);
  for (float& x : m) x = dist(rng) * s;
  return m;
}

}  // namespace

FeatureGrid::FeatureGrid(std::size_t views, std::size_t size, std::size_t channels)
    : views_(views), size_(size), channels_(channels), data_(views * size * size * channels, 0.0f) {}

FeatureGrid FeatureGrid::random(std::size_t views, std::size_t size, std::size_t channels, std::uint64_t seed) {
  FeatureGrid g(views, size, channels);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (float& x : g.data_) x = dist(rng);
  return g;
}

void FeatureGrid::validate() const {
  if (views_ == 0 || size_ == 0 || channels_ == 0) throw InvalidArgument("feature grid has an empty dimension");
  detail::require_finite(*this, "feature grid");
}

std::vector<unsigned char> encode_grid(const FeatureGrid& grid) {
  std::vector<unsigned char> out;
  out.reserve(kHeaderBytes + grid.data().size() * 4);
  put_u32(out, checked_u32(grid.views()));
  put_u32(out, checked_u32(grid.size()));
  put_u32(out, checked_u32(grid.size()));
  put_u32(out, checked_u32(grid.channels()));
  for (float x : grid.data()) put_u32(out, std::bit_cast<std::uint32_t>(x));
  return out;
}

FeatureGrid decode_grid(std::span<const unsigned char> bytes) {
  if (bytes.size() < kHeaderBytes) throw InvalidArgument("grid buffer shorter than its 16-byte header");
  const std::uint32_t n = get_u32(bytes.data());
  const std::uint32_t h = get_u32(bytes.data() + 4);
  const std::uint32_t w = get_u32(bytes.data() + 8);
  const std::uint32_t c = get_u32(bytes.data() + 12);
  if (h != w) throw InvalidArgument("grid header is not square");
  const std::uint64_t count = std::uint64_t{n} * h * w * c;
  if (bytes.size() != kHeaderBytes + count * 4) throw InvalidArgument("grid payload size does not match its header");
  FeatureGrid g(n, h, c);
  auto data = g.data();
  for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<float>(get_u32(bytes.data() + kHeaderBytes + 4 * i));
  return g;
}

void save_grid(const FeatureGrid& grid, const std::string& path) {
  const auto bytes = encode_grid(grid);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

FeatureGrid load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_grid(bytes);
}

AttentionConfig AttentionConfig::single_head(std::size_t channels) { return multi_head(channels, 1); }

AttentionConfig AttentionConfig::multi_head(std::size_t channels, std::size_t heads) {
  if (heads == 0 || channels == 0 || channels % heads != 0)
    throw InvalidArgument("channels must be a positive multiple of the head count");
  AttentionConfig cfg;
  cfg.head_count = heads;
  cfg.head_dim = channels / heads;
  cfg.scale = 1.0f / std::sqrt(static_cast<float>(cfg.head_dim));
  return cfg;
}

void AttentionConfig::validate(std::size_t channels) const {
  if (head_count == 0 || head_dim == 0) throw InvalidArgument("attention config needs positive head count and dim");
  if (head_count * head_dim != channels) throw InvalidArgument("head_count * head_dim must equal the channel count");
  if (!std::isfinite(scale)) throw NonFinite("attention scale is not finite");
}

ProjectionWeights ProjectionWeights::random(std::size_t channels, std::uint64_t seed) {
  if (channels == 0) throw InvalidArgument("projection weights need C > 0");
  std::mt19937_64 rng(seed);
  ProjectionWeights w;
  w.channels = channels;
  w.seed = seed;
  w.w_q = random_matrix(channels, rng);
  w.w_k = random_matrix(channels, rng);
  w.w_v = random_matrix(channels, rng);
  w.w_out = random_matrix(channels, rng);
  return w;
}

ProjectionWeights ProjectionWeights::identity(std::size_t channels) {
  ProjectionWeights w;
  w.channels = channels;
  std::vector<float> eye(channels * channels, 0.0f);
  for (std::size_t i = 0; i < channels; ++i) eye[i * channels + i] = 1.0f;
  w.w_q = w.w_k = w.w_v = w.w_out = eye;
  return w;
}

void ProjectionWeights::validate() const {
  const std::size_t n = channels * channels;
  for (const auto* m : {&w_q, &w_k, &w_v, &w_out}) {
    if (m->size() != n) throw InvalidArgument("projection matrix is not C x C");
    for (float x : *m)
      if (!std::isfinite(x)) throw NonFinite("projection weights contain a non-finite value");
  }
}

FeatureGrid project_tokens(const FeatureGrid& grid, std::span<const float> weight) {
  const std::size_t c = grid.channels();
  if (weight.size() != c * c) throw InvalidArgument("projection matrix does not match the channel count");
  FeatureGrid out(grid.views(), grid.size(), c);
  kernels::active().gemm_nn(grid.tokens(), c, c, grid.data().data(), c, weight.data(), c, out.data().data(), c);
  return out;
}

double pixel_center(std::size_t size, std::size_t index) {
  return -1.0 + (2.0 * static_cast<double>(index) + 1.0) / static_cast<double>(size);
}

void sample_bilinear(const FeatureGrid& grid, std::size_t view, const geometry::Vec2& at, std::span<float> out) {
  const std::size_t s = grid.size();
  const double max_px = static_cast<double>(s - 1);
  const double px = std::clamp((at.x() + 1.0) * 0.5 * static_cast<double>(s) - 0.5, 0.0, max_px);
  const double py = std::clamp((at.y() + 1.0) * 0.5 * static_cast<double>(s) - 0.5, 0.0, max_px);
  const auto c0 = static_cast<std::size_t>(px);
  const auto r0 = static_cast<std::size_t>(py);
  const std::size_t c1 = std::min(c0 + 1, s - 1);
  const std::size_t r1 = std::min(r0 + 1, s - 1);
  const auto fx = static_cast<float>(px - static_cast<double>(c0));
  const auto fy = static_cast<float>(py - static_cast<double>(r0));

  const float w00 = (1.0f - fx) * (1.0f - fy);
  const float w01 = fx * (1.0f - fy);
  const float w10 = (1.0f - fx) * fy;
  const float w11 = fx * fy;
  const auto t00 = grid.token(view, r0, c0);
  const auto t01 = grid.token(view, r0, c1);
  const auto t10 = grid.token(view, r1, c0);
  const auto t11 = grid.token(view, r1, c1);
  for (std::size_t ch = 0; ch < out.size(); ++ch)
    out[ch] = w00 * t00[ch] + w01 * t01[ch] + w10 * t10[ch] + w11 * t11[ch];
}

}  // namespace mvattn::attention
