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

#include <cmath>
#include <limits>
#include <string>

#include "internal.hpp"
#include "mvattn/error.hpp"
#include "mvattn/kernels.hpp"

namespace mvattn::attention {
namespace detail {

void attend(const float* q, std::size_t ldq, std::size_t nq, const float* k, std::size_t ldk, const float* v,
            std::size_t ldv, std::size_t nk, std::size_t dim, float scale, const float* mask, std::size_t ldm,
            float* out, std::size_t ldo, std::vector<float>& scores) {
  const kernels::KernelTable& kt = kernels::active();
  scores.resize(nq * nk);
  kt.gemm_nt(nq, nk, dim, scale, q, ldq, k, ldk, scores.data(), nk);
  if (mask != nullptr) {
    for (std::size_t i = 0; i < nq; ++i) {
      float* row = scores.data() + i * nk;
      const float* m = mask + i * ldm;
      for (std::size_t j = 0; j < nk; ++j) row[j] += m[j];
    }
  }
  kt.softmax_rows(scores.data(), nq, nk, nk);
  kt.gemm_nn(nq, dim, nk, scores.data(), nk, v, ldv, out, ldo);
}

void require_finite(const FeatureGrid& grid, const char* what) {
  for (float x : grid.data())
    if (!std::isfinite(x)) throw NonFinite(std::string(what) + " contains a non-finite value");
}

}  // namespace detail

namespace {

bool all_finite(const Matrix& m) {
  for (float x : m.values)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, float scale, Matrix* weights) {
  if (k.rows == 0) throw InvalidArgument("scaled_dot_attention: need at least one key");
  if (q.cols != k.cols || k.cols != v.cols || k.rows != v.rows)
    throw InvalidArgument("scaled_dot_attention: operand shapes disagree");
  if (!all_finite(q) || !all_finite(k) || !all_finite(v) || !std::isfinite(scale))
    throw NonFinite("scaled_dot_attention: non-finite input");

  Matrix out(q.rows, v.cols);
  std::vector<float> scores;
  detail::attend(q.values.data(), q.cols, q.rows, k.values.data(), k.cols, v.values.data(), v.cols, k.rows, q.cols,
                 scale, nullptr, 0, out.values.data(), out.cols, scores);
  if (weights != nullptr) {
    weights->rows = q.rows;
    weights->cols = k.rows;
    weights->values = std::move(scores);
  }
  return out;
}

}  // namespace mvattn::attention
