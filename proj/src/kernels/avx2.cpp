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

// Compiled with -mavx2 -mfma; only reached after a runtime cpuid check.

#include <immintrin.h>

#include <algorithm>
#include <cstdint>

#include "mvattn/kernels.hpp"

namespace mvattn::kernels {
namespace {

alignas(32) constexpr std::int32_t kMaskTable[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                                     0,  0,  0,  0,  0,  0,  0,  0};

// Lanes [0, rem) enabled, rem in [0, 8].
inline __m256i tail_mask(std::size_t rem) {
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kMaskTable + 8 - rem));
}

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

inline float hmax(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_max_ps(lo, hi);
  lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_max_ss(lo, _mm_movehdup_ps(lo));
  return _mm_cvtss_f32(lo);
}

// Cephes-style expf. Inputs below the float underflow bound map to exactly 0,
// which keeps -inf (masked) scores at zero weight.
inline __m256 exp256(__m256 x) {
  const __m256 underflow = _mm256_set1_ps(-87.3365448f);
  const __m256 dead = _mm256_cmp_ps(x, underflow, _CMP_LT_OQ);
  x = _mm256_min_ps(x, _mm256_set1_ps(88.3762626647949f));
  x = _mm256_max_ps(x, underflow);

  __m256 fx = _mm256_fmadd_ps(x, _mm256_set1_ps(1.44269504088896341f), _mm256_set1_ps(0.5f));
  fx = _mm256_floor_ps(fx);
  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(0.693359375f), x);
  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(-2.12194440e-4f), x);

  __m256 y = _mm256_set1_ps(1.9875691500E-4f);
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507E-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073E-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894E-2f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459E-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201E-1f));
  const __m256 x2 = _mm256_mul_ps(x, x);
  y = _mm256_fmadd_ps(y, x2, x);
  y = _mm256_add_ps(y, _mm256_set1_ps(1.0f));

  __m256i n = _mm256_cvttps_epi32(fx);
  n = _mm256_add_epi32(n, _mm256_set1_epi32(127));
  n = _mm256_slli_epi32(n, 23);
  y = _mm256_mul_ps(y, _mm256_castsi256_ps(n));
  return _mm256_andnot_ps(dead, y);
}

inline float dot_impl(const float* a, const float* b, std::size_t k) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t p = 0;
  for (; p + 8 <= k; p += 8) acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + p), _mm256_loadu_ps(b + p), acc);
  if (p < k) {
    const __m256i m = tail_mask(k - p);
    acc = _mm256_fmadd_ps(_mm256_maskload_ps(a + p, m), _mm256_maskload_ps(b + p, m), acc);
  }
  return hsum(acc);
}

// Columns of C (keys) are visited in chunks so one chunk of B stays in L1
// while every row of A passes over it.
constexpr std::size_t kChunk = 128;

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, float alpha, const float* a,
             std::size_t lda, const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  const std::size_t k8 = k & ~std::size_t{7};
  const __m256i m_tail = tail_mask(k - k8);
  for (std::size_t j0 = 0; j0 < n; j0 += kChunk) {
    const std::size_t j1 = std::min(n, j0 + kChunk);
    std::size_t i = 0;
    // Four query rows share every key load.
    for (; i + 4 <= m; i += 4) {
      const float* a0 = a + (i + 0) * lda;
      const float* a1 = a + (i + 1) * lda;
      const float* a2 = a + (i + 2) * lda;
      const float* a3 = a + (i + 3) * lda;
      for (std::size_t j = j0; j < j1; ++j) {
        const float* bj = b + j * ldb;
        __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
        __m256 s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
        for (std::size_t p = 0; p < k8; p += 8) {
          const __m256 bv = _mm256_loadu_ps(bj + p);
          s0 = _mm256_fmadd_ps(_mm256_loadu_ps(a0 + p), bv, s0);
          s1 = _mm256_fmadd_ps(_mm256_loadu_ps(a1 + p), bv, s1);
          s2 = _mm256_fmadd_ps(_mm256_loadu_ps(a2 + p), bv, s2);
          s3 = _mm256_fmadd_ps(_mm256_loadu_ps(a3 + p), bv, s3);
        }
        if (k8 < k) {
          const __m256 bv = _mm256_maskload_ps(bj + k8, m_tail);
          s0 = _mm256_fmadd_ps(_mm256_maskload_ps(a0 + k8, m_tail), bv, s0);
          s1 = _mm256_fmadd_ps(_mm256_maskload_ps(a1 + k8, m_tail), bv, s1);
          s2 = _mm256_fmadd_ps(_mm256_maskload_ps(a2 + k8, m_tail), bv, s2);
          s3 = _mm256_fmadd_ps(_mm256_maskload_ps(a3 + k8, m_tail), bv, s3);
        }
        c[(i + 0) * ldc + j] = alpha * hsum(s0);
        c[(i + 1) * ldc + j] = alpha * hsum(s1);
        c[(i + 2) * ldc + j] = alpha * hsum(s2);
        c[(i + 3) * ldc + j] = alpha * hsum(s3);
      }
    }
    for (; i < m; ++i) {
      const float* ai = a + i * lda;
      for (std::size_t j = j0; j < j1; ++j) c[i * ldc + j] = alpha * dot_impl(ai, b + j * ldb, k);
    }
  }
}

// C[i, j0:j0+8w) += A[i, p0:p1) * B[p0:p1, j0:j0+8w) for w = 4, 1 or a masked tail.
void gemm_nn_rows(std::size_t m, std::size_t n, std::size_t p0, std::size_t p1, const float* a, std::size_t lda,
                  const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * lda;
    float* ci = c + i * ldc;
    std::size_t j = 0;
    for (; j + 32 <= n; j += 32) {
      __m256 c0 = _mm256_loadu_ps(ci + j + 0), c1 = _mm256_loadu_ps(ci + j + 8);
      __m256 c2 = _mm256_loadu_ps(ci + j + 16), c3 = _mm256_loadu_ps(ci + j + 24);
      for (std::size_t p = p0; p < p1; ++p) {
        const __m256 s = _mm256_set1_ps(ai[p]);
        const float* bp = b + p * ldb + j;
        c0 = _mm256_fmadd_ps(s, _mm256_loadu_ps(bp + 0), c0);
        c1 = _mm256_fmadd_ps(s, _mm256_loadu_ps(bp + 8), c1);
        c2 = _mm256_fmadd_ps(s, _mm256_loadu_ps(bp + 16), c2);
        c3 = _mm256_fmadd_ps(s, _mm256_loadu_ps(bp + 24), c3);
      }
      _mm256_storeu_ps(ci + j + 0, c0);
      _mm256_storeu_ps(ci + j + 8, c1);
      _mm256_storeu_ps(ci + j + 16, c2);
      _mm256_storeu_ps(ci + j + 24, c3);
    }
    for (; j + 8 <= n; j += 8) {
      __m256 acc = _mm256_loadu_ps(ci + j);
      for (std::size_t p = p0; p < p1; ++p)
        acc = _mm256_fmadd_ps(_mm256_set1_ps(ai[p]), _mm256_loadu_ps(b + p * ldb + j), acc);
      _mm256_storeu_ps(ci + j, acc);
    }
    if (j < n) {
      const __m256i msk = tail_mask(n - j);
      __m256 acc = _mm256_maskload_ps(ci + j, msk);
      for (std::size_t p = p0; p < p1; ++p)
        acc = _mm256_fmadd_ps(_mm256_set1_ps(ai[p]), _mm256_maskload_ps(b + p * ldb + j, msk), acc);
      _mm256_maskstore_ps(ci + j, msk, acc);
    }
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0f);
  for (std::size_t p0 = 0; p0 < k; p0 += kChunk)
    gemm_nn_rows(m, n, p0, std::min(k, p0 + kChunk), a, lda, b, ldb, c, ldc);
}

void softmax_rows(float* x, std::size_t rows, std::size_t cols, std::size_t ld) {
  const std::size_t c8 = cols & ~std::size_t{7};
  const __m256i m_tail = tail_mask(cols - c8);
  const __m256 neg_inf = _mm256_set1_ps(-__builtin_inff());
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = x + r * ld;
    __m256 vmax = neg_inf;
    for (std::size_t j = 0; j < c8; j += 8) vmax = _mm256_max_ps(vmax, _mm256_loadu_ps(row + j));
    if (c8 < cols) {
      const __m256 t = _mm256_blendv_ps(neg_inf, _mm256_maskload_ps(row + c8, m_tail),
                                        _mm256_castsi256_ps(m_tail));
      vmax = _mm256_max_ps(vmax, t);
    }
    const float mx = hmax(vmax);
    if (mx == -__builtin_inff()) {
      for (std::size_t j = 0; j < cols; ++j) row[j] = 0.0f;
      continue;
    }
    const __m256 vmx = _mm256_set1_ps(mx);
    __m256 vsum = _mm256_setzero_ps();
    for (std::size_t j = 0; j < c8; j += 8) {
      const __m256 e = exp256(_mm256_sub_ps(_mm256_loadu_ps(row + j), vmx));
      _mm256_storeu_ps(row + j, e);
      vsum = _mm256_add_ps(vsum, e);
    }
    if (c8 < cols) {
      __m256 e = exp256(_mm256_sub_ps(_mm256_maskload_ps(row + c8, m_tail), vmx));
      e = _mm256_and_ps(e, _mm256_castsi256_ps(m_tail));
      _mm256_maskstore_ps(row + c8, m_tail, e);
      vsum = _mm256_add_ps(vsum, e);
    }
    const __m256 inv = _mm256_set1_ps(1.0f / hsum(vsum));
    for (std::size_t j = 0; j < c8; j += 8) _mm256_storeu_ps(row + j, _mm256_mul_ps(_mm256_loadu_ps(row + j), inv));
    if (c8 < cols)
      _mm256_maskstore_ps(row + c8, m_tail, _mm256_mul_ps(_mm256_maskload_ps(row + c8, m_tail), inv));
  }
}

float dot(const float* a, const float* b, std::size_t n) { return dot_impl(a, b, n); }

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  if (i < n) {
    const __m256i m = tail_mask(n - i);
    _mm256_maskstore_ps(y + i, m, _mm256_fmadd_ps(va, _mm256_maskload_ps(x + i, m), _mm256_maskload_ps(y + i, m)));
  }
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{"avx2", gemm_nt, gemm_nn, softmax_rows, dot, axpy};
  return table;
}

}  // namespace mvattn::kernels
