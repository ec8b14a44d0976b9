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

// aarch64 Advanced SIMD variants. NEON is part of the base ISA there, so no
// extra compile flags or runtime probe are needed.

#include <arm_neon.h>

#include "mvattn/kernels.hpp"

namespace mvattn::kernels {
namespace {

// Same Cephes polynomial as the AVX2 path; underflowing lanes become 0.
inline float32x4_t exp128(float32x4_t x) {
  const float32x4_t underflow = vdupq_n_f32(-87.3365448f);
  const uint32x4_t dead = vcltq_f32(x, underflow);
  x = vminq_f32(x, vdupq_n_f32(88.3762626647949f));
  x = vmaxq_f32(x, underflow);

  float32x4_t fx = vfmaq_f32(vdupq_n_f32(0.5f), x, vdupq_n_f32(1.44269504088896341f));
  fx = vrndmq_f32(fx);
  x = vfmsq_f32(x, fx, vdupq_n_f32(0.693359375f));
  x = vfmsq_f32(x, fx, vdupq_n_f32(-2.12194440e-4f));

  float32x4_t y = vdupq_n_f32(1.9875691500E-4f);
  y = vfmaq_f32(vdupq_n_f32(1.3981999507E-3f), y, x);
  y = vfmaq_f32(vdupq_n_f32(8.3334519073E-3f), y, x);
  y = vfmaq_f32(vdupq_n_f32(4.1665795894E-2f), y, x);
  y = vfmaq_f32(vdupq_n_f32(1.6666665459E-1f), y, x);
  y = vfmaq_f32(vdupq_n_f32(5.0000001201E-1f), y, x);
  y = vfmaq_f32(x, y, vmulq_f32(x, x));
  y = vaddq_f32(y, vdupq_n_f32(1.0f));

  int32x4_t n = vcvtq_s32_f32(fx);
  n = vshlq_n_s32(vaddq_s32(n, vdupq_n_s32(127)), 23);
  y = vmulq_f32(y, vreinterpretq_f32_s32(n));
  return vreinterpretq_f32_u32(vbicq_u32(vreinterpretq_u32_f32(y), dead));
}

inline float exp_scalar_tail(float v) {
  float32x4_t r = exp128(vdupq_n_f32(v));
  return vgetq_lane_f32(r, 0);
}

inline float dot_impl(const float* a, const float* b, std::size_t k) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) acc = vfmaq_f32(acc, vld1q_f32(a + p), vld1q_f32(b + p));
  float s = vaddvq_f32(acc);
  for (; p < k; ++p) s += a[p] * b[p];
  return s;
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, float alpha, const float* a,
             std::size_t lda, const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * lda;
    for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = alpha * dot_impl(ai, b + j * ldb, k);
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * lda;
    float* ci = c + i * ldc;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      float32x4_t acc = vdupq_n_f32(0.0f);
      for (std::size_t p = 0; p < k; ++p) acc = vfmaq_n_f32(acc, vld1q_f32(b + p * ldb + j), ai[p]);
      vst1q_f32(ci + j, acc);
    }
    for (; j < n; ++j) {
      float acc = 0.0f;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * b[p * ldb + j];
      ci[j] = acc;
    }
  }
}

void softmax_rows(float* x, std::size_t rows, std::size_t cols, std::size_t ld) {
  const float neg_inf = -__builtin_inff();
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = x + r * ld;
    float32x4_t vmax = vdupq_n_f32(neg_inf);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) vmax = vmaxq_f32(vmax, vld1q_f32(row + j));
    float mx = vmaxvq_f32(vmax);
    for (; j < cols; ++j) mx = row[j] > mx ? row[j] : mx;
    if (mx == neg_inf) {
      for (j = 0; j < cols; ++j) row[j] = 0.0f;
      continue;
    }
    const float32x4_t vmx = vdupq_n_f32(mx);
    float32x4_t vsum = vdupq_n_f32(0.0f);
    for (j = 0; j + 4 <= cols; j += 4) {
      const float32x4_t e = exp128(vsubq_f32(vld1q_f32(row + j), vmx));
      vst1q_f32(row + j, e);
      vsum = vaddq_f32(vsum, e);
    }
    float sum = vaddvq_f32(vsum);
    for (; j < cols; ++j) {
      row[j] = exp_scalar_tail(row[j] - mx);
      sum += row[j];
    }
    const float inv = 1.0f / sum;
    for (j = 0; j + 4 <= cols; j += 4) vst1q_f32(row + j, vmulq_n_f32(vld1q_f32(row + j), inv));
    for (; j < cols; ++j) row[j] *= inv;
  }
}

float dot(const float* a, const float* b, std::size_t n) { return dot_impl(a, b, n); }

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_n_f32(vld1q_f32(y + i), vld1q_f32(x + i), alpha));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& neon_table_unchecked() {
  static const KernelTable table{"neon", gemm_nt, gemm_nn, softmax_rows, dot, axpy};
  return table;
}

}  // namespace mvattn::kernels
