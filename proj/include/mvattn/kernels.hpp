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
#include <string_view>

// Data-parallel float32 inner loops used by the attention variants.
//
// Every kernel has a portable scalar reference implementation. ISA variants
// (AVX2+FMA on x86-64, NEON on aarch64) are compiled into the same library and
// selected once at runtime. Setting MVATTN_SIMD=scalar in the environment
// forces the reference path.

namespace mvattn::kernels {

/// c[i*ldc + j] = alpha * sum_p a[i*lda + p] * b[j*ldb + p]   (C = alpha A B^T)
using GemmNtFn = void (*)(std::size_t m, std::size_t n, std::size_t k, float alpha,
                          const float* a, std::size_t lda, const float* b, std::size_t ldb,
                          float* c, std::size_t ldc);

/// c[i*ldc + j] = sum_p a[i*lda + p] * b[p*ldb + j]           (C = A B, overwrite)
using GemmNnFn = void (*)(std::size_t m, std::size_t n, std::size_t k, const float* a,
                          std::size_t lda, const float* b, std::size_t ldb, float* c,
                          std::size_t ldc);

/// In-place max-subtracted softmax over each of `rows` rows of length `cols`.
/// Entries equal to -inf receive weight exactly 0. A row that is entirely
/// -inf is left as all zeros.
using SoftmaxRowsFn = void (*)(float* x, std::size_t rows, std::size_t cols, std::size_t ld);

using DotFn = float (*)(const float* a, const float* b, std::size_t n);

/// y += alpha * x
using AxpyFn = void (*)(float alpha, const float* x, float* y, std::size_t n);

struct KernelTable {
  std::string_view name;
  GemmNtFn gemm_nt;
  GemmNnFn gemm_nn;
  SoftmaxRowsFn softmax_rows;
  DotFn dot;
  AxpyFn axpy;
};

const KernelTable& scalar_table();

/// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// The table chosen for this process (best supported ISA unless overridden).
const KernelTable& active();

/// Switch the process-wide table. Intended for tests and benchmarks; not
/// safe to call while kernels are running on other threads.
void set_active(const KernelTable& table);

}  // namespace mvattn::kernels
