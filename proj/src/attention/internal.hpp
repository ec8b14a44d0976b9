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

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

#include "mvattn/attention.hpp"

namespace mvattn::attention::detail {

/// out[i] = softmax(scale * q_i K^T + mask_i) V for nq queries over nk keys
/// of width `dim`. All operands are row-major with the given leading
/// dimensions. `scores` is resized to hold nq * nk floats.
void attend(const float* q, std::size_t ldq, std::size_t nq, const float* k, std::size_t ldk, const float* v,
            std::size_t ldv, std::size_t nk, std::size_t dim, float scale, const float* mask, std::size_t ldm,
            float* out, std::size_t ldo, std::vector<float>& scores);

/// Runs fn(unit, worker) for unit in [0, count). Units are assigned in
/// contiguous blocks; each unit's arithmetic is independent of the split.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i, std::size_t{0});
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    pool.emplace_back([&fn, begin, end, w] {
      for (std::size_t i = begin; i < end; ++i) fn(i, w);
    });
  }
  for (auto& t : pool) t.join();
}

void require_finite(const FeatureGrid& grid, const char* what);

}  // namespace mvattn::attention::detail
