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

#include "mvattn/conditioning.hpp"
#include "mvattn/error.hpp"

namespace mvattn::conditioning {

NoiseSchedule noise_schedule(ScheduleKind kind, std::size_t steps, double beta_start, double beta_end) {
  if (steps < 2) throw InvalidArgument("noise schedule needs at least 2 steps");
  if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0))
    throw InvalidArgument("noise schedule needs 0 < beta_start < beta_end < 1");

  NoiseSchedule s{kind, steps, beta_start, beta_end, std::vector<double>(steps)};
  const double last = static_cast<double>(steps - 1);
  if (kind == ScheduleKind::linear) {
    for (std::size_t i = 0; i < steps; ++i) s.betas[i] = beta_start + (static_cast<double>(i) / last) * (beta_end - beta_start);
  } else {
    const double lo = std::sqrt(beta_start);
    const double hi = std::sqrt(beta_end);
    for (std::size_t i = 0; i < steps; ++i) {
      const double r = lo + (static_cast<double>(i) / last) * (hi - lo);
      s.betas[i] = r * r;
    }
  }
  // sqrt/square round trips can land an ulp off; endpoints are exact by contract.
  s.betas.front() = beta_start;
  s.betas.back() = beta_end;
  return s;
}

}  // namespace mvattn::conditioning
