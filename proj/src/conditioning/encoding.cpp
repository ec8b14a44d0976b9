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

std::vector<double> positional_encode(double value, std::size_t dims, double max_period) {
  if (dims == 0 || dims % 2 != 0) throw InvalidArgument("positional encoding needs a positive even dim");
  if (!(max_period > 0.0)) throw InvalidArgument("max_period must be > 0");
  const std::size_t half = dims / 2;
  std::vector<double> out(dims);
  for (std::size_t i = 0; i < half; ++i) {
    const double exponent = half == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(half - 1);
    const double freq = std::pow(max_period, -exponent);
    out[i] = std::sin(value * freq);
    out[half + i] = std::cos(value * freq);
  }
  return out;
}

std::vector<double> condition_embedding(const PosePrediction& pred, std::span<const double> time_emb,
                                        std::size_t dims, double max_period) {
  const auto elev = positional_encode(pred.elevation_deg * kElevationEncodingScale, dims, max_period);
  const auto focal = positional_encode(pred.focal_norm, dims, max_period);
  std::vector<double> out(time_emb.begin(), time_emb.end());
  out.insert(out.end(), elev.begin(), elev.end());
  out.insert(out.end(), focal.begin(), focal.end());
  return out;
}

PosePrediction cfg_average_pose(const StepTrace& trace) {
  if (trace.conditional.empty()) throw InvalidArgument("cfg_average_pose: empty trace");
  if (trace.conditional.size() != trace.unconditional.size())
    throw InvalidArgument("cfg_average_pose: conditional and unconditional traces differ in length");
  if (!(trace.cfg_weight >= 0.0)) throw InvalidArgument("cfg weight must be >= 0");
  const double w = trace.cfg_weight;
  PosePrediction sum;
  for (std::size_t t = 0; t < trace.conditional.size(); ++t) {
    const PosePrediction& c = trace.conditional[t];
    const PosePrediction& u = trace.unconditional[t];
    sum.elevation_deg += (1.0 + w) * c.elevation_deg - w * u.elevation_deg;
    sum.focal_norm += (1.0 + w) * c.focal_norm - w * u.focal_norm;
  }
  const double steps = static_cast<double>(trace.conditional.size());
  return {sum.elevation_deg / steps, sum.focal_norm / steps};
}

}  // namespace mvattn::conditioning
