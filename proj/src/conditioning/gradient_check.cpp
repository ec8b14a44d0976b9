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
#include <cmath>

#include "mvattn/conditioning.hpp"
#include "mvattn/error.hpp"

namespace mvattn::conditioning {
namespace {

// Gradient entries smaller than this (times the loss scale) are compared in
// absolute terms. Central differences lose about eps * loss / h to cancellation,
// so the floor has to grow with the loss or tiny entries report pure noise.
constexpr double kRelativeFloor = 1e-6;

double loss_of(const PoseRegressor& r, const HiddenFeatureMap& h, const PosePrediction& gt) {
  return regression_loss(regress_pose_raw(h, r.elevation, r.focal), gt);
}

// The loss is a sum of one squared term per head, so each head's parameters
// only move their own term. Differencing that term alone keeps the focal
// entries clear of the much larger elevation term.
double term_of(const PoseRegressor& r, const HiddenFeatureMap& h, const PosePrediction& gt, bool elevation) {
  const PosePrediction p = regress_pose_raw(h, r.elevation, r.focal);
  const double d = elevation ? p.elevation_deg - gt.elevation_deg : p.focal_norm - gt.focal_norm;
  return d * d;
}

}  // namespace

std::vector<double> loss_gradient(const PoseRegressor& r, const HiddenFeatureMap& h, const PosePrediction& gt) {
  const PosePrediction pred = regress_pose_raw(h, r.elevation, r.focal);
  const Eigen::VectorXd pooled = avg_pool(h);
  // d/d(pred) of (pred - gt)^2 is 2 (pred - gt).
  std::vector<double> grad = r.elevation.backward(pooled, 2.0 * (pred.elevation_deg - gt.elevation_deg));
  const std::vector<double> focal = r.focal.backward(pooled, 2.0 * (pred.focal_norm - gt.focal_norm));
  grad.insert(grad.end(), focal.begin(), focal.end());
  return grad;
}

GradientCheck gradient_check(const PoseRegressor& r, const HiddenFeatureMap& h, const PosePrediction& gt,
                             double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be > 0");
  const std::vector<double> analytic = loss_gradient(r, h, gt);

  PoseRegressor probe = r;
  std::vector<double> elev = r.elevation.parameters();
  std::vector<double> focal = r.focal.parameters();
  const std::size_t n_elev = elev.size();

  GradientCheck out;
  out.parameters = analytic.size();
  out.loss = loss_of(r, h, gt);
  const double elev_scale = std::max(1.0, term_of(r, h, gt, true));
  const double focal_scale = std::max(1.0, term_of(r, h, gt, false));
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const bool is_elev = i < n_elev;
    std::vector<double>& params = is_elev ? elev : focal;
    MLPRegressor& head = is_elev ? probe.elevation : probe.focal;
    const std::size_t j = is_elev ? i : i - n_elev;

    const double saved = params[j];
    const double hstep = step * std::max(1.0, std::abs(saved));
    params[j] = saved + hstep;
    head.set_parameters(params);
    const double up = term_of(probe, h, gt, is_elev);
    params[j] = saved - hstep;
    head.set_parameters(params);
    const double down = term_of(probe, h, gt, is_elev);
    params[j] = saved;
    head.set_parameters(params);

    const double numeric = (up - down) / (2.0 * hstep);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kRelativeFloor * (is_elev ? elev_scale : focal_scale)});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(analytic[i] - numeric) / denom);
  }
  return out;
}

}  // namespace mvattn::conditioning
