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
#include <random>
#include <string>

#include "mvattn/error.hpp"
#include "mvattn/geometry.hpp"

namespace mvattn::geometry {

double normalize_azimuth(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;  // fmod of a tiny negative can round up to 360
  return r;
}

CanonicalRig CanonicalRig::make(double reference_azimuth_deg, double ortho_scale, double distance) {
  std::vector<CameraModel> views;
  views.reserve(kRigAzimuthOffsets.size());
  for (double offset : kRigAzimuthOffsets) {
    views.push_back(CameraModel::orthographic(ortho_scale, normalize_azimuth(reference_azimuth_deg + offset), 0.0,
                                              distance));
  }
  return from_views(reference_azimuth_deg, ortho_scale, std::move(views));
}

CanonicalRig CanonicalRig::from_views(double reference_azimuth_deg, double ortho_scale,
                                      std::vector<CameraModel> views) {
  if (!std::isfinite(reference_azimuth_deg)) throw InvalidArgument("reference azimuth must be finite");
  if (!(ortho_scale > 0.0)) throw InvalidArgument("rig ortho_scale must be > 0");
  if (views.size() != kRigAzimuthOffsets.size())
    throw InvalidArgument("canonical rig needs exactly 6 views, got " + std::to_string(views.size()));
  for (std::size_t i = 0; i < views.size(); ++i) {
    const CameraModel& v = views[i];
    v.validate();
    if (v.kind != CameraKind::orthographic) throw InvalidArgument("rig view " + std::to_string(i) + " is not orthographic");
    if (v.elevation_deg != 0.0) throw InvalidArgument("rig view " + std::to_string(i) + " has non-zero elevation");
    if (v.ortho_scale != ortho_scale) throw InvalidArgument("rig view " + std::to_string(i) + " has a different ortho_scale");
    const double expected = normalize_azimuth(reference_azimuth_deg + kRigAzimuthOffsets[i]);
    double diff = std::abs(normalize_azimuth(v.azimuth_deg) - expected);
    diff = std::min(diff, 360.0 - diff);
    if (diff > 1e-9) throw InvalidArgument("rig view " + std::to_string(i) + " azimuth does not match its offset");
  }
  CanonicalRig rig;
  rig.reference_azimuth_deg_ = reference_azimuth_deg;
  rig.ortho_scale_ = ortho_scale;
  rig.views_ = std::move(views);
  return rig;
}

std::vector<CameraModel> CanonicalRig::perturbed(std::size_t view, double elevation_deg) const {
  if (view >= views_.size()) throw InvalidArgument("perturbed: view index out of range");
  std::vector<CameraModel> out(views_.begin(), views_.end());
  out[view].elevation_deg = elevation_deg;
  out[view].validate();
  return out;
}

double max_row_deviation(std::span<const CameraModel> views, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::vector<Vec2> projected(views.size());

  double worst = 0.0;
  std::size_t accepted = 0;
  // Rejection sampling; bounded so an impossible frustum cannot spin forever.
  for (std::size_t attempt = 0; accepted < samples && attempt < samples * 1000 + 1000; ++attempt) {
    const Vec3 p(coord(rng), coord(rng), coord(rng));
    if (p.squaredNorm() > 1.0) continue;
    bool visible = true;
    for (std::size_t i = 0; i < views.size() && visible; ++i) {
      try {
        projected[i] = project(views[i], p);
      } catch (const BehindCamera&) {
        visible = false;
        break;
      }
      visible = projected[i].cwiseAbs().maxCoeff() <= 1.0;
    }
    if (!visible) continue;
    ++accepted;
    for (std::size_t a = 0; a < views.size(); ++a)
      for (std::size_t b = 0; b < views.size(); ++b)
        if (a != b) worst = std::max(worst, std::abs(projected[a].y() - projected[b].y()));
  }
  return worst;
}

double verify_row_alignment(const CanonicalRig& rig, std::size_t samples, std::uint64_t seed) {
  return max_row_deviation(rig.views(), samples, seed);
}

}  // namespace mvattn::geometry
