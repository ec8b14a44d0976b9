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
#include <numbers>
#include <string>

#include <Eigen/LU>

#include "mvattn/error.hpp"
#include "mvattn/geometry.hpp"

namespace mvattn::geometry {
namespace {

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

// Exact values at multiples of 90 degrees keep quarter turns free of
// 6e-17-sized residue.
void sincos_deg(double deg, double& s, double& c) {
  const double r = std::fmod(deg, 360.0);
  const double q = r / 90.0;
  if (q == std::floor(q)) {
    const int k = ((static_cast<int>(q) % 4) + 4) % 4;
    constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
    constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
    s = kSin[k];
    c = kCos[k];
    return;
  }
  s = std::sin(radians(r));
  c = std::cos(radians(r));
}

Mat3 rotation_y(double deg) {
  double s, c;
  sincos_deg(deg, s, c);
  Mat3 r;
  r << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return r;
}

// Tilts the optical axis down towards the origin for positive elevation.
Mat3 rotation_x(double deg) {
  double s, c;
  sincos_deg(deg, s, c);
  Mat3 r;
  r << 1.0, 0.0, 0.0,
       0.0, c, -s,
       0.0, s, c;
  return r;
}

}  // namespace

const char* to_string(CameraKind kind) {
  return kind == CameraKind::orthographic ? "orthographic" : "perspective";
}

CameraKind camera_kind_from_string(const std::string& s) {
  if (s == "orthographic") return CameraKind::orthographic;
  if (s == "perspective") return CameraKind::perspective;
  throw InvalidArgument("unknown camera kind '" + s + "'");
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

CameraModel CameraModel::orthographic(double ortho_scale, double azimuth_deg, double elevation_deg,
                                      double distance) {
  CameraModel cam;
  cam.kind = CameraKind::orthographic;
  cam.ortho_scale = ortho_scale;
  cam.distance = distance;
  cam.azimuth_deg = azimuth_deg;
  cam.elevation_deg = elevation_deg;
  cam.validate();
  return cam;
}

CameraModel CameraModel::perspective(double focal_mm, double distance, double azimuth_deg,
                                     double elevation_deg) {
  CameraModel cam;
  cam.kind = CameraKind::perspective;
  cam.focal_mm = focal_mm;
  cam.distance = distance;
  cam.azimuth_deg = azimuth_deg;
  cam.elevation_deg = elevation_deg;
  cam.validate();
  return cam;
}

CameraModel CameraModel::perspective_equivalent(double focal_mm, double ortho_scale, double azimuth_deg,
                                                double elevation_deg) {
  return perspective(focal_mm, equivalent_distance(focal_mm, ortho_scale), azimuth_deg, elevation_deg);
}

void CameraModel::validate() const {
  if (!(distance > 0.0) || !std::isfinite(distance)) throw InvalidArgument("camera distance must be > 0");
  if (!(elevation_deg >= -90.0 && elevation_deg <= 90.0))
    throw InvalidArgument("elevation must lie in [-90, 90] degrees");
  if (!std::isfinite(azimuth_deg)) throw InvalidArgument("azimuth must be finite");
  if (kind == CameraKind::orthographic) {
    if (!(ortho_scale > 0.0) || !std::isfinite(ortho_scale))
      throw InvalidArgument("orthographic scale must be > 0");
  } else if (!(focal_mm > 0.0) || !std::isfinite(focal_mm)) {
    throw InvalidArgument("focal length must be > 0");
  }
}

Pose CameraModel::world_to_camera() const {
  Pose pose;
  pose.rotation = rotation_x(elevation_deg) * rotation_y(azimuth_deg);
  pose.translation = Vec3(0.0, 0.0, distance);
  return pose;
}

Pose azimuth_rotation(double theta_deg) {
  Pose pose;
  pose.rotation = rotation_y(theta_deg);
  return pose;
}

Mat3 skew(const Vec3& t) {
  Mat3 m;
  m << 0.0, -t.z(), t.y(),
       t.z(), 0.0, -t.x(),
       -t.y(), t.x(), 0.0;
  return m;
}

Pose relative_pose(const CameraModel& view_a, const CameraModel& view_b) {
  const Pose a = view_a.world_to_camera();
  const Pose b = view_b.world_to_camera();
  Pose rel;
  rel.rotation = b.rotation * a.rotation.transpose();
  rel.translation = b.translation - rel.rotation * a.translation;
  return rel;
}

Vec2 project(const CameraModel& camera, const Vec3& world_point) {
  const Vec3 p = camera.world_to_camera().apply(world_point);
  if (camera.kind == CameraKind::orthographic) return camera.ortho_scale * p.head<2>();
  if (!(p.z() > 0.0)) throw BehindCamera("point is not in front of the perspective camera");
  return camera.focal_mm * p.head<2>() / p.z();
}

double equivalent_distance(double focal_mm, double ortho_scale) {
  if (!(focal_mm > 0.0) || !(ortho_scale > 0.0))
    throw InvalidArgument("equivalent_distance needs positive focal length and scale");
  return focal_mm / ortho_scale;
}

double normalize_focal(const CameraModel& camera) {
  if (camera.kind == CameraKind::orthographic) return 0.0;
  if (!(camera.focal_mm >= kMinFocalMm))
    throw InvalidArgument("focal length " + std::to_string(camera.focal_mm) + " mm is below the 24 mm minimum");
  return kMinFocalMm / camera.focal_mm;
}

Vec3 calibrated(const CameraModel& camera, const Vec2& pixel) {
  if (camera.kind != CameraKind::perspective) throw InvalidArgument("calibrated() needs a perspective camera");
  return Vec3(pixel.x() / camera.focal_mm, pixel.y() / camera.focal_mm, 1.0);
}

}  // namespace mvattn::geometry
