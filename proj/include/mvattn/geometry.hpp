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

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Camera models, the canonical six-view orthographic rig and the epipolar
// algebra that ties them together.
//
// Conventions
//   world:  right-handed, +y points down (gravity), object centred at the
//           origin inside the unit ball.
//   camera: +z looks from the camera centre towards the origin, +y down,
//           +x right. A camera at azimuth b and elevation a maps world points
//           as  P_cam = Rx(a) * Ry(b) * P_world + (0, 0, d).
//           Positive elevation places the camera above the equator (y < 0).
//   image:  normalized coordinates in [-1, 1] on both axes, y pointing down.
// Angles are degrees at the API boundary and radians internally.

namespace mvattn::geometry {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class CameraKind { orthographic, perspective };

const char* to_string(CameraKind kind);
CameraKind camera_kind_from_string(const std::string& s);

/// Rigid transform  P_b = rotation * P_a + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

/// True when R^T R = I and det R = +1 within `tol`.
bool is_rotation(const Mat3& r, double tol = 1e-9);

struct CameraModel {
  CameraKind kind = CameraKind::orthographic;
  double focal_mm = 0.0;     // perspective only
  double ortho_scale = 1.0;  // orthographic only
  double distance = 2.0;     // camera centre to the world origin
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;

  static CameraModel orthographic(double ortho_scale, double azimuth_deg, double elevation_deg = 0.0,
                                  double distance = 2.0);
  static CameraModel perspective(double focal_mm, double distance, double azimuth_deg,
                                 double elevation_deg = 0.0);
  /// Perspective camera placed at equivalent_distance(focal_mm, ortho_scale),
  /// so objects near the origin render at the orthographic size.
  static CameraModel perspective_equivalent(double focal_mm, double ortho_scale, double azimuth_deg,
                                            double elevation_deg = 0.0);

  /// Throws InvalidArgument when a field is out of range for `kind`.
  void validate() const;

  /// World-to-camera transform.
  Pose world_to_camera() const;

  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

/// Pure rotation about +y by `theta_deg`:
/// [[cos, 0, sin], [0, 1, 0], [-sin, 0, cos]], zero translation.
Pose azimuth_rotation(double theta_deg);

/// [t]x, so that skew(t) * v == t.cross(v).
Mat3 skew(const Vec3& t);

/// Transform taking view_a camera-frame coordinates to view_b camera-frame
/// coordinates.
Pose relative_pose(const CameraModel& view_a, const CameraModel& view_b);

/// Normalized image coordinates of a world point. Throws BehindCamera for a
/// perspective camera when the point has camera-frame z <= 0.
Vec2 project(const CameraModel& camera, const Vec3& world_point);

/// d = f / s. Throws InvalidArgument on non-positive input.
double equivalent_distance(double focal_mm, double ortho_scale);

/// Minimum focal length of the supported set; normalized focal is 24 / f.
inline constexpr double kMinFocalMm = 24.0;

/// 24 / f for perspective cameras, 0 for orthographic. Throws InvalidArgument
/// for perspective focal below 24 mm.
double normalize_focal(const CameraModel& camera);

// ---------------------------------------------------------------------------
// Epipolar algebra

struct EssentialMatrix {
  Mat3 matrix = Mat3::Zero();
};

/// a*x + b*y + c = 0 in image coordinates.
struct EpipolarLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  /// Signed distance of (x, y) to the line, in image units.
  double distance(const Vec2& p) const;
};

/// E = [t]x R for a calibrated (pinhole) pair. Throws InvalidArgument when
/// rel.rotation is not a proper rotation.
EssentialMatrix essential_matrix(const Pose& rel);

/// Bilinear form between the normalized image coordinates of two cameras of
/// the same kind: x_b^T M x_a = 0 for every true correspondence.
///   perspective:  K_b^-T [t]x R K_a^-1 with K = diag(f, f, 1)
///   orthographic: the affine form derived from P_b = R P_a + t with the
///                 depth along each ray eliminated; it vanishes when the two
///                 optical axes are parallel (rays map to single points).
/// Throws InvalidArgument for mixed kinds.
EssentialMatrix pair_matrix(const CameraModel& view_a, const CameraModel& view_b);

/// l = E x1 with x1 = (u, v, 1). Throws DegenerateLine when E x1 is the zero
/// vector (x1 is the epipole, or the pair is degenerate).
EpipolarLine epipolar_line(const EssentialMatrix& e, const Vec2& x1);

/// Where a pixel of view_a can appear in view_b: a line in general, or a
/// single point for orthographic views whose optical axes are parallel.
struct Correspondence {
  std::optional<EpipolarLine> line;
  std::optional<Vec2> point;
};

/// Precomputed relative geometry of an ordered view pair, for repeated
/// correspondence queries.
class PairGeometry {
 public:
  PairGeometry(const CameraModel& view_a, const CameraModel& view_b);

  /// Throws DegenerateLine when the pixel has no epipolar line.
  Correspondence at(const Vec2& pixel_a) const;

 private:
  Pose rel_;
  EssentialMatrix matrix_;
  double scale_a_ = 1.0;
  double scale_b_ = 1.0;
  bool parallel_axes_ = false;
};

Correspondence correspondence(const CameraModel& view_a, const CameraModel& view_b, const Vec2& pixel_a);

/// |x2^T E x1| / (|x1| |x2| |E|_F): the epipolar residual on unit-normalized
/// inputs. Zero matrices give 0.
double epipolar_residual(const EssentialMatrix& e, const Vec3& x1, const Vec3& x2);

/// Line clipped to the image square [-1, 1]^2; nullopt when it misses.
std::optional<std::array<Vec2, 2>> clip_to_image(const EpipolarLine& line);

/// Camera-frame homogeneous ray direction for a perspective pixel,
/// (u / f, v / f, 1).
Vec3 calibrated(const CameraModel& camera, const Vec2& pixel);

// ---------------------------------------------------------------------------
// Canonical rig

/// Azimuth offsets of the six generated views, in this order.
inline constexpr std::array<double, 6> kRigAzimuthOffsets{0.0, 45.0, 90.0, -45.0, -90.0, 180.0};

/// Maps an angle into [0, 360).
double normalize_azimuth(double deg);

class CanonicalRig {
 public:
  /// Six orthographic views at elevation 0 and azimuths beta + offsets.
  static CanonicalRig make(double reference_azimuth_deg, double ortho_scale, double distance = 2.0);

  /// Validates the rig invariants; throws InvalidArgument otherwise.
  static CanonicalRig from_views(double reference_azimuth_deg, double ortho_scale,
                                 std::vector<CameraModel> views);

  double reference_azimuth_deg() const { return reference_azimuth_deg_; }
  double ortho_scale() const { return ortho_scale_; }
  std::span<const CameraModel> views() const { return views_; }

  /// Copy of the views with one view's elevation changed. The result is no
  /// longer a canonical rig, hence a plain vector.
  std::vector<CameraModel> perturbed(std::size_t view, double elevation_deg) const;

  friend bool operator==(const CanonicalRig&, const CanonicalRig&) = default;

 private:
  CanonicalRig() = default;

  double reference_azimuth_deg_ = 0.0;
  double ortho_scale_ = 1.0;
  std::vector<CameraModel> views_;
};

/// Largest |v_a - v_b| over `samples` random points of the unit ball (kept
/// only when visible in every view) and every ordered pair of views.
double max_row_deviation(std::span<const CameraModel> views, std::size_t samples, std::uint64_t seed);

/// Row alignment check on a canonical rig.
double verify_row_alignment(const CanonicalRig& rig, std::size_t samples, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Rig file (JSON)
//   {"reference_azimuth_deg": b, "ortho_scale": s,
//    "views": [{"kind", "azimuth_deg", "elevation_deg", "focal_mm"?, "distance"?}, ...]}

std::string rig_to_json(const CanonicalRig& rig);
CanonicalRig rig_from_json(const std::string& text);
void save_rig(const CanonicalRig& rig, const std::string& path);
CanonicalRig load_rig(const std::string& path);

}  // namespace mvattn::geometry
