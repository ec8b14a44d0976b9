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
#include <limits>
#include <utility>

#include "mvattn/error.hpp"
#include "mvattn/geometry.hpp"

namespace mvattn::geometry {
namespace {

// Below this the projected optical-axis direction is treated as zero.
constexpr double kParallelAxisTol = 1e-12;

Mat3 intrinsics_inverse(const CameraModel& cam) {
  Mat3 k = Mat3::Identity();
  k(0, 0) = 1.0 / cam.focal_mm;
  k(1, 1) = 1.0 / cam.focal_mm;
  return k;
}

}  // namespace

double EpipolarLine::distance(const Vec2& p) const {
  return (a * p.x() + b * p.y() + c) / std::hypot(a, b);
}

EssentialMatrix essential_matrix(const Pose& rel) {
  if (!is_rotation(rel.rotation)) throw InvalidArgument("essential_matrix: rotation is not orthonormal with det +1");
  return EssentialMatrix{skew(rel.translation) * rel.rotation};
}

EssentialMatrix pair_matrix(const CameraModel& view_a, const CameraModel& view_b) {
  if (view_a.kind != view_b.kind) throw InvalidArgument("pair_matrix: cameras must be of the same kind");
  const Pose rel = relative_pose(view_a, view_b);

  if (view_a.kind == CameraKind::perspective) {
    const EssentialMatrix e = essential_matrix(rel);
    return EssentialMatrix{intrinsics_inverse(view_b).transpose() * e.matrix * intrinsics_inverse(view_a)};
  }

  // Orthographic: a pixel of view a is the ray (x, y, z), z free. In view b it
  // becomes R (x, y, 0) + t + z R e3, whose image is a line with direction
  // (R e3)_xy. n is that direction's normal.
  const Vec3 axis = rel.rotation.col(2);
  const Vec2 n(-axis.y(), axis.x());
  const Eigen::Matrix2d r22 = rel.rotation.topLeftCorner<2, 2>();
  const Vec2 m = r22.transpose() * n;
  const double sa = view_a.ortho_scale;
  const double sb = view_b.ortho_scale;
  Mat3 f = Mat3::Zero();
  f(0, 2) = n.x() / sb;
  f(1, 2) = n.y() / sb;
  f(2, 0) = -m.x() / sa;
  f(2, 1) = -m.y() / sa;
  f(2, 2) = -n.dot(rel.translation.head<2>());
  return EssentialMatrix{f};
}

EpipolarLine epipolar_line(const EssentialMatrix& e, const Vec2& x1) {
  const Vec3 l = e.matrix * Vec3(x1.x(), x1.y(), 1.0);
  if (l.x() == 0.0 && l.y() == 0.0) throw DegenerateLine("epipolar line is undefined (E x1 has no direction)");
  return EpipolarLine{l.x(), l.y(), l.z()};
}

PairGeometry::PairGeometry(const CameraModel& view_a, const CameraModel& view_b)
    : rel_(relative_pose(view_a, view_b)), matrix_(pair_matrix(view_a, view_b)) {
  if (view_a.kind == CameraKind::orthographic) {
    scale_a_ = view_a.ortho_scale;
    scale_b_ = view_b.ortho_scale;
    parallel_axes_ = rel_.rotation.col(2).head<2>().norm() < kParallelAxisTol;
  }
}

Correspondence PairGeometry::at(const Vec2& pixel_a) const {
  Correspondence out;
  if (parallel_axes_) {
    const Vec3 on_ray = rel_.apply(Vec3(pixel_a.x() / scale_a_, pixel_a.y() / scale_a_, 0.0));
    out.point = scale_b_ * on_ray.head<2>();
    return out;
  }
  out.line = epipolar_line(matrix_, pixel_a);
  return out;
}

Correspondence correspondence(const CameraModel& view_a, const CameraModel& view_b, const Vec2& pixel_a) {
  return PairGeometry(view_a, view_b).at(pixel_a);
}

double epipolar_residual(const EssentialMatrix& e, const Vec3& x1, const Vec3& x2) {
  const double norm = e.matrix.norm();
  if (norm == 0.0) return 0.0;
  return std::abs(x2.normalized().dot((e.matrix / norm) * x1.normalized()));
}

std::optional<std::array<Vec2, 2>> clip_to_image(const EpipolarLine& line) {
  const double norm = std::hypot(line.a, line.b);
  if (norm == 0.0) return std::nullopt;
  const Vec2 normal(line.a / norm, line.b / norm);
  const Vec2 origin = -(line.c / norm) * normal;
  const Vec2 dir(-normal.y(), normal.x());

  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 2; ++axis) {
    const double o = origin[axis];
    const double d = dir[axis];
    if (std::abs(d) < 1e-15) {
      if (std::abs(o) > 1.0) return std::nullopt;
      continue;
    }
    double t0 = (-1.0 - o) / d;
    double t1 = (1.0 - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_lo = std::max(t_lo, t0);
    t_hi = std::min(t_hi, t1);
  }
  if (!(t_lo <= t_hi)) return std::nullopt;

  std::array<Vec2, 2> seg{origin + t_lo * dir, origin + t_hi * dir};
  // Left to right (top to bottom for vertical lines) for a stable sample order.
  if (seg[0].x() > seg[1].x() || (seg[0].x() == seg[1].x() && seg[0].y() > seg[1].y())) std::swap(seg[0], seg[1]);
  return seg;
}

}  // namespace mvattn::geometry
