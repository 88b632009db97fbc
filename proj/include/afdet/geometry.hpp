// Copyright 2026 The AFDet Pipeline Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "afdet/types.hpp"

namespace afdet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Convex, counter-clockwise polygon in the BEV plane.
struct PolygonBEV {
  std::vector<Vec2> vertices;

  double area() const;
};

// Intersections below this area (m^2) are treated as empty.
inline constexpr double kMinOverlapArea = 1e-12;

// Slack applied to half-extents in point_in_box so that points placed exactly on
// a face survive floating-point rotation round-off.
inline constexpr double kBoxBoundaryEps = 1e-9;

// Four corners of the yaw-rotated l x w rectangle, CCW, starting at the
// front-right corner (+l/2, -w/2) in the box frame.
PolygonBEV box_corners_bev(const Box3D& box);

// Sutherland-Hodgman clip of a convex polygon against a convex CCW clip polygon.
PolygonBEV clip_convex(const PolygonBEV& subject, const PolygonBEV& clip);

double bev_intersection_area(const Box3D& a, const Box3D& b);

// Rotated BEV IoU in [0, 1].
double iou_bev_rotated(const Box3D& a, const Box3D& b);

// 3D IoU with yaw dropped: each box is center +/- size/2 along the world axes.
double iou_3d_axis_aligned(const Box3D& a, const Box3D& b);

// Inclusive containment test in the yaw-rotated box frame.
bool point_in_box(double x, double y, double z, const Box3D& box);
inline bool point_in_box(const Point& p, const Box3D& box) {
  return point_in_box(p.x, p.y, p.z, box);
}

// World -> box-local (center at origin, yaw 0) and back; only x, y, z change.
Point to_box_local(const Point& p, const Box3D& box);
Point from_box_local(const Point& p, const Box3D& box);

}  // namespace afdet
