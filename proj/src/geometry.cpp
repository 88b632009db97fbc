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

#include "afdet/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "afdet/errors.hpp"

namespace afdet {

std::string_view class_name(ClassId c) {
  switch (c) {
    case ClassId::kVehicle:
      return "VEHICLE";
    case ClassId::kPedestrian:
      return "PEDESTRIAN";
    case ClassId::kCyclist:
      return "CYCLIST";
  }
  throw InvariantError("unknown class id");
}

ClassId parse_class(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  for (ClassId c : kAllClasses)
    if (upper == class_name(c)) return c;
  throw InputError("unknown class name '" + std::string(name) + "'");
}

ClassId class_from_index(std::size_t i) {
  if (i >= kNumClasses) throw InputError("class index " + std::to_string(i) + " out of range");
  return static_cast<ClassId>(i);
}

bool is_valid(const Box3D& b) {
  const bool finite = std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.cz) &&
                      std::isfinite(b.l) && std::isfinite(b.w) && std::isfinite(b.h) &&
                      std::isfinite(b.yaw);
  return finite && b.l > 0.0 && b.w > 0.0 && b.h > 0.0 && b.yaw >= -std::numbers::pi &&
         b.yaw <= std::numbers::pi && class_index(b.cls) < kNumClasses;
}

Box3D make_box(double cx, double cy, double cz, double l, double w, double h, double yaw,
               ClassId cls) {
  Box3D b{cx, cy, cz, l, w, h, wrap_angle(yaw), cls};
  if (!is_valid(b)) throw InputError("invalid box: sizes must be positive and values finite");
  return b;
}

double PolygonBEV::area() const {
  const std::size_t n = vertices.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = vertices[i];
    const Vec2& q = vertices[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * twice;
}

PolygonBEV box_corners_bev(const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.l;
  const double hw = 0.5 * box.w;
  const std::array<Vec2, 4> local = {{{hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}}};
  PolygonBEV poly;
  poly.vertices.reserve(4);
  for (const Vec2& v : local)
    poly.vertices.push_back({box.cx + c * v.x - s * v.y, box.cy + s * v.x + c * v.y});
  return poly;
}

namespace {

// > 0 when p is left of the directed edge a->b.
double side(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

Vec2 edge_intersection(const Vec2& p, const Vec2& q, double sp, double sq) {
  const double t = sp / (sp - sq);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

}  // namespace

PolygonBEV clip_convex(const PolygonBEV& subject, const PolygonBEV& clip) {
  std::vector<Vec2> out = subject.vertices;
  const std::size_t m = clip.vertices.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Vec2& a = clip.vertices[e];
    const Vec2& b = clip.vertices[(e + 1) % m];
    std::vector<Vec2> in = std::move(out);
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& cur = in[i];
      const Vec2& nxt = in[(i + 1) % n];
      const double sc = side(a, b, cur);
      const double sn = side(a, b, nxt);
      if (sc >= 0.0) {
        out.push_back(cur);
        if (sn < 0.0) out.push_back(edge_intersection(cur, nxt, sc, sn));
      } else if (sn >= 0.0) {
        out.push_back(edge_intersection(cur, nxt, sc, sn));
      }
    }
  }
  return PolygonBEV{std::move(out)};
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  // Cheap reject on circumscribed circles.
  const double ra = 0.5 * std::hypot(a.l, a.w);
  const double rb = 0.5 * std::hypot(b.l, b.w);
  if (std::hypot(a.cx - b.cx, a.cy - b.cy) > ra + rb) return 0.0;
  const double area = clip_convex(box_corners_bev(a), box_corners_bev(b)).area();
  return area < kMinOverlapArea ? 0.0 : area;
}

double iou_bev_rotated(const Box3D& a, const Box3D& b) {
  const double inter = bev_intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.l * a.w + b.l * b.w - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d_axis_aligned(const Box3D& a, const Box3D& b) {
  auto overlap = [](double ca, double sa, double cb, double sb) {
    const double lo = std::max(ca - 0.5 * sa, cb - 0.5 * sb);
    const double hi = std::min(ca + 0.5 * sa, cb + 0.5 * sb);
    return std::max(0.0, hi - lo);
  };
  const double inter = overlap(a.cx, a.l, b.cx, b.l) * overlap(a.cy, a.w, b.cy, b.w) *
                       overlap(a.cz, a.h, b.cz, b.h);
  if (inter <= 0.0) return 0.0;
  const double uni = a.l * a.w * a.h + b.l * b.w * b.h - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool point_in_box(double x, double y, double z, const Box3D& box) {
  const double dx = x - box.cx;
  const double dy = y - box.cy;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  const double lz = z - box.cz;
  return std::abs(lx) <= 0.5 * box.l + kBoxBoundaryEps &&
         std::abs(ly) <= 0.5 * box.w + kBoxBoundaryEps &&
         std::abs(lz) <= 0.5 * box.h + kBoxBoundaryEps;
}

Point to_box_local(const Point& p, const Box3D& box) {
  const double dx = p.x - box.cx;
  const double dy = p.y - box.cy;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  Point q = p;
  q.x = c * dx + s * dy;
  q.y = -s * dx + c * dy;
  q.z = p.z - box.cz;
  return q;
}

Point from_box_local(const Point& p, const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  Point q = p;
  q.x = box.cx + c * p.x - s * p.y;
  q.y = box.cy + s * p.x + c * p.y;
  q.z = box.cz + p.z;
  return q;
}

}  // namespace afdet
