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

#include "afdet/targets.hpp"

#include <algorithm>
#include <cmath>

#include "afdet/errors.hpp"
#include "afdet/geometry.hpp"
#include "afdet/io.hpp"

namespace afdet {

void HeadConfig::validate() const {
  if (out_stride < 1) throw InputError("head out_stride must be >= 1");
  if (num_classes < 1) throw InputError("head num_classes must be >= 1");
  if (min_radius_center < 1 || min_radius_keypoint < 1)
    throw InputError("minimum Gaussian radii must be >= 1");
  if (!(gaussian_overlap > 0.0 && gaussian_overlap < 1.0))
    throw InputError("gaussian_overlap must lie in (0, 1)");
}

OutputGrid output_grid(const VoxelGrid& grid, const HeadConfig& cfg) {
  OutputGrid g;
  const auto& d = grid.dims();
  g.width = (d[0] + cfg.out_stride - 1) / cfg.out_stride;
  g.height = (d[1] + cfg.out_stride - 1) / cfg.out_stride;
  g.cell_x = grid.cell()[0] * cfg.out_stride;
  g.cell_y = grid.cell()[1] * cfg.out_stride;
  g.min_x = grid.range().min[0];
  g.min_y = grid.range().min[1];
  return g;
}

TargetSet::TargetSet(std::size_t num_classes, std::size_t height, std::size_t width)
    : heatmap(num_classes, height, width),
      keypoint_heatmap(num_classes, height, width),
      offset(2, height, width),
      z(1, height, width),
      size(3, height, width),
      yaw(2, height, width),
      iou(1, height, width),
      reg_mask(height * width, 0) {}

double gaussian_radius_raw(double len_cells, double wid_cells, double overlap) {
  if (!(len_cells > 0.0 && wid_cells > 0.0)) throw InputError("Gaussian radius needs positive extents");
  if (!(overlap > 0.0 && overlap < 1.0)) throw InputError("Gaussian overlap must lie in (0, 1)");
  const double h = len_cells;
  const double w = wid_cells;
  const double o = overlap;

  // Both corners displaced by r: r^2 - (h + w) r + hw (1 - o) / (1 + o) = 0.
  const double b1 = h + w;
  const double c1 = h * w * (1.0 - o) / (1.0 + o);
  const double r1 = (b1 - std::sqrt(b1 * b1 - 4.0 * c1)) / 2.0;

  // Box shrunk by r on every side: 4 r^2 - 2 (h + w) r + (1 - o) hw = 0.
  const double b2 = 2.0 * (h + w);
  const double c2 = (1.0 - o) * h * w;
  const double r2 = (b2 - std::sqrt(b2 * b2 - 16.0 * c2)) / 8.0;

  // Box grown by r on every side: 4 o r^2 + 2 o (h + w) r + (o - 1) hw = 0.
  const double a3 = 4.0 * o;
  const double b3 = 2.0 * o * (h + w);
  const double c3 = (o - 1.0) * h * w;
  const double r3 = (-b3 + std::sqrt(b3 * b3 - 4.0 * a3 * c3)) / (2.0 * a3);

  return std::min({r1, r2, r3});
}

int gaussian_radius(double len_cells, double wid_cells, double overlap, int min_radius) {
  const double r = std::floor(gaussian_radius_raw(len_cells, wid_cells, overlap));
  return std::max(min_radius, static_cast<int>(r));
}

int keypoint_radius(double len_cells, double wid_cells, double overlap, int min_radius) {
  const double r = std::floor(0.5 * gaussian_radius_raw(len_cells, wid_cells, overlap));
  return std::max(min_radius, static_cast<int>(r));
}

void draw_gaussian(std::span<double> plane, std::size_t height, std::size_t width,
                   std::size_t u, std::size_t v, int radius) {
  if (radius < 1) throw InputError("Gaussian radius must be >= 1");
  if (u >= width || v >= height) throw InputError("Gaussian center outside the map");
  if (plane.size() != height * width) throw InvariantError("draw_gaussian: plane size mismatch");
  const double sigma = (2.0 * radius + 1.0) / 6.0;
  const double denom = 2.0 * sigma * sigma;
  const long r = radius;
  const long cu = static_cast<long>(u);
  const long cv = static_cast<long>(v);
  for (long dv = -r; dv <= r; ++dv) {
    const long y = cv + dv;
    if (y < 0 || y >= static_cast<long>(height)) continue;
    for (long du = -r; du <= r; ++du) {
      const long x = cu + du;
      if (x < 0 || x >= static_cast<long>(width)) continue;
      const double g = std::exp(-static_cast<double>(du * du + dv * dv) / denom);
      double& cell = plane[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)];
      cell = std::max(cell, g);
    }
  }
}

double encode_iou_target(double iou) {
  if (!(iou >= 0.0 && iou <= 1.0)) throw InputError("IoU target must lie in [0, 1]");
  return 2.0 * (iou - 0.5);
}

double decode_iou_target(double encoded) { return encoded / 2.0 + 0.5; }

double iou_regression_target(const Box3D& predicted, const Box3D& ground_truth) {
  return encode_iou_target(iou_3d_axis_aligned(predicted, ground_truth));
}

TargetSet encode_targets(std::span<const Box3D> boxes, const VoxelGrid& grid,
                         const HeadConfig& cfg) {
  cfg.validate();
  const OutputGrid og = output_grid(grid, cfg);
  TargetSet t(cfg.num_classes, og.height, og.width);
  const std::size_t W = og.width;
  const std::size_t H = og.height;

  std::size_t encoded = 0;
  for (std::size_t id = 0; id < boxes.size(); ++id) {
    const Box3D& box = boxes[id];
    if (class_index(box.cls) >= cfg.num_classes)
      throw InputError("box class exceeds the configured number of classes");
    if (!grid.range().contains_center(box)) {
      ++t.diagnostics.out_of_range;
      continue;
    }
    const double fu = (box.cx - og.min_x) / og.cell_x;
    const double fv = (box.cy - og.min_y) / og.cell_y;
    const double u_floor = std::floor(fu);
    const double v_floor = std::floor(fv);
    if (u_floor < 0.0 || v_floor < 0.0 || u_floor >= static_cast<double>(W) ||
        v_floor >= static_cast<double>(H)) {
      ++t.diagnostics.out_of_range;
      continue;
    }
    if (encoded >= cfg.max_objects) {
      ++t.diagnostics.over_limit;
      continue;
    }
    ++encoded;
    const auto u = static_cast<std::size_t>(u_floor);
    const auto v = static_cast<std::size_t>(v_floor);
    const std::size_t cls = class_index(box.cls);

    const double len_cells = box.l / og.cell_x;
    const double wid_cells = box.w / og.cell_y;
    const int radius = gaussian_radius(len_cells, wid_cells, cfg.gaussian_overlap, cfg.min_radius_center);
    const int kp_radius =
        keypoint_radius(len_cells, wid_cells, cfg.gaussian_overlap, cfg.min_radius_keypoint);
    draw_gaussian(t.heatmap.plane(cls), H, W, u, v, radius);

    auto kp_plane = t.keypoint_heatmap.plane(cls);
    draw_gaussian(kp_plane, H, W, u, v, kp_radius);
    for (const Vec2& corner : box_corners_bev(box).vertices) {
      const double cu = std::floor((corner.x - og.min_x) / og.cell_x);
      const double cv = std::floor((corner.y - og.min_y) / og.cell_y);
      if (cu < 0.0 || cv < 0.0 || cu >= static_cast<double>(W) || cv >= static_cast<double>(H))
        continue;
      draw_gaussian(kp_plane, H, W, static_cast<std::size_t>(cu), static_cast<std::size_t>(cv),
                    kp_radius);
    }

    const std::size_t cell = v * W + u;
    if (t.reg_mask[cell]) {
      ++t.diagnostics.center_collisions;
      std::erase_if(t.obj_index, [&](const ObjectIndex& o) { return o.u == u && o.v == v; });
    }
    t.reg_mask[cell] = 1;
    t.obj_index.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v), id});
    t.offset.at(0, v, u) = fu - u_floor;
    t.offset.at(1, v, u) = fv - v_floor;
    t.z.at(0, v, u) = box.cz;
    t.size.at(0, v, u) = std::log(box.l);
    t.size.at(1, v, u) = std::log(box.w);
    t.size.at(2, v, u) = std::log(box.h);
    t.yaw.at(0, v, u) = std::sin(box.yaw);
    t.yaw.at(1, v, u) = std::cos(box.yaw);
    t.iou.at(0, v, u) = encode_iou_target(1.0);
  }
  return t;
}

std::vector<std::uint8_t> encode_tgts(const TargetSet& t) {
  ByteWriter w;
  w.magic("TGTS");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.num_classes()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.height()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.width()));
  const std::array<const FeatureMap*, 7> maps = {&t.heatmap, &t.keypoint_heatmap, &t.offset, &t.z,
                                                 &t.size,    &t.yaw,              &t.iou};
  for (const FeatureMap* m : maps)
    for (double v : m->data()) w.put<float>(static_cast<float>(v));
  w.raw(t.reg_mask);
  return w.take();
}

TargetSet decode_tgts(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "TGTS");
  r.expect_magic("TGTS");
  const auto C = r.get<std::uint32_t>();
  const auto H = r.get<std::uint32_t>();
  const auto W = r.get<std::uint32_t>();
  if (C == 0 || H == 0 || W == 0) throw InputError("TGTS: dimensions must be positive");
  const std::uint64_t planes = 2ull * C + 9;
  const std::uint64_t plane = std::uint64_t{H} * W;
  if (r.remaining() != planes * plane * sizeof(float) + plane)
    throw InputError("TGTS: payload size does not match header dims");
  TargetSet t(C, H, W);
  std::array<FeatureMap*, 7> maps = {&t.heatmap, &t.keypoint_heatmap, &t.offset, &t.z,
                                     &t.size,    &t.yaw,              &t.iou};
  for (FeatureMap* m : maps)
    for (double& v : m->data()) v = r.get<float>();
  auto mask = r.take(plane);
  std::copy(mask.begin(), mask.end(), t.reg_mask.begin());
  std::size_t id = 0;
  for (std::uint32_t v = 0; v < H; ++v)
    for (std::uint32_t u = 0; u < W; ++u)
      if (t.reg_mask[std::size_t{v} * W + u]) t.obj_index.push_back({u, v, id++});
  return t;
}

void write_tgts(const std::filesystem::path& path, const TargetSet& t) {
  write_file_bytes(path, encode_tgts(t));
}

TargetSet read_tgts(const std::filesystem::path& path) { return decode_tgts(read_file_bytes(path)); }

}  // namespace afdet
