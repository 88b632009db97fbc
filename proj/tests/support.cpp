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

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include "afdet/geometry.hpp"
#include <numbers>
#include <numeric>
#include <unordered_map>

namespace afdet::testing {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool rel_close(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

Box3D random_box(Rng& rng, double center_extent, double min_size, double max_size) {
  const auto cls = static_cast<ClassId>(std::uniform_int_distribution<int>(0, 2)(rng));
  Box3D b;
  b.cx = uniform(rng, -center_extent, center_extent);
  b.cy = uniform(rng, -center_extent, center_extent);
  b.cz = uniform(rng, -1.0, 1.0);
  b.l = uniform(rng, min_size, max_size);
  b.w = uniform(rng, min_size, max_size);
  b.h = uniform(rng, min_size, max_size);
  b.yaw = uniform(rng, -std::numbers::pi, std::numbers::pi);
  b.cls = cls;
  return b;
}

Box3D random_box_of(Rng& rng, ClassId cls, double center_extent) {
  Box3D b = random_box(rng, center_extent);
  b.cls = cls;
  return b;
}

VoxelGrid random_grid(Rng& rng) {
  Range3 r;
  std::array<double, 3> cell{};
  for (int a = 0; a < 3; ++a) {
    cell[a] = std::uniform_int_distribution<int>(1, 8)(rng) * 0.05;
    const int n = std::uniform_int_distribution<int>(4, 120)(rng);
    r.min[a] = std::round(uniform(rng, -20.0, 5.0) * 20.0) / 20.0;
    r.max[a] = r.min[a] + n * cell[a];
  }
  return VoxelGrid(r, cell);
}

PointCloud random_cloud(Rng& rng, std::size_t n, const VoxelGrid& grid) {
  PointCloud pts(n);
  const Range3& r = grid.range();
  for (Point& p : pts) {
    // ~5% of coordinates land up to one cell outside the grid on each side.
    std::array<double, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const double pad = 0.05 * (r.max[a] - r.min[a]);
      c[a] = uniform(rng, r.min[a] - pad, r.max[a] + pad);
    }
    p = {c[0], c[1], c[2], uniform(rng, 0.0, 1.5), uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 0.1)};
  }
  return pts;
}

namespace {

bool inside_rect(double x, double y, const Box3D& b) {
  const double dx = x - b.cx, dy = y - b.cy;
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * b.l && std::abs(ly) <= 0.5 * b.w;
}

}  // namespace

double mc_iou_bev(const Box3D& a, const Box3D& b, int side) {
  const Box3D& small = a.l * a.w <= b.l * b.w ? a : b;
  const Box3D& other = &small == &a ? b : a;
  Rng rng(0x5eed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  const double c = std::cos(small.yaw), s = std::sin(small.yaw);
  std::uint64_t hits = 0;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const double lx = ((i + jitter(rng)) / side - 0.5) * small.l;
      const double ly = ((j + jitter(rng)) / side - 0.5) * small.w;
      const double x = small.cx + c * lx - s * ly;
      const double y = small.cy + s * lx + c * ly;
      hits += inside_rect(x, y, other);
    }
  }
  const double area_s = small.l * small.w, area_o = other.l * other.w;
  const double inter = area_s * static_cast<double>(hits) / (static_cast<double>(side) * side);
  return inter / (area_s + area_o - inter);
}

OracleVoxels oracle_voxelize(std::span<const Point> points, const VoxelGrid& grid) {
  OracleVoxels out;
  std::unordered_map<std::uint64_t, std::size_t> slot;
  std::vector<std::array<long double, kPointDim>> sums;
  const auto& d = grid.dims();
  for (const Point& p : points) {
    const double xyz[3] = {p.x, p.y, p.z};
    std::array<std::uint32_t, 3> c{};
    bool ok = true;
    for (int a = 0; a < 3 && ok; ++a) {
      const double q = std::floor((xyz[a] - grid.range().min[a]) / grid.cell()[a]);
      ok = q >= 0.0 && q < d[a];
      if (ok) c[a] = static_cast<std::uint32_t>(q);
    }
    if (!ok) continue;
    const std::uint64_t key = (std::uint64_t{c[2]} << 42) | (std::uint64_t{c[1]} << 21) | c[0];
    auto [it, fresh] = slot.try_emplace(key, out.coords.size());
    if (fresh) {
      out.coords.push_back(c);
      out.counts.push_back(0);
      sums.push_back({});
    }
    const std::size_t k = it->second;
    ++out.counts[k];
    const auto f = p.features();
    for (std::size_t i = 0; i < kPointDim; ++i) sums[k][i] += f[i];
  }
  out.features.resize(sums.size());
  for (std::size_t k = 0; k < sums.size(); ++k)
    for (std::size_t i = 0; i < kPointDim; ++i)
      out.features[k][i] = static_cast<double>(sums[k][i] / out.counts[k]);
  return out;
}

std::vector<std::size_t> oracle_nms(std::span<const Detection> dets, const PerClass& thresholds) {
  const std::size_t n = dets.size();
  std::vector<std::vector<double>> iou(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && dets[i].cls() == dets[j].cls()) iou[i][j] = iou_bev_rotated(dets[i].box, dets[j].box);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].confidence != dets[b].confidence) return dets[a].confidence > dets[b].confidence;
    return a < b;
  });
  std::vector<bool> removed(n, false);
  std::vector<std::size_t> kept;
  for (std::size_t oi = 0; oi < n; ++oi) {
    const std::size_t i = order[oi];
    if (removed[i]) continue;
    kept.push_back(i);
    for (std::size_t j = 0; j < n; ++j)
      if (iou[i][j] > thresholds[class_index(dets[i].cls())]) removed[j] = true;
  }
  return kept;
}

double oracle_gaussian_radius(double h, double w, double o) {
  // IoU of each perturbed box with the original, as a function of r.
  auto shifted = [&](double r) {
    const double inter = (h - r) * (w - r);
    return inter / (2.0 * h * w - inter);
  };
  auto shrunk = [&](double r) { return (h - 2 * r) * (w - 2 * r) / (h * w); };
  auto grown = [&](double r) { return h * w / ((h + 2 * r) * (w + 2 * r)); };
  auto solve = [&](auto f, double hi) {
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) >= o ? lo : hi) = mid;
    }
    return lo;
  };
  const double m = std::min(h, w);
  return std::min({solve(shifted, m), solve(shrunk, 0.5 * m), solve(grown, 1e6)});
}

double oracle_ap(std::vector<double> conf, std::vector<double> weights, std::vector<bool> tp,
                 std::size_t num_gt, std::size_t levels) {
  if (num_gt == 0) return conf.empty() ? 1.0 : 0.0;
  std::vector<std::size_t> order(conf.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return conf[a] > conf[b]; });
  std::vector<double> precision, recall;
  double wsum = 0.0;
  std::size_t tps = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (tp[order[k]]) {
      ++tps;
      wsum += weights[order[k]];
    }
    precision.push_back(wsum / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tps) / static_cast<double>(num_gt));
  }
  double ap = 0.0;
  for (std::size_t j = 0; j < levels; ++j) {
    const double r = static_cast<double>(j) / static_cast<double>(levels - 1);
    double best = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k)
      if (recall[k] >= r - 1e-12) best = std::max(best, precision[k]);
    ap += best;
  }
  return ap / static_cast<double>(levels);
}

double max_fd_rel_error(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                        std::span<const double> analytic, double step, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + step;
    const double up = f(x);
    x[i] = x0 - step;
    const double down = f(x);
    x[i] = x0;
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

Detection make_det(const Box3D& box, double confidence) {
  Detection d;
  d.box = box;
  d.score = confidence;
  d.iou_pred = 1.0;
  d.confidence = confidence;
  return d;
}

}  // namespace afdet::testing
