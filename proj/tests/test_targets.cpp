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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "afdet/errors.hpp"
#include "afdet/geometry.hpp"
#include "afdet/postprocess.hpp"
#include "afdet/targets.hpp"
#include "support.hpp"

using namespace afdet;
using afdet::testing::Rng;

namespace {

VoxelGrid small_grid() { return VoxelGrid({{-10, -10, -2}, {10, 10, 4}}, {0.1, 0.1, 0.15}); }

}  // namespace

TEST(GaussianRadius, MinimumClampEngages) {
  EXPECT_EQ(gaussian_radius(1, 1, 0.1, 2), 2);
  EXPECT_EQ(keypoint_radius(1, 1, 0.1, 1), 1);
}

TEST(GaussianRadius, MatchesBisectionOracle) {
  EXPECT_NEAR(gaussian_radius_raw(20, 20, 0.1), afdet::testing::oracle_gaussian_radius(20, 20, 0.1), 1e-9);
  Rng rng(1);
  for (int t = 0; t < 500; ++t) {
    const double h = afdet::testing::uniform(rng, 0.5, 80), w = afdet::testing::uniform(rng, 0.5, 80);
    const double o = afdet::testing::uniform(rng, 0.05, 0.95);
    EXPECT_NEAR(gaussian_radius_raw(h, w, o), afdet::testing::oracle_gaussian_radius(h, w, o), 1e-8 * (h + w));
  }
}

TEST(GaussianRadius, FloorAndHalving) {
  const double raw = gaussian_radius_raw(40, 30, 0.1);
  EXPECT_EQ(gaussian_radius(40, 30, 0.1, 2), std::max(2, static_cast<int>(std::floor(raw))));
  EXPECT_EQ(keypoint_radius(40, 30, 0.1, 1), std::max(1, static_cast<int>(std::floor(raw / 2))));
}

TEST(GaussianRadius, MonotoneInSize) {
  double prev = 0;
  for (double s = 1; s < 100; s += 1.5) {
    const double r = gaussian_radius_raw(s, s, 0.1);
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(DrawGaussian, PeakNeighbourAndMaxMerge) {
  std::vector<double> plane(11 * 11, 0.0);
  draw_gaussian(plane, 11, 11, 5, 5, 2);
  EXPECT_EQ(plane[5 * 11 + 5], 1.0);
  EXPECT_NEAR(plane[5 * 11 + 6], std::exp(-1.0 / (2 * (5.0 / 6) * (5.0 / 6))), 1e-15);
  EXPECT_NEAR(plane[5 * 11 + 6], 0.4868, 1e-4);
  EXPECT_EQ(plane[5 * 11 + 8], 0.0);
  draw_gaussian(plane, 11, 11, 5, 5, 2);
  for (double v : plane) EXPECT_LE(v, 1.0);
  EXPECT_EQ(plane[5 * 11 + 5], 1.0);
}

TEST(DrawGaussian, ClipsAtBorder) {
  std::vector<double> plane(4 * 4, 0.0);
  draw_gaussian(plane, 4, 4, 0, 0, 3);
  EXPECT_EQ(plane[0], 1.0);
  EXPECT_GT(plane[3 * 4 + 3], 0.0);
}

TEST(EncodeTargets, CellCenterOffsetAndYaw) {
  const VoxelGrid g = small_grid();
  HeadConfig cfg;  // stride 8, output cell 0.8 m
  const Box3D b = make_box(-10 + 0.8 * 3.5, -10 + 0.8 * 7.5, 0.9, 4, 2, 1.7, 0.0, ClassId::kVehicle);
  const TargetSet t = encode_targets(std::span<const Box3D>(&b, 1), g, cfg);
  ASSERT_EQ(t.obj_index.size(), 1u);
  EXPECT_EQ(t.obj_index[0].u, 3u);
  EXPECT_EQ(t.obj_index[0].v, 7u);
  EXPECT_NEAR(t.offset.at(0, 7, 3), 0.5, 1e-12);
  EXPECT_NEAR(t.offset.at(1, 7, 3), 0.5, 1e-12);
  EXPECT_EQ(t.yaw.at(0, 7, 3), 0.0);
  EXPECT_EQ(t.yaw.at(1, 7, 3), 1.0);
  EXPECT_EQ(t.heatmap.at(0, 7, 3), 1.0);
  EXPECT_EQ(t.z.at(0, 7, 3), 0.9);
  EXPECT_NEAR(t.size.at(0, 7, 3), std::log(4.0), 1e-15);
  EXPECT_EQ(t.iou.at(0, 7, 3), 1.0);
  EXPECT_EQ(t.reg_mask[7 * t.width() + 3], 1);
}

TEST(EncodeTargets, BoxAtMaxCornerSkipped) {
  const VoxelGrid g = small_grid();
  const Box3D b = make_box(10, 10, 4, 1, 1, 1, 0, ClassId::kPedestrian);
  const TargetSet t = encode_targets(std::span<const Box3D>(&b, 1), g, HeadConfig{});
  EXPECT_TRUE(t.obj_index.empty());
  EXPECT_EQ(t.diagnostics.out_of_range, 1u);
  for (double v : t.heatmap.data()) EXPECT_EQ(v, 0.0);
  for (auto m : t.reg_mask) EXPECT_EQ(m, 0);
}

TEST(EncodeTargets, RespectsMaxObjects) {
  const VoxelGrid g = small_grid();
  HeadConfig cfg;
  cfg.max_objects = 3;
  std::vector<Box3D> boxes;
  for (int i = 0; i < 5; ++i) boxes.push_back(make_box(-8 + 3 * i, 0, 0, 1, 1, 1, 0, ClassId::kCyclist));
  const TargetSet t = encode_targets(boxes, g, cfg);
  EXPECT_EQ(t.obj_index.size(), 3u);
  EXPECT_EQ(t.diagnostics.over_limit, 2u);
}

TEST(EncodeTargets, HeatmapPeaksAreExactlyCenters) {
  Rng rng(2);
  const VoxelGrid g = small_grid();
  std::vector<Box3D> boxes;
  for (int i = 0; i < 10; ++i) boxes.push_back(afdet::testing::random_box(rng, 9.0));
  const TargetSet t = encode_targets(boxes, g, HeadConfig{});
  std::size_t ones = 0;
  for (std::size_t c = 0; c < t.num_classes(); ++c)
    for (std::size_t v = 0; v < t.height(); ++v)
      for (std::size_t u = 0; u < t.width(); ++u) {
        const double x = t.heatmap.at(c, v, u);
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
        if (x == 1.0) {
          ++ones;
          EXPECT_TRUE(t.reg_mask[v * t.width() + u]);
        }
      }
  EXPECT_LE(ones, boxes.size());
  EXPECT_GE(ones, t.obj_index.size());
}

TEST(EncodeTargets, KeypointCornersSplatted) {
  const VoxelGrid g = small_grid();
  const Box3D b = make_box(0.4, 0.4, 0, 4.0, 2.4, 1.7, 0.0, ClassId::kVehicle);
  const TargetSet t = encode_targets(std::span<const Box3D>(&b, 1), g, HeadConfig{});
  for (const auto& c : box_corners_bev(b).vertices) {
    const auto u = static_cast<std::size_t>(std::floor((c.x + 10) / 0.8));
    const auto v = static_cast<std::size_t>(std::floor((c.y + 10) / 0.8));
    EXPECT_EQ(t.keypoint_heatmap.at(0, v, u), 1.0);
  }
}

TEST(EncodeTargets, DecodeRecoversBoxes) {
  Rng rng(3);
  const VoxelGrid g = small_grid();
  HeadConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const Box3D b = afdet::testing::random_box(rng, 9.5);
    const TargetSet t = encode_targets(std::span<const Box3D>(&b, 1), g, cfg);
    const auto& o = t.obj_index.at(0);
    const Peak p{class_index(b.cls), o.u, o.v, t.heatmap.at(class_index(b.cls), o.v, o.u)};
    const auto dets = decode_boxes(std::span<const Peak>(&p, 1), t, g, cfg);
    const Box3D& d = dets.at(0).box;
    EXPECT_NEAR(d.cx, b.cx, 1e-9);
    EXPECT_NEAR(d.cy, b.cy, 1e-9);
    EXPECT_EQ(d.cz, b.cz);
    EXPECT_NEAR(d.l, b.l, 1e-12);
    EXPECT_NEAR(std::abs(wrap_angle(d.yaw - b.yaw)), 0.0, 1e-9);
    EXPECT_EQ(dets[0].iou_pred, 1.0);
  }
}

TEST(IouEncoding, EndpointsAndIdentity) {
  EXPECT_EQ(encode_iou_target(0.0), -1.0);
  EXPECT_EQ(encode_iou_target(0.5), 0.0);
  EXPECT_EQ(encode_iou_target(1.0), 1.0);
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    EXPECT_NEAR(decode_iou_target(encode_iou_target(x)), x, 1e-12);
  }
  EXPECT_THROW(encode_iou_target(1.0001), InputError);
  EXPECT_THROW(encode_iou_target(-0.1), InputError);
  EXPECT_THROW(encode_iou_target(NAN), InputError);
}

TEST(IouEncoding, RegressionTargetUsesAxisAlignedIou) {
  const Box3D a = make_box(0, 0, 0, 1, 1, 1, 0.7, ClassId::kVehicle);
  const Box3D b = make_box(0.5, 0, 0, 1, 1, 1, -0.2, ClassId::kVehicle);
  EXPECT_NEAR(iou_regression_target(a, b), 2 * (1.0 / 3.0 - 0.5), 1e-15);
}

TEST(Tgts, RoundTripAndValidation) {
  Rng rng(4);
  const VoxelGrid g = small_grid();
  std::vector<Box3D> boxes;
  for (int i = 0; i < 6; ++i) boxes.push_back(afdet::testing::random_box(rng, 9.0));
  const TargetSet t = encode_targets(boxes, g, HeadConfig{});
  const TargetSet back = decode_tgts(encode_tgts(t));
  EXPECT_EQ(back.reg_mask, t.reg_mask);
  ASSERT_EQ(back.heatmap.data().size(), t.heatmap.data().size());
  for (std::size_t i = 0; i < t.heatmap.data().size(); ++i)
    EXPECT_EQ(back.heatmap.data()[i], static_cast<double>(static_cast<float>(t.heatmap.data()[i])));
  EXPECT_EQ(back.obj_index.size(), t.obj_index.size());
  auto bytes = encode_tgts(t);
  bytes.pop_back();
  EXPECT_THROW(decode_tgts(bytes), InputError);
}

TEST(HeadConfig, Validation) {
  HeadConfig c;
  c.gaussian_overlap = 1.0;
  EXPECT_THROW(c.validate(), InputError);
  c = HeadConfig{};
  c.out_stride = 0;
  EXPECT_THROW(c.validate(), InputError);
}
