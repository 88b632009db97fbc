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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "afdet/errors.hpp"
#include "afdet/postprocess.hpp"
#include "support.hpp"

using namespace afdet;
using afdet::testing::Rng;

TEST(TopK, SingleNonzeroCell) {
  FeatureMap m(3, 4, 5);
  m.at(2, 1, 3) = 0.7;
  const auto peaks = topk_peaks(m, 1);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_EQ(peaks[0].cls, 2u);
  EXPECT_EQ(peaks[0].u, 3u);
  EXPECT_EQ(peaks[0].v, 1u);
  EXPECT_EQ(peaks[0].score, 0.7);
}

TEST(TopK, LargeKReturnsAllSorted) {
  Rng rng(1);
  FeatureMap m(2, 3, 3);
  for (double& v : m.data()) v = afdet::testing::uniform(rng, 0, 1);
  const auto peaks = topk_peaks(m, 1000);
  ASSERT_EQ(peaks.size(), 18u);
  for (std::size_t i = 1; i < peaks.size(); ++i) EXPECT_GE(peaks[i - 1].score, peaks[i].score);
}

TEST(TopK, MatchesFullSortOracle) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    FeatureMap m(3, 17, 23);
    // Coarse values force ties so the tie-break is exercised.
    for (double& v : m.data()) v = std::floor(afdet::testing::uniform(rng, 0, 20)) / 20.0;
    std::vector<std::tuple<double, std::size_t, std::size_t, std::size_t>> all;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t v = 0; v < 17; ++v)
        for (std::size_t u = 0; u < 23; ++u) all.emplace_back(-m.at(c, v, u), c, v, u);
    std::sort(all.begin(), all.end());
    const std::size_t k = 50;
    const auto peaks = topk_peaks(m, k);
    ASSERT_EQ(peaks.size(), k);
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_EQ(peaks[i].score, -std::get<0>(all[i]));
      EXPECT_EQ(peaks[i].cls, std::get<1>(all[i]));
      EXPECT_EQ(peaks[i].v, std::get<2>(all[i]));
      EXPECT_EQ(peaks[i].u, std::get<3>(all[i]));
    }
  }
}

TEST(Decode, YawAnchorsAndHandCenter) {
  const VoxelGrid g({{-75.2, 0, -2}, {75.2, 0.4, 4}}, {0.1, 0.1, 0.15});
  HeadConfig cfg;
  cfg.out_stride = 1;
  TargetSet maps(3, 4, 1504);
  maps.offset.at(0, 0, 752) = 0.5;
  maps.offset.at(1, 0, 752) = 0.5;
  maps.yaw.at(1, 0, 752) = 1.0;
  maps.yaw.at(0, 0, 10) = 1.0;
  const std::vector<Peak> peaks = {{0, 752, 0, 0.9}, {1, 10, 0, 0.8}};
  const auto dets = decode_boxes(peaks, maps, g, cfg);
  EXPECT_NEAR(dets[0].box.cx, 0.05, 1e-12);
  EXPECT_NEAR(dets[0].box.cy, 0.05, 1e-12);
  EXPECT_EQ(dets[0].box.yaw, 0.0);
  EXPECT_NEAR(dets[1].box.yaw, std::numbers::pi / 2, 1e-15);
  EXPECT_EQ(dets[1].box.cls, ClassId::kPedestrian);
  EXPECT_EQ(dets[0].box.l, 1.0);  // exp(0)
  EXPECT_EQ(dets[0].iou_pred, 0.5);  // decoded 0
}

TEST(Decode, RejectsMismatchedMaps) {
  const VoxelGrid g({{0, 0, 0}, {8, 8, 1}}, {0.1, 0.1, 0.1});
  TargetSet maps(3, 5, 5);
  const std::vector<Peak> peaks;
  EXPECT_THROW(decode_boxes(peaks, maps, g, HeadConfig{}), InputError);
}

TEST(Rescore, Properties) {
  EXPECT_NEAR(rescore(0.9, 0.5, 0.68), 0.6035, 1e-4);
  EXPECT_NEAR(rescore(0.9, 0.5, 0.68), std::exp(0.32 * std::log(0.9) + 0.68 * std::log(0.5)), 1e-15);
  for (double s = 0; s <= 1.0; s += 0.1) {
    for (double i = 0; i <= 1.0; i += 0.1) {
      EXPECT_EQ(rescore(s, i, 0.0), s);
      EXPECT_EQ(rescore(s, i, 1.0), i);
    }
    for (double a = 0; a <= 1.0; a += 0.1) EXPECT_NEAR(rescore(s, s, a), s, 1e-15);
  }
  EXPECT_EQ(rescore(0.0, 0.7, 0.0), 0.0);
  EXPECT_EQ(rescore(0.7, 0.0, 1.0), 0.0);
}

TEST(Rescore, AppliesPerClassAlpha) {
  std::vector<Detection> dets = {afdet::testing::make_det(make_box(0, 0, 0, 1, 1, 1, 0, ClassId::kCyclist), 0.8)};
  dets[0].iou_pred = 0.4;
  apply_rescore(dets, RescoreConfig{});
  EXPECT_DOUBLE_EQ(dets[0].confidence, rescore(0.8, 0.4, 0.65));
}

TEST(Nms, DuplicatesAndClassIndependence) {
  const Box3D b = make_box(0, 0, 0, 4, 2, 1.5, 0.2, ClassId::kVehicle);
  std::vector<Detection> dets = {afdet::testing::make_det(b, 0.8), afdet::testing::make_det(b, 0.9)};
  EXPECT_EQ(class_nms_indices(dets, NmsConfig{}), (std::vector<std::size_t>{1}));
  dets[0].box.cls = ClassId::kPedestrian;
  EXPECT_EQ(class_nms_indices(dets, NmsConfig{}), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(class_nms(dets, NmsConfig{}).size(), 2u);
}

TEST(Nms, MatchesBruteForceAndIsIdempotent) {
  Rng rng(3);
  NmsConfig cfg;
  for (int t = 0; t < 20; ++t) {
    std::vector<Detection> dets;
    for (int i = 0; i < 200; ++i)
      dets.push_back(afdet::testing::make_det(afdet::testing::random_box(rng, 8.0), afdet::testing::uniform(rng, 0, 1)));
    const auto kept = class_nms_indices(dets, cfg);
    EXPECT_EQ(kept, afdet::testing::oracle_nms(dets, cfg.iou_threshold));
    const auto once = class_nms(dets, cfg);
    const auto twice = class_nms(once, cfg);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].box, twice[i].box);
  }
}

TEST(Postprocess, ThresholdTopKAndOrder) {
  const VoxelGrid g({{0, 0, -2}, {8, 8, 4}}, {0.1, 0.1, 0.15});
  TargetSet maps(3, 10, 10);
  maps.heatmap.at(0, 2, 2) = 0.9;
  maps.heatmap.at(0, 7, 7) = 0.3;
  maps.heatmap.at(1, 5, 5) = 0.05;
  for (double& v : maps.iou.data()) v = 1.0;
  PostprocessConfig cfg;
  const auto dets = postprocess(maps, g, HeadConfig{}, cfg);
  ASSERT_EQ(dets.size(), 2u);
  EXPECT_GT(dets[0].confidence, dets[1].confidence);
  cfg.nms.pre_nms_top_k = 1;
  EXPECT_EQ(postprocess(maps, g, HeadConfig{}, cfg).size(), 1u);
}

TEST(Postprocess, RescoreOrderingOption) {
  const VoxelGrid g({{0, 0, -2}, {8, 8, 4}}, {0.1, 0.1, 0.15});
  TargetSet maps(3, 10, 10);
  maps.heatmap.at(0, 2, 2) = 0.9;
  maps.heatmap.at(0, 2, 3) = 0.8;  // same box size, overlapping neighbour
  for (double& v : maps.size.data()) v = std::log(2.0);
  maps.iou.at(0, 2, 2) = -0.8;
  maps.iou.at(0, 2, 3) = 0.8;
  PostprocessConfig cfg;
  cfg.nms.iou_threshold = {0.1, 0.1, 0.1};
  const auto before = postprocess(maps, g, HeadConfig{}, cfg);
  ASSERT_EQ(before.size(), 1u);
  EXPECT_EQ(before[0].score, 0.8);  // rescoring promoted the better-localized box
  cfg.rescore_before_nms = false;
  const auto after = postprocess(maps, g, HeadConfig{}, cfg);
  ASSERT_EQ(after.size(), 1u);
  EXPECT_EQ(after[0].score, 0.9);
}

TEST(DetectionsJsonl, RoundTrip) {
  Rng rng(4);
  std::vector<Detection> dets;
  for (int i = 0; i < 10; ++i) {
    Detection d = afdet::testing::make_det(afdet::testing::random_box(rng), afdet::testing::uniform(rng, 0, 1));
    d.iou_pred = 0.3;
    dets.push_back(d);
  }
  const auto back = detections_from_jsonl(detections_to_jsonl(dets));
  ASSERT_EQ(back.size(), dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_EQ(back[i].box, dets[i].box);
    EXPECT_EQ(back[i].confidence, dets[i].confidence);
    EXPECT_EQ(back[i].iou_pred, 0.3);
  }
  EXPECT_THROW(detections_from_jsonl("{\"cx\": 1}\n"), InputError);
}
