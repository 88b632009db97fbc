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
#include "afdet/evaluator.hpp"
#include "afdet/geometry.hpp"
#include "support.hpp"

using namespace afdet;
using afdet::testing::make_det;
using afdet::testing::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

Box3D car(double x, double yaw = 0.0) { return make_box(x, 0, 0.8, 4, 2, 1.6, yaw, ClassId::kVehicle); }

DetectionMatch tp(double conf, double heading = 0.0) {
  DetectionMatch m;
  m.confidence = conf;
  m.tp = true;
  m.gt = 0;
  m.heading_error = heading;
  return m;
}

DetectionMatch fp(double conf) {
  DetectionMatch m;
  m.confidence = conf;
  return m;
}

}  // namespace

TEST(Match, ExactDetectionIsTruePositive) {
  const std::vector<Box3D> gts = {car(0)};
  const std::vector<Detection> dets = {make_det(car(0), 0.9)};
  const MatchResult r = match_detections(dets, gts, EvalConfig{});
  EXPECT_TRUE(r.detections[0].tp);
  EXPECT_EQ(r.detections[0].heading_error, 0.0);
  EXPECT_TRUE(r.gt_matched[0]);
}

TEST(Match, SingleClaim) {
  const std::vector<Box3D> gts = {car(0)};
  const std::vector<Detection> dets = {make_det(car(0.1), 0.6), make_det(car(0.05), 0.9)};
  const MatchResult r = match_detections(dets, gts, EvalConfig{});
  EXPECT_FALSE(r.detections[0].tp);
  EXPECT_TRUE(r.detections[1].tp);
}

TEST(Match, ClassMustAgreeAndThresholdApplies) {
  Box3D ped = car(0);
  ped.cls = ClassId::kPedestrian;
  const std::vector<Box3D> gts = {ped, car(50)};
  const std::vector<Detection> dets = {make_det(car(0), 0.9), make_det(car(51.5), 0.8)};
  const MatchResult r = match_detections(dets, gts, EvalConfig{});
  EXPECT_FALSE(r.detections[0].tp);
  EXPECT_FALSE(r.detections[1].tp);  // IoU 2.5/5.5 < 0.7
}

TEST(Match, MatchesGreedyOracle) {
  Rng rng(1);
  EvalConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Box3D> gts;
    std::vector<Detection> dets;
    for (int i = 0; i < 50; ++i) {
      gts.push_back(afdet::testing::random_box(rng, 6.0, 1.0, 3.0));
      Box3D d = gts.back();
      d.cx += afdet::testing::uniform(rng, -0.6, 0.6);
      d.cy += afdet::testing::uniform(rng, -0.6, 0.6);
      dets.push_back(make_det(d, afdet::testing::uniform(rng, 0, 1)));
    }
    const MatchResult r = match_detections(dets, gts, cfg);
    // Oracle: walk detections in explicit confidence order.
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
    std::vector<bool> taken(gts.size(), false);
    for (std::size_t i : order) {
      std::optional<std::size_t> pick;
      double best = -1;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (taken[g] || gts[g].cls != dets[i].box.cls) continue;
        const double iou = iou_bev_rotated(dets[i].box, gts[g]);
        if (iou >= cfg.iou_threshold[class_index(gts[g].cls)] && iou > best) {
          best = iou;
          pick = g;
        }
      }
      if (pick) taken[*pick] = true;
      EXPECT_EQ(r.detections[i].gt, pick);
      EXPECT_EQ(r.detections[i].tp, pick.has_value());
    }
  }
}

TEST(AveragePrecision, Fixtures) {
  const EvalConfig cfg;
  const std::vector<DetectionMatch> one = {tp(0.9)};
  EXPECT_EQ(average_precision(one, 1, cfg), 1.0);
  const std::vector<DetectionMatch> fp_tp = {fp(0.9), tp(0.8)};
  EXPECT_DOUBLE_EQ(average_precision(fp_tp, 1, cfg), 0.5);
  EXPECT_EQ(average_precision({}, 3, cfg), 0.0);
  EXPECT_EQ(average_precision({}, 0, cfg), 1.0);
  EXPECT_EQ(average_precision(one, 0, cfg), 0.0);
}

TEST(Aph, HeadingWeights) {
  const EvalConfig cfg;
  const std::vector<DetectionMatch> perfect = {tp(0.9), tp(0.7), fp(0.8)};
  EXPECT_EQ(aph(perfect, 3, cfg), average_precision(perfect, 3, cfg));
  const std::vector<DetectionMatch> quarter = {tp(0.9, kPi / 2)};
  EXPECT_DOUBLE_EQ(aph(quarter, 1, cfg), 0.5);
  const std::vector<DetectionMatch> flipped = {tp(0.9, kPi)};
  EXPECT_EQ(aph(flipped, 1, cfg), 0.0);
}

TEST(AveragePrecision, MatchesScriptedOracle) {
  Rng rng(2);
  const EvalConfig cfg;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 30)(rng);
    std::vector<DetectionMatch> ms;
    std::vector<double> conf, w;
    std::vector<bool> flags;
    std::size_t tps = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = afdet::testing::uniform(rng, 0, 1);
      const bool is_tp = afdet::testing::uniform(rng, 0, 1) < 0.6;
      const double h = afdet::testing::uniform(rng, 0, kPi);
      ms.push_back(is_tp ? tp(c, h) : fp(c));
      conf.push_back(c);
      w.push_back(1 - h / kPi);
      flags.push_back(is_tp);
      tps += is_tp;
    }
    const std::size_t num_gt = tps + std::uniform_int_distribution<std::size_t>(0, 5)(rng);
    EXPECT_NEAR(average_precision(ms, num_gt, cfg),
                afdet::testing::oracle_ap(conf, std::vector<double>(n, 1.0), flags, num_gt), 1e-12);
    EXPECT_NEAR(aph(ms, num_gt, cfg), afdet::testing::oracle_ap(conf, w, flags, num_gt), 1e-12);
    EXPECT_LE(aph(ms, num_gt, cfg), average_precision(ms, num_gt, cfg) + 1e-15);
  }
}

TEST(Evaluate, PerfectEmptyAndEmptyCorpus) {
  Rng rng(3);
  std::vector<Box3D> gts;
  for (int i = 0; i < 12; ++i) gts.push_back(afdet::testing::random_box_of(rng, static_cast<ClassId>(i % 3), 3.0 + 10 * i));
  std::vector<Detection> dets;
  for (const Box3D& g : gts) dets.push_back(make_det(g, 0.9));
  const EvalReport perfect = evaluate(dets, gts, EvalConfig{});
  EXPECT_EQ(perfect.mean_ap, 1.0);
  EXPECT_EQ(perfect.mean_aph, 1.0);
  for (const auto& c : perfect.per_class) EXPECT_EQ(c.ap, 1.0);
  const EvalReport none = evaluate({}, gts, EvalConfig{});
  EXPECT_EQ(none.mean_ap, 0.0);
  EXPECT_EQ(none.mean_aph, 0.0);
  const EvalReport nothing = evaluate({}, {}, EvalConfig{});
  EXPECT_EQ(nothing.mean_ap, 1.0);
}

TEST(Evaluate, InjectedErrorsMatchOracle) {
  Rng rng(4);
  EvalConfig cfg;
  std::vector<EvalFrame> frames;
  std::array<std::vector<double>, 3> conf, w;
  std::array<std::vector<bool>, 3> flags;
  std::array<std::size_t, 3> num_gt{};
  for (int s = 0; s < 20; ++s) {
    EvalFrame f;
    for (int i = 0; i < 15; ++i) {
      // Well separated so each detection can only reach its own GT.
      const Box3D g = afdet::testing::random_box_of(rng, static_cast<ClassId>(i % 3), 0.0);
      Box3D placed = g;
      placed.cx = 12.0 * i;
      placed.cy = 0.0;
      f.gts.push_back(placed);
      const std::size_t c = class_index(placed.cls);
      ++num_gt[c];
      if (afdet::testing::uniform(rng, 0, 1) < 0.1) continue;  // miss
      Box3D d = placed;
      d.yaw = wrap_angle(d.yaw + afdet::testing::uniform(rng, -0.5, 0.5));
      d.l *= 0.999;  // larger yaw errors fall below the IoU threshold and become FPs
      const double cf = afdet::testing::uniform(rng, 0, 1);
      f.dets.push_back(make_det(d, cf));
      const bool hit = iou_bev_rotated(d, placed) >= cfg.iou_threshold[c];
      conf[c].push_back(cf);
      flags[c].push_back(hit);
      w[c].push_back(1 - std::abs(wrap_angle(d.yaw - placed.yaw)) / kPi);
      if (afdet::testing::uniform(rng, 0, 1) < 0.2) {  // false positive far away
        Box3D fpb = placed;
        fpb.cy = 500.0;
        const double fc = afdet::testing::uniform(rng, 0, 1);
        f.dets.push_back(make_det(fpb, fc));
        conf[c].push_back(fc);
        flags[c].push_back(false);
        w[c].push_back(0.0);
      }
    }
    frames.push_back(std::move(f));
  }
  const EvalReport r = evaluate(frames, cfg);
  double mean_ap = 0, mean_aph = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double ap = afdet::testing::oracle_ap(conf[c], std::vector<double>(conf[c].size(), 1.0), flags[c], num_gt[c]);
    const double ah = afdet::testing::oracle_ap(conf[c], w[c], flags[c], num_gt[c]);
    EXPECT_NEAR(r.per_class[c].ap, ap, 1e-12);
    EXPECT_NEAR(r.per_class[c].aph, ah, 1e-12);
    EXPECT_EQ(r.per_class[c].num_gt, num_gt[c]);
    mean_ap += ap / 3;
    mean_aph += ah / 3;
  }
  EXPECT_NEAR(r.mean_ap, mean_ap, 1e-12);
  EXPECT_NEAR(r.mean_aph, mean_aph, 1e-12);
  EXPECT_LT(r.mean_ap, 1.0);
}

TEST(Evaluate, AxisAlignedKindIgnoresYaw) {
  const std::vector<Box3D> gts = {car(0)};
  const std::vector<Detection> dets = {make_det(car(0, kPi / 2), 0.9)};
  EvalConfig cfg;
  cfg.iou_kind = MatchIou::kAxisAligned3d;
  const EvalReport r = evaluate(dets, gts, cfg);
  EXPECT_EQ(r.per_class[0].ap, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[0].aph, 0.5);
  cfg.iou_kind = MatchIou::kBevRotated;
  EXPECT_EQ(evaluate(dets, gts, cfg).per_class[0].ap, 0.0);
}

TEST(Evaluate, ReportsRenderAndValidate) {
  const std::vector<Box3D> gts = {car(0)};
  const std::vector<Detection> dets = {make_det(car(0), 0.9)};
  const EvalReport r = evaluate(dets, gts, EvalConfig{});
  EXPECT_NE(report_to_json(r).find("mean_aph"), std::string::npos);
  EXPECT_NE(report_to_table(r).find("VEHICLE"), std::string::npos);
  EvalConfig bad;
  bad.iou_threshold[1] = 0.0;
  EXPECT_THROW(evaluate(dets, gts, bad), InputError);
}
