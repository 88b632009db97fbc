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

#include "afdet/flat_api.hpp"

#include <algorithm>

#include "afdet/errors.hpp"
#include "afdet/evaluator.hpp"
#include "afdet/geometry.hpp"
#include "afdet/postprocess.hpp"
#include "afdet/voxelizer.hpp"

namespace afdet::flat {

namespace {

constexpr std::size_t kBoxDim = 7;

Box3D box_at(std::span<const float> boxes, std::size_t i, ClassId cls) {
  const float* b = boxes.data() + i * kBoxDim;
  return make_box(b[0], b[1], b[2], b[3], b[4], b[5], b[6], cls);
}

void check_rows(std::size_t len, std::size_t width, const char* what) {
  if (len % width != 0)
    throw InputError(std::string(what) + ": buffer length " + std::to_string(len) +
                     " is not a multiple of " + std::to_string(width));
}

ClassId class_of(std::int32_t c) {
  if (c < 0) throw InputError("class ids must be non-negative");
  return class_from_index(static_cast<std::size_t>(c));
}

}  // namespace

Voxels voxelize(std::span<const float> cloud, const GridParams& params,
                std::optional<std::uint32_t> max_points_per_voxel,
                std::optional<std::uint64_t> max_voxels, std::size_t threads) {
  check_rows(cloud.size(), kPointDim, "voxelize");
  const VoxelGrid grid(Range3{params.range_min, params.range_max}, params.cell);
  PointCloud points(cloud.size() / kPointDim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const float* f = cloud.data() + i * kPointDim;
    points[i] = Point{f[0], f[1], f[2], f[3], f[4], f[5]};
  }
  VoxelizeOptions options;
  options.max_points_per_voxel = max_points_per_voxel;
  options.max_voxels = max_voxels;
  options.threads = threads;
  const SparseVoxels sv = afdet::voxelize(points, grid, options);
  Voxels out;
  out.coords.reserve(sv.size() * 3);
  for (const Cell& c : sv.coords)
    for (std::uint32_t v : c) out.coords.push_back(static_cast<std::int32_t>(v));
  out.features.reserve(sv.features.size());
  for (double f : sv.features) out.features.push_back(static_cast<float>(f));
  out.counts.assign(sv.counts.begin(), sv.counts.end());
  return out;
}

double iou_bev(std::span<const float> a, std::span<const float> b) {
  if (a.size() != kBoxDim || b.size() != kBoxDim) throw InputError("iou_bev: boxes need 7 values");
  return iou_bev_rotated(box_at(a, 0, ClassId::kVehicle), box_at(b, 0, ClassId::kVehicle));
}

double iou_3d(std::span<const float> a, std::span<const float> b) {
  if (a.size() != kBoxDim || b.size() != kBoxDim) throw InputError("iou_3d: boxes need 7 values");
  return iou_3d_axis_aligned(box_at(a, 0, ClassId::kVehicle), box_at(b, 0, ClassId::kVehicle));
}

double rescore(double score, double iou_pred, double alpha) {
  return afdet::rescore(score, iou_pred, alpha);
}

std::vector<std::int64_t> nms(std::span<const float> boxes, std::span<const float> scores,
                              std::span<const std::int32_t> classes,
                              const std::array<double, 3>& thresholds) {
  check_rows(boxes.size(), kBoxDim, "nms");
  const std::size_t n = boxes.size() / kBoxDim;
  if (scores.size() != n || classes.size() != n)
    throw InputError("nms: scores and classes must have one entry per box");
  std::vector<Detection> dets(n);
  for (std::size_t i = 0; i < n; ++i) {
    dets[i].box = box_at(boxes, i, class_of(classes[i]));
    dets[i].score = scores[i];
    dets[i].confidence = scores[i];
  }
  NmsConfig cfg;
  cfg.iou_threshold = thresholds;
  const auto kept = class_nms_indices(dets, cfg);
  return {kept.begin(), kept.end()};
}

std::map<std::string, double> evaluate(const EvalInput& dets, const EvalInput& gts,
                                       const std::array<double, 3>& iou_thresholds,
                                       bool axis_aligned_3d) {
  check_rows(dets.boxes.size(), kBoxDim, "evaluate dets");
  check_rows(gts.boxes.size(), kBoxDim, "evaluate gts");
  const std::size_t nd = dets.boxes.size() / kBoxDim;
  const std::size_t ng = gts.boxes.size() / kBoxDim;
  if (dets.classes.size() != nd || dets.scores.size() != nd)
    throw InputError("evaluate: detections need one class and score per box");
  if (gts.classes.size() != ng) throw InputError("evaluate: ground truth needs one class per box");
  if ((!dets.frame.empty() && dets.frame.size() != nd) || (!gts.frame.empty() && gts.frame.size() != ng))
    throw InputError("evaluate: frame ids must cover every row");

  auto frame_of = [](const EvalInput& in, std::size_t i) {
    return in.frame.empty() ? 0 : in.frame[i];
  };
  std::int32_t max_frame = 0;
  for (std::size_t i = 0; i < nd; ++i) max_frame = std::max(max_frame, frame_of(dets, i));
  for (std::size_t i = 0; i < ng; ++i) max_frame = std::max(max_frame, frame_of(gts, i));
  std::vector<EvalFrame> frames(static_cast<std::size_t>(max_frame) + 1);
  for (std::size_t i = 0; i < nd; ++i) {
    if (frame_of(dets, i) < 0) throw InputError("evaluate: frame ids must be non-negative");
    Detection d;
    d.box = box_at(dets.boxes, i, class_of(dets.classes[i]));
    d.score = dets.scores[i];
    d.iou_pred = 1.0;
    d.confidence = dets.scores[i];
    frames[static_cast<std::size_t>(frame_of(dets, i))].dets.push_back(d);
  }
  for (std::size_t i = 0; i < ng; ++i) {
    if (frame_of(gts, i) < 0) throw InputError("evaluate: frame ids must be non-negative");
    frames[static_cast<std::size_t>(frame_of(gts, i))].gts.push_back(
        box_at(gts.boxes, i, class_of(gts.classes[i])));
  }
  EvalConfig cfg;
  cfg.iou_threshold = iou_thresholds;
  cfg.iou_kind = axis_aligned_3d ? MatchIou::kAxisAligned3d : MatchIou::kBevRotated;
  const EvalReport r = afdet::evaluate(frames, cfg);
  std::map<std::string, double> out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::string name(class_name(class_from_index(c)));
    out[name + "/ap"] = r.per_class[c].ap;
    out[name + "/aph"] = r.per_class[c].aph;
  }
  out["mean_ap"] = r.mean_ap;
  out["mean_aph"] = r.mean_aph;
  return out;
}

}  // namespace afdet::flat
