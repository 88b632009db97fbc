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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "afdet/feature_map.hpp"
#include "afdet/targets.hpp"
#include "afdet/types.hpp"
#include "afdet/voxelizer.hpp"

namespace afdet {

struct Detection {
  Box3D box;
  double score = 0.0;       // classification confidence
  double iou_pred = 0.0;    // decoded predicted IoU, clamped to [0, 1]
  double confidence = 0.0;  // final ranking value

  ClassId cls() const { return box.cls; }
};

using PerClass = std::array<double, kNumClasses>;

struct RescoreConfig {
  PerClass alpha = {0.68, 0.71, 0.65};
};

struct NmsConfig {
  PerClass iou_threshold = {0.8, 0.55, 0.55};
  std::size_t pre_nms_top_k = 500;
};

struct PostprocessConfig {
  RescoreConfig rescore;
  NmsConfig nms;
  // Peaks with heatmap score below this are discarded before decoding.
  double score_threshold = 0.1;
  bool rescore_before_nms = true;
};

struct Peak {
  std::size_t cls = 0;
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  double score = 0.0;
};

// The K best (class, cell) entries, score descending, ties by (class, v, u).
std::vector<Peak> topk_peaks(const FeatureMap& heatmap, std::size_t k);

std::vector<Detection> decode_boxes(std::span<const Peak> peaks, const TargetSet& maps,
                                    const VoxelGrid& grid, const HeadConfig& cfg);

// score^(1 - alpha) * iou^alpha with 0^0 = 1.
double rescore(double score, double iou_pred, double alpha);
void apply_rescore(std::span<Detection> dets, const RescoreConfig& cfg);

// Class-specific greedy rotated-BEV NMS on `confidence`. Returns kept input
// indices ordered by confidence descending, ties by index.
std::vector<std::size_t> class_nms_indices(std::span<const Detection> dets, const NmsConfig& cfg);
std::vector<Detection> class_nms(std::span<const Detection> dets, const NmsConfig& cfg);

// topk -> score threshold -> decode -> rescore/NMS in the configured order.
std::vector<Detection> postprocess(const TargetSet& maps, const VoxelGrid& grid,
                                   const HeadConfig& head, const PostprocessConfig& cfg);

// One JSON object per line with keys cx, cy, cz, l, w, h, yaw, class, score,
// iou_pred, confidence.
std::string detections_to_jsonl(std::span<const Detection> dets);
std::vector<Detection> detections_from_jsonl(std::string_view text);
void write_detections(const std::filesystem::path& path, std::span<const Detection> dets);
std::vector<Detection> read_detections(const std::filesystem::path& path);

}  // namespace afdet
