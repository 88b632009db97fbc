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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afdet/postprocess.hpp"
#include "afdet/types.hpp"

namespace afdet {

enum class MatchIou { kBevRotated, kAxisAligned3d };

struct EvalConfig {
  PerClass iou_threshold = {0.7, 0.5, 0.5};
  MatchIou iou_kind = MatchIou::kBevRotated;
  std::size_t recall_points = 101;

  void validate() const;
};

struct DetectionMatch {
  std::size_t det = 0;  // index into the detection list
  ClassId cls = ClassId::kVehicle;
  double confidence = 0.0;
  bool tp = false;
  std::optional<std::size_t> gt;
  double heading_error = 0.0;  // |dyaw| wrapped to [0, pi]; 0 for false positives
};

struct MatchResult {
  std::vector<DetectionMatch> detections;  // in input order
  std::vector<bool> gt_matched;
};

// Greedy matching in confidence order (ties by input index): each detection
// claims the unmatched same-class ground truth with the highest IoU at or
// above the class threshold (ties by lower GT index).
MatchResult match_detections(std::span<const Detection> dets, std::span<const Box3D> gts,
                             const EvalConfig& cfg);

// Interpolated AP over `recall_points` evenly spaced recall levels.
// num_gt == 0 yields 1 with no detections and 0 otherwise.
double average_precision(std::span<const DetectionMatch> matches, std::size_t num_gt,
                         const EvalConfig& cfg);
// Same curve with each true positive weighted by 1 - |dyaw| / pi in the precision.
double aph(std::span<const DetectionMatch> matches, std::size_t num_gt, const EvalConfig& cfg);

struct EvalFrame {
  std::vector<Detection> dets;
  std::vector<Box3D> gts;
};

struct ClassMetrics {
  double ap = 0.0;
  double aph = 0.0;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
  std::size_t num_tp = 0;
};

struct EvalReport {
  std::array<ClassMetrics, kNumClasses> per_class;
  double mean_ap = 0.0;
  double mean_aph = 0.0;
};

// Per-class AP/APH over a corpus (matching is per frame), means over the
// classes that have ground truth or detections.
EvalReport evaluate(std::span<const EvalFrame> frames, const EvalConfig& cfg);
EvalReport evaluate(std::span<const Detection> dets, std::span<const Box3D> gts,
                    const EvalConfig& cfg);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

}  // namespace afdet
