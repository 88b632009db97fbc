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

#include "afdet/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>

#include "afdet/errors.hpp"
#include "afdet/geometry.hpp"

namespace afdet {

void EvalConfig::validate() const {
  for (double t : iou_threshold)
    if (!(t > 0.0 && t <= 1.0)) throw InputError("evaluation IoU thresholds must lie in (0, 1]");
  if (recall_points < 2) throw InputError("evaluation needs at least 2 recall points");
}

MatchResult match_detections(std::span<const Detection> dets, std::span<const Box3D> gts,
                             const EvalConfig& cfg) {
  MatchResult res;
  res.gt_matched.assign(gts.size(), false);
  res.detections.resize(dets.size());
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  for (std::size_t i : order) {
    const Detection& d = dets[i];
    DetectionMatch m;
    m.det = i;
    m.cls = d.cls();
    m.confidence = d.confidence;
    const double thr = cfg.iou_threshold[class_index(d.cls())];
    double best = -1.0;
    std::optional<std::size_t> best_gt;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (res.gt_matched[g] || gts[g].cls != d.cls()) continue;
      const double iou = cfg.iou_kind == MatchIou::kBevRotated ? iou_bev_rotated(d.box, gts[g])
                                                               : iou_3d_axis_aligned(d.box, gts[g]);
      if (iou >= thr && iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best_gt) {
      m.tp = true;
      m.gt = best_gt;
      m.heading_error = std::abs(wrap_angle(d.box.yaw - gts[*best_gt].yaw));
      res.gt_matched[*best_gt] = true;
    }
    res.detections[i] = m;
  }
  return res;
}

namespace {

double interpolated_ap(std::span<const DetectionMatch> matches, std::size_t num_gt,
                       const EvalConfig& cfg, bool heading_weighted) {
  if (num_gt == 0) return matches.empty() ? 1.0 : 0.0;
  std::vector<std::size_t> order(matches.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return matches[a].confidence > matches[b].confidence;
  });

  std::vector<std::size_t> tp_count(order.size());
  std::vector<double> precision(order.size());
  std::size_t tp = 0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const DetectionMatch& m = matches[order[k]];
    if (m.tp) {
      ++tp;
      weighted += heading_weighted ? 1.0 - m.heading_error / std::numbers::pi : 1.0;
    }
    tp_count[k] = tp;
    precision[k] = weighted / static_cast<double>(k + 1);
  }
  // Suffix max gives the interpolated precision at recall >= r.
  for (std::size_t k = order.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);

  const std::size_t levels = cfg.recall_points - 1;
  double sum = 0.0;
  std::size_t k = 0;
  for (std::size_t j = 0; j <= levels; ++j) {
    // recall_k >= j / levels  <=>  tp_k * levels >= j * num_gt
    while (k < order.size() && tp_count[k] * levels < j * num_gt) ++k;
    if (k < order.size()) sum += precision[k];
  }
  return sum / static_cast<double>(cfg.recall_points);
}

}  // namespace

double average_precision(std::span<const DetectionMatch> matches, std::size_t num_gt,
                         const EvalConfig& cfg) {
  return interpolated_ap(matches, num_gt, cfg, false);
}

double aph(std::span<const DetectionMatch> matches, std::size_t num_gt, const EvalConfig& cfg) {
  return interpolated_ap(matches, num_gt, cfg, true);
}

EvalReport evaluate(std::span<const EvalFrame> frames, const EvalConfig& cfg) {
  cfg.validate();
  std::array<std::vector<DetectionMatch>, kNumClasses> by_class;
  EvalReport report;
  for (const EvalFrame& f : frames) {
    const MatchResult m = match_detections(f.dets, f.gts, cfg);
    for (const DetectionMatch& dm : m.detections) by_class[class_index(dm.cls)].push_back(dm);
    for (const Box3D& g : f.gts) ++report.per_class[class_index(g.cls)].num_gt;
  }
  std::size_t present = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    ClassMetrics& cm = report.per_class[c];
    cm.num_det = by_class[c].size();
    cm.num_tp = static_cast<std::size_t>(
        std::count_if(by_class[c].begin(), by_class[c].end(), [](const auto& m) { return m.tp; }));
    cm.ap = average_precision(by_class[c], cm.num_gt, cfg);
    cm.aph = aph(by_class[c], cm.num_gt, cfg);
    if (cm.num_gt > 0 || cm.num_det > 0) {
      ++present;
      report.mean_ap += cm.ap;
      report.mean_aph += cm.aph;
    }
  }
  if (present == 0) {
    report.mean_ap = 1.0;
    report.mean_aph = 1.0;
  } else {
    report.mean_ap /= static_cast<double>(present);
    report.mean_aph /= static_cast<double>(present);
  }
  return report;
}

EvalReport evaluate(std::span<const Detection> dets, std::span<const Box3D> gts,
                    const EvalConfig& cfg) {
  const EvalFrame frame{{dets.begin(), dets.end()}, {gts.begin(), gts.end()}};
  return evaluate(std::span<const EvalFrame>(&frame, 1), cfg);
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json classes = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& m = report.per_class[c];
    classes[std::string(class_name(class_from_index(c)))] = {
        {"ap", m.ap}, {"aph", m.aph}, {"num_gt", m.num_gt}, {"num_det", m.num_det}, {"num_tp", m.num_tp}};
  }
  nlohmann::ordered_json j = {
      {"classes", classes}, {"mean_ap", report.mean_ap}, {"mean_aph", report.mean_aph}};
  return j.dump(2);
}

std::string report_to_table(const EvalReport& report) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %8s %8s\n", "class", "AP", "APH", "GT", "DET", "TP");
  out += line;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& m = report.per_class[c];
    std::snprintf(line, sizeof line, "%-12s %8.4f %8.4f %8zu %8zu %8zu\n",
                  std::string(class_name(class_from_index(c))).c_str(), m.ap, m.aph, m.num_gt,
                  m.num_det, m.num_tp);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-12s %8.4f %8.4f\n", "mean", report.mean_ap, report.mean_aph);
  out += line;
  return out;
}

}  // namespace afdet
