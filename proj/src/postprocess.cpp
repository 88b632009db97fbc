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

#include "afdet/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "afdet/errors.hpp"
#include "afdet/geometry.hpp"
#include "afdet/io.hpp"

namespace afdet {

std::vector<Peak> topk_peaks(const FeatureMap& heatmap, std::size_t k) {
  if (k < 1) throw InputError("top-K needs K >= 1");
  const std::size_t n = heatmap.data().size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const auto& data = heatmap.data();
  // Linear index order is (class, v, u) lexicographic.
  auto better = [&](std::size_t a, std::size_t b) {
    if (data[a] != data[b]) return data[a] > data[b];
    return a < b;
  };
  const std::size_t take = std::min(k, n);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(), better);
  std::vector<Peak> peaks;
  peaks.reserve(take);
  const std::size_t plane = heatmap.plane_size();
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t li = idx[i];
    peaks.push_back({li / plane, static_cast<std::uint32_t>((li % plane) % heatmap.width()),
                     static_cast<std::uint32_t>((li % plane) / heatmap.width()), data[li]});
  }
  return peaks;
}

std::vector<Detection> decode_boxes(std::span<const Peak> peaks, const TargetSet& maps,
                                    const VoxelGrid& grid, const HeadConfig& cfg) {
  const OutputGrid og = output_grid(grid, cfg);
  if (og.width != maps.width() || og.height != maps.height())
    throw InputError("head maps do not match the configured grid and stride");
  std::vector<Detection> dets;
  dets.reserve(peaks.size());
  for (const Peak& p : peaks) {
    if (p.u >= maps.width() || p.v >= maps.height() || p.cls >= maps.num_classes())
      throw InputError("peak outside head map bounds");
    const std::size_t u = p.u;
    const std::size_t v = p.v;
    Detection d;
    d.box.cx = og.min_x + (static_cast<double>(u) + maps.offset.at(0, v, u)) * og.cell_x;
    d.box.cy = og.min_y + (static_cast<double>(v) + maps.offset.at(1, v, u)) * og.cell_y;
    d.box.cz = maps.z.at(0, v, u);
    d.box.l = std::exp(maps.size.at(0, v, u));
    d.box.w = std::exp(maps.size.at(1, v, u));
    d.box.h = std::exp(maps.size.at(2, v, u));
    d.box.yaw = std::atan2(maps.yaw.at(0, v, u), maps.yaw.at(1, v, u));
    d.box.cls = class_from_index(p.cls);
    d.score = p.score;
    d.iou_pred = std::clamp(decode_iou_target(maps.iou.at(0, v, u)), 0.0, 1.0);
    d.confidence = d.score;
    dets.push_back(d);
  }
  return dets;
}

double rescore(double score, double iou_pred, double alpha) {
  return std::pow(score, 1.0 - alpha) * std::pow(iou_pred, alpha);
}

void apply_rescore(std::span<Detection> dets, const RescoreConfig& cfg) {
  for (Detection& d : dets) d.confidence = rescore(d.score, d.iou_pred, cfg.alpha[class_index(d.cls())]);
}

std::vector<std::size_t> class_nms_indices(std::span<const Detection> dets, const NmsConfig& cfg) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  std::array<std::vector<std::size_t>, kNumClasses> kept_by_class;
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const std::size_t c = class_index(dets[i].cls());
    auto& same = kept_by_class[c];
    const bool suppressed = std::any_of(same.begin(), same.end(), [&](std::size_t j) {
      return iou_bev_rotated(dets[i].box, dets[j].box) > cfg.iou_threshold[c];
    });
    if (suppressed) continue;
    same.push_back(i);
    kept.push_back(i);
  }
  return kept;
}

std::vector<Detection> class_nms(std::span<const Detection> dets, const NmsConfig& cfg) {
  std::vector<Detection> out;
  for (std::size_t i : class_nms_indices(dets, cfg)) out.push_back(dets[i]);
  return out;
}

std::vector<Detection> postprocess(const TargetSet& maps, const VoxelGrid& grid,
                                   const HeadConfig& head, const PostprocessConfig& cfg) {
  std::vector<Peak> peaks = topk_peaks(maps.heatmap, cfg.nms.pre_nms_top_k);
  std::erase_if(peaks, [&](const Peak& p) { return !(p.score >= cfg.score_threshold); });
  std::vector<Detection> dets = decode_boxes(peaks, maps, grid, head);
  if (cfg.rescore_before_nms) {
    apply_rescore(dets, cfg.rescore);
    return class_nms(dets, cfg.nms);
  }
  std::vector<Detection> kept = class_nms(dets, cfg.nms);
  apply_rescore(kept, cfg.rescore);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  return kept;
}

std::string detections_to_jsonl(std::span<const Detection> dets) {
  std::ostringstream os;
  for (const Detection& d : dets) {
    nlohmann::ordered_json j = {{"cx", d.box.cx},      {"cy", d.box.cy},       {"cz", d.box.cz},
                                {"l", d.box.l},        {"w", d.box.w},         {"h", d.box.h},
                                {"yaw", d.box.yaw},    {"class", class_name(d.cls())},
                                {"score", d.score},    {"iou_pred", d.iou_pred},
                                {"confidence", d.confidence}};
    os << j.dump() << '\n';
  }
  return os.str();
}

std::vector<Detection> detections_from_jsonl(std::string_view text) {
  std::vector<Detection> dets;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Detection d;
      d.box = make_box(j.at("cx"), j.at("cy"), j.at("cz"), j.at("l"), j.at("w"), j.at("h"),
                       j.at("yaw"), parse_class(j.at("class").get<std::string>()));
      d.score = j.at("score");
      d.iou_pred = j.at("iou_pred");
      d.confidence = j.at("confidence");
      dets.push_back(d);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("detections line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return dets;
}

void write_detections(const std::filesystem::path& path, std::span<const Detection> dets) {
  write_file_text(path, detections_to_jsonl(dets));
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  return detections_from_jsonl(read_file_text(path));
}

}  // namespace afdet
