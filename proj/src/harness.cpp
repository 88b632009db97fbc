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

#include "afdet/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <random>
#include <sstream>

#include "afdet/errors.hpp"
#include "afdet/geometry.hpp"
#include "afdet/io.hpp"
#include "afdet/parallel.hpp"

namespace afdet {

using nlohmann::json;

void SynthSpec::validate() const {
  for (int a = 0; a < 3; ++a)
    if (!(roi.min[a] < roi.max[a])) throw InputError("synth ROI needs min < max");
  if (min_points_per_object > max_points_per_object)
    throw InputError("synth points-per-object range is inverted");
  for (const SizeProfile& s : sizes)
    if (!(s.l > 0 && s.w > 0 && s.h > 0)) throw InputError("synth sizes must be positive");
  if (!(size_jitter >= 0.0 && size_jitter < 1.0)) throw InputError("synth size jitter must lie in [0, 1)");
  if (!(invalid_fraction >= 0.0)) throw InputError("synth invalid fraction must be non-negative");
}

namespace {

PointCloud sample_surface_points(std::span<const Box3D> boxes, const SynthSpec& spec,
                                 std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> count(spec.min_points_per_object, spec.max_points_per_object);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::uniform_real_distribution<double> intensity(0.0, 2.0);
  std::uniform_real_distribution<double> elongation(0.0, 1.0);
  PointCloud points;
  for (const Box3D& box : boxes) {
    const double areas[3] = {box.w * box.h, box.l * box.h, box.l * box.w};
    std::discrete_distribution<int> face({areas[0], areas[0], areas[1], areas[1], areas[2], areas[2]});
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const int f = face(rng);
      double lx = unit(rng) * box.l;
      double ly = unit(rng) * box.w;
      double lz = unit(rng) * box.h;
      const double sign = (f % 2 == 0) ? 0.5 : -0.5;
      if (f < 2) lx = sign * box.l;
      else if (f < 4) ly = sign * box.w;
      else lz = sign * box.h;
      Point local{lx, ly, lz, intensity(rng), elongation(rng), 0.0};
      points.push_back(from_box_local(local, box));
    }
  }
  return points;
}

void append_ground(PointCloud& points, const SynthSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> gx(spec.roi.min[0], spec.roi.max[0]);
  std::uniform_real_distribution<double> gy(spec.roi.min[1], spec.roi.max[1]);
  std::uniform_real_distribution<double> gz(-0.1, -0.02);
  std::uniform_real_distribution<double> intensity(0.0, 0.5);
  std::uniform_real_distribution<double> elongation(0.0, 0.2);
  for (std::size_t i = 0; i < spec.ground_points; ++i)
    points.push_back(Point{gx(rng), gy(rng), gz(rng), intensity(rng), elongation(rng), 0.0});
}

std::vector<Box3D> place_boxes(const SynthSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(1.0 - spec.size_jitter, 1.0 + spec.size_jitter);
  std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
  std::vector<Box3D> boxes;
  constexpr int kAttempts = 200;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t k = 0; k < spec.object_counts[c]; ++k) {
      for (int attempt = 0; attempt < kAttempts; ++attempt) {
        const SizeProfile& s = spec.sizes[c];
        const double l = s.l * jitter(rng);
        const double w = s.w * jitter(rng);
        const double h = s.h * jitter(rng);
        const double margin = 0.5 * std::hypot(l, w);
        const double lo_x = spec.roi.min[0] + margin, hi_x = spec.roi.max[0] - margin;
        const double lo_y = spec.roi.min[1] + margin, hi_y = spec.roi.max[1] - margin;
        if (!(lo_x < hi_x && lo_y < hi_y)) break;
        const double cx = std::uniform_real_distribution<double>(lo_x, hi_x)(rng);
        const double cy = std::uniform_real_distribution<double>(lo_y, hi_y)(rng);
        const Box3D cand = make_box(cx, cy, 0.5 * h, l, w, h, yaw(rng), class_from_index(c));
        const bool clash = std::any_of(boxes.begin(), boxes.end(), [&](const Box3D& b) {
          return std::hypot(b.cx - cand.cx, b.cy - cand.cy) < spec.min_center_distance ||
                 iou_bev_rotated(b, cand) > 0.0;
        });
        if (clash) continue;
        boxes.push_back(cand);
        break;
      }
    }
  }
  return boxes;
}

std::vector<RangeRecord> to_records(std::span<const Point> points, double invalid_fraction,
                                    std::mt19937_64& rng) {
  std::vector<RangeRecord> records;
  records.reserve(points.size());
  for (const Point& p : points) {
    const double range = std::max(std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z), 1e-3);
    records.push_back({range, p.intensity, p.elongation, p.x, p.y, p.z});
  }
  const auto invalid = static_cast<std::size_t>(std::round(invalid_fraction * static_cast<double>(points.size())));
  std::uniform_real_distribution<double> junk(-50.0, 50.0);
  for (std::size_t i = 0; i < invalid; ++i) {
    const std::size_t at = std::uniform_int_distribution<std::size_t>(0, records.size())(rng);
    const double range = (i % 2 == 0) ? -1.0 : 0.0;
    records.insert(records.begin() + static_cast<std::ptrdiff_t>(at),
                   RangeRecord{range, 0.0, 0.0, junk(rng), junk(rng), junk(rng)});
  }
  return records;
}

}  // namespace

Scene synth_scene(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Scene scene;
  scene.boxes = place_boxes(spec, rng);
  scene.points = sample_surface_points(scene.boxes, spec, rng);
  append_ground(scene.points, spec, rng);
  return scene;
}

SynthFrame synth_frame(const SynthSpec& spec) {
  const Scene scene = synth_scene(spec);
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> place(-100.0, 100.0);
  std::uniform_real_distribution<double> speed(5.0, 15.0);
  std::uniform_real_distribution<double> turn(-0.02, 0.02);

  SynthFrame frame;
  frame.labels = scene.boxes;
  frame.pose_current = Pose::rotation_z(heading(rng), place(rng), place(rng), 0.0);
  // Previous sensor pose expressed in the current sensor frame.
  const Pose prev_in_cur = Pose::rotation_z(turn(rng), -speed(rng) * kDefaultFrameLag, 0.0, 0.0);
  frame.pose_previous = frame.pose_current * prev_in_cur;

  frame.current = to_records(scene.points, spec.invalid_fraction, rng);

  PointCloud previous = sample_surface_points(scene.boxes, spec, rng);
  append_ground(previous, spec, rng);
  const Pose cur_to_prev = prev_in_cur.inverse();
  for (Point& p : previous) cur_to_prev.apply(p.x, p.y, p.z);
  frame.previous = to_records(previous, spec.invalid_fraction, rng);
  return frame;
}

std::string boxes_to_json(std::span<const Box3D> boxes) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Box3D& b : boxes)
    arr.push_back({{"cx", b.cx}, {"cy", b.cy}, {"cz", b.cz}, {"l", b.l}, {"w", b.w}, {"h", b.h},
                   {"yaw", b.yaw}, {"class", class_name(b.cls)}});
  return arr.dump(2);
}

std::vector<Box3D> boxes_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (!j.is_array()) throw InputError("labels JSON must be an array of boxes");
    std::vector<Box3D> boxes;
    for (const auto& b : j)
      boxes.push_back(make_box(b.at("cx"), b.at("cy"), b.at("cz"), b.at("l"), b.at("w"), b.at("h"),
                               b.at("yaw"), parse_class(b.at("class").get<std::string>())));
    return boxes;
  } catch (const json::exception& e) {
    throw InputError(std::string("labels JSON: ") + e.what());
  }
}

void write_scene_dir(const std::filesystem::path& dir, const SynthFrame& frame) {
  std::filesystem::create_directories(dir);
  write_rngr(dir / "current.rngr", frame.current);
  write_rngr(dir / "previous.rngr", frame.previous);
  write_pose_json(dir / "pose_current.json", frame.pose_current);
  write_pose_json(dir / "pose_previous.json", frame.pose_previous);
  write_file_text(dir / "labels.json", boxes_to_json(frame.labels) + "\n");
}

SynthFrame read_scene_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw InputError("scene directory '" + dir.string() + "' does not exist");
  SynthFrame frame;
  frame.current = read_rngr(dir / "current.rngr");
  if (std::filesystem::exists(dir / "previous.rngr")) frame.previous = read_rngr(dir / "previous.rngr");
  frame.pose_current = read_pose_json(dir / "pose_current.json");
  frame.pose_previous = std::filesystem::exists(dir / "pose_previous.json")
                            ? read_pose_json(dir / "pose_previous.json")
                            : frame.pose_current;
  frame.labels = boxes_from_json(read_file_text(dir / "labels.json"));
  return frame;
}

std::vector<std::filesystem::path> list_corpus(const std::filesystem::path& corpus) {
  if (!std::filesystem::is_directory(corpus))
    throw InputError("corpus directory '" + corpus.string() + "' does not exist");
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(corpus))
    if (entry.is_directory() && entry.path().filename().string().starts_with("scene_"))
      dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& corpus,
                                                const SynthSpec& base, std::size_t num_scenes) {
  std::vector<std::filesystem::path> dirs;
  for (std::size_t i = 0; i < num_scenes; ++i) {
    SynthSpec spec = base;
    spec.seed = base.seed * 1000003ull + i;
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04zu", i);
    dirs.push_back(corpus / name);
    write_scene_dir(dirs.back(), synth_frame(spec));
  }
  return dirs;
}

Preset parse_preset(std::string_view name) {
  if (name == "base") return Preset::kBase;
  if (name == "lite") return Preset::kLite;
  if (name == "full") return Preset::kFull;
  throw InputError("unknown preset '" + std::string(name) + "' (expected base, lite or full)");
}

std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::kBase:
      return "base";
    case Preset::kLite:
      return "lite";
    case Preset::kFull:
      return "full";
  }
  throw InvariantError("unknown preset");
}

PipelineConfig PipelineConfig::preset_config(Preset p) {
  PipelineConfig c;
  c.preset = p;
  const Range3 base_range{{-75.2, -75.2, -2.0}, {75.2, 75.2, 4.0}};
  switch (p) {
    case Preset::kBase:
      c.num_frames = 2;
      c.training_range = c.inference_range = base_range;
      c.grid_size = {0.1, 0.1, 0.15};
      break;
    case Preset::kLite:
      c.num_frames = 1;
      c.training_range = c.inference_range = base_range;
      c.grid_size = {0.1, 0.1, 0.15};
      break;
    case Preset::kFull:
      c.num_frames = 2;
      c.training_range = {{-75.2, -73.6, -2.0}, {75.2, 73.6, 4.0}};
      c.inference_range = {{-80.0, -76.16, -2.0}, {80.0, 76.16, 4.0}};
      c.grid_size = {0.1, 0.08, 0.15};
      break;
  }
  return c;
}

VoxelGrid PipelineConfig::inference_grid() const { return VoxelGrid(inference_range, grid_size); }
VoxelGrid PipelineConfig::training_grid() const { return VoxelGrid(training_range, grid_size); }

namespace {

Range3 range_from_json(const json& j) {
  Range3 r;
  r.min = j.at("min").get<std::array<double, 3>>();
  r.max = j.at("max").get<std::array<double, 3>>();
  return r;
}

json range_to_json(const Range3& r) { return {{"min", r.min}, {"max", r.max}}; }

}  // namespace

PipelineConfig pipeline_config_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (!j.is_object()) throw InputError("pipeline config must be a JSON object");
    PipelineConfig c = PipelineConfig::preset_config(parse_preset(j.value("preset", std::string("base"))));
    c.num_frames = j.value("num_frames", c.num_frames);
    c.frame_lag = j.value("frame_lag", c.frame_lag);
    if (j.contains("training_range")) c.training_range = range_from_json(j["training_range"]);
    if (j.contains("inference_range")) c.inference_range = range_from_json(j["inference_range"]);
    c.grid_size = j.value("grid_size", c.grid_size);
    c.train_max_points_per_voxel = j.value("train_max_points_per_voxel", c.train_max_points_per_voxel);
    c.train_max_voxels = j.value("train_max_voxels", c.train_max_voxels);
    if (j.contains("head")) {
      const auto& h = j["head"];
      c.head.out_stride = h.value("out_stride", c.head.out_stride);
      c.head.min_radius_center = h.value("min_radius_center", c.head.min_radius_center);
      c.head.min_radius_keypoint = h.value("min_radius_keypoint", c.head.min_radius_keypoint);
      c.head.gaussian_overlap = h.value("gaussian_overlap", c.head.gaussian_overlap);
      c.head.max_objects = h.value("max_objects", c.head.max_objects);
    }
    if (j.contains("postprocess")) {
      const auto& p = j["postprocess"];
      c.post.rescore.alpha = p.value("rescore_alpha", c.post.rescore.alpha);
      c.post.nms.iou_threshold = p.value("nms_iou_threshold", c.post.nms.iou_threshold);
      c.post.nms.pre_nms_top_k = p.value("pre_nms_top_k", c.post.nms.pre_nms_top_k);
      c.post.score_threshold = p.value("score_threshold", c.post.score_threshold);
      c.post.rescore_before_nms = p.value("rescore_before_nms", c.post.rescore_before_nms);
    }
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      c.eval.iou_threshold = e.value("iou_threshold", c.eval.iou_threshold);
      const std::string kind = e.value("iou_kind", std::string("bev"));
      if (kind == "bev") c.eval.iou_kind = MatchIou::kBevRotated;
      else if (kind == "3d") c.eval.iou_kind = MatchIou::kAxisAligned3d;
      else throw InputError("eval.iou_kind must be 'bev' or '3d'");
    }
    c.threads = j.value("threads", c.threads);
    if (j.contains("head_maps_dir")) c.head_maps_dir = j["head_maps_dir"].get<std::string>();
    if (c.num_frames < 1 || c.num_frames > 2) throw InputError("num_frames must be 1 or 2");
    c.head.validate();
    c.eval.validate();
    c.inference_grid();
    c.training_grid();
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("pipeline config: ") + e.what());
  }
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j = {
      {"preset", preset_name(c.preset)},
      {"num_frames", c.num_frames},
      {"frame_lag", c.frame_lag},
      {"training_range", range_to_json(c.training_range)},
      {"inference_range", range_to_json(c.inference_range)},
      {"grid_size", c.grid_size},
      {"train_max_points_per_voxel", c.train_max_points_per_voxel},
      {"train_max_voxels", c.train_max_voxels},
      {"head",
       {{"out_stride", c.head.out_stride},
        {"min_radius_center", c.head.min_radius_center},
        {"min_radius_keypoint", c.head.min_radius_keypoint},
        {"gaussian_overlap", c.head.gaussian_overlap},
        {"max_objects", c.head.max_objects}}},
      {"postprocess",
       {{"rescore_alpha", c.post.rescore.alpha},
        {"nms_iou_threshold", c.post.nms.iou_threshold},
        {"pre_nms_top_k", c.post.nms.pre_nms_top_k},
        {"score_threshold", c.post.score_threshold},
        {"rescore_before_nms", c.post.rescore_before_nms}}},
      {"eval",
       {{"iou_threshold", c.eval.iou_threshold},
        {"iou_kind", c.eval.iou_kind == MatchIou::kBevRotated ? "bev" : "3d"}}},
      {"threads", c.threads}};
  if (c.head_maps_dir) j["head_maps_dir"] = c.head_maps_dir->string();
  return j.dump(2);
}

TargetSet ideal_head(const TargetSet& targets) {
  TargetSet head = targets;
  std::fill(head.iou.data().begin(), head.iou.data().end(), encode_iou_target(1.0));
  return head;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

SceneResult process_scene(const PipelineConfig& cfg, const SynthFrame& frame, const std::string& name) {
  SceneResult res;
  res.name = name;
  const VoxelGrid grid = cfg.inference_grid();

  auto t0 = Clock::now();
  PointCloud points = convert_range_records(frame.current);
  if (cfg.num_frames >= 2) {
    const PointCloud previous = convert_range_records(frame.previous);
    points = densify(points, previous, frame.pose_current, frame.pose_previous, cfg.frame_lag, cfg.threads);
  }
  points = filter_range(points, grid.range());
  res.times.ingest = seconds_since(t0);
  res.num_points = points.size();

  t0 = Clock::now();
  VoxelizeOptions vopts;
  vopts.threads = cfg.threads;
  const SparseVoxels voxels = voxelize(points, grid, vopts);
  res.times.voxelize = seconds_since(t0);
  res.num_voxels = voxels.size();

  t0 = Clock::now();
  const TargetSet targets = encode_targets(frame.labels, grid, cfg.head);
  res.times.encode = seconds_since(t0);
  res.target_diagnostics = targets.diagnostics;
  for (const Box3D& b : frame.labels)
    if (grid.range().contains_center(b)) res.ground_truth.push_back(b);

  PostprocessConfig post = cfg.post;
  TargetSet maps;
  if (cfg.head_maps_dir) {
    maps = read_tgts(*cfg.head_maps_dir / (name + ".tgts"));
  } else {
    maps = ideal_head(targets);
    // Ideal-head peaks are exactly 1; every other heatmap cell is a Gaussian tail.
    post.score_threshold = std::max(post.score_threshold, 1.0);
  }

  t0 = Clock::now();
  std::vector<Peak> peaks = topk_peaks(maps.heatmap, post.nms.pre_nms_top_k);
  std::erase_if(peaks, [&](const Peak& p) { return !(p.score >= post.score_threshold); });
  std::vector<Detection> dets = decode_boxes(peaks, maps, grid, cfg.head);
  res.times.decode = seconds_since(t0);

  t0 = Clock::now();
  if (post.rescore_before_nms) {
    apply_rescore(dets, post.rescore);
    res.detections = class_nms(dets, post.nms);
  } else {
    res.detections = class_nms(dets, post.nms);
    apply_rescore(res.detections, post.rescore);
    std::stable_sort(res.detections.begin(), res.detections.end(),
                     [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  }
  res.times.nms = seconds_since(t0);
  return res;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, std::span<const std::filesystem::path> scene_dirs) {
  PipelineResult result;
  result.scenes.resize(scene_dirs.size());
  const std::size_t workers = resolve_threads(cfg.threads);
  PipelineConfig per_scene = cfg;
  if (scene_dirs.size() > 1) per_scene.threads = 1;
  parallel_for(scene_dirs.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const SynthFrame frame = read_scene_dir(scene_dirs[i]);
      result.scenes[i] = process_scene(per_scene, frame, scene_dirs[i].filename().string());
    }
  });
  std::vector<EvalFrame> frames;
  frames.reserve(result.scenes.size());
  for (const SceneResult& s : result.scenes) frames.push_back({s.detections, s.ground_truth});
  result.report = evaluate(frames, cfg.eval);
  return result;
}

void write_pipeline_outputs(const std::filesystem::path& out_dir, const PipelineResult& result) {
  for (const SceneResult& s : result.scenes)
    write_detections(out_dir / "detections" / (s.name + ".jsonl"), s.detections);
  write_file_text(out_dir / "metrics.json", report_to_json(result.report) + "\n");
  write_file_text(out_dir / "metrics.txt", report_to_table(result.report));
}

BenchStage parse_bench_stage(std::string_view name) {
  if (name == "ingest") return BenchStage::kIngest;
  if (name == "voxelize") return BenchStage::kVoxelize;
  if (name == "encode") return BenchStage::kEncode;
  if (name == "decode") return BenchStage::kDecode;
  if (name == "nms") return BenchStage::kNms;
  if (name == "e2e") return BenchStage::kE2e;
  throw InputError("unknown bench stage '" + std::string(name) + "'");
}

namespace {

StageStats summarize(std::string stage, std::vector<double> samples_ms) {
  StageStats s;
  s.stage = std::move(stage);
  s.samples_ms = samples_ms;
  std::sort(samples_ms.begin(), samples_ms.end());
  const std::size_t n = samples_ms.size();
  s.min_ms = samples_ms.front();
  s.median_ms = n % 2 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95_ms = samples_ms[std::clamp<std::size_t>(rank, 1, n) - 1];
  return s;
}

}  // namespace

BenchReport bench(BenchStage stage, const PipelineConfig& cfg,
                  std::span<const std::filesystem::path> scene_dirs, std::size_t repetitions) {
  if (repetitions < 3) throw InputError("bench needs at least 3 repetitions");
  if (scene_dirs.empty()) throw InputError("bench needs a non-empty corpus");
  BenchReport report;
  report.scenes = scene_dirs.size();
  report.repetitions = repetitions;

  const auto t_load = Clock::now();
  std::vector<SynthFrame> frames;
  frames.reserve(scene_dirs.size());
  for (const auto& dir : scene_dirs) frames.push_back(read_scene_dir(dir));
  report.load_ms = seconds_since(t_load) * 1e3;

  std::array<std::vector<double>, 6> samples;
  std::uint64_t points = 0;
  for (std::size_t rep = 0; rep <= repetitions; ++rep) {
    StageTimes sum;
    std::uint64_t rep_points = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const SceneResult r = process_scene(cfg, frames[i], scene_dirs[i].filename().string());
      sum.ingest += r.times.ingest;
      sum.voxelize += r.times.voxelize;
      sum.encode += r.times.encode;
      sum.decode += r.times.decode;
      sum.nms += r.times.nms;
      rep_points += r.num_points;
    }
    if (rep == 0) continue;  // warm-up
    points = rep_points;
    const double vals[6] = {sum.ingest, sum.voxelize, sum.encode, sum.decode, sum.nms, sum.total()};
    for (int s = 0; s < 6; ++s) samples[s].push_back(vals[s] * 1e3);
  }

  const char* names[6] = {"ingest", "voxelize", "encode", "decode", "nms", "e2e"};
  const int selected = static_cast<int>(stage);
  for (int s = 0; s < 6; ++s)
    if (stage == BenchStage::kE2e || s == selected) report.stages.push_back(summarize(names[s], samples[s]));
  report.points_voxelized = points;
  const StageStats vox = summarize("voxelize", samples[1]);
  report.voxelize_points_per_s = vox.median_ms > 0.0 ? static_cast<double>(points) / (vox.median_ms * 1e-3) : 0.0;
  return report;
}

std::string bench_to_json(const BenchReport& report) {
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const StageStats& s : report.stages)
    stages.push_back({{"stage", s.stage},
                      {"samples_ms", s.samples_ms},
                      {"min_ms", s.min_ms},
                      {"median_ms", s.median_ms},
                      {"p95_ms", s.p95_ms}});
  nlohmann::ordered_json j = {{"scenes", report.scenes},
                              {"repetitions", report.repetitions},
                              {"load_ms", report.load_ms},
                              {"stages", stages},
                              {"points_voxelized_per_repetition", report.points_voxelized},
                              {"voxelize_points_per_s", report.voxelize_points_per_s}};
  return j.dump(2);
}

std::string bench_to_table(const BenchReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "scenes=%zu repetitions=%zu load=%.2f ms\n", report.scenes,
                report.repetitions, report.load_ms);
  os << line;
  std::snprintf(line, sizeof line, "%-10s %12s %12s %12s\n", "stage", "min_ms", "median_ms", "p95_ms");
  os << line;
  for (const StageStats& s : report.stages) {
    std::snprintf(line, sizeof line, "%-10s %12.3f %12.3f %12.3f\n", s.stage.c_str(), s.min_ms,
                  s.median_ms, s.p95_ms);
    os << line;
  }
  std::snprintf(line, sizeof line, "voxelize throughput: %.3e points/s\n", report.voxelize_points_per_s);
  os << line;
  return os.str();
}

}  // namespace afdet
