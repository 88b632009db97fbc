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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afdet/augment.hpp"
#include "afdet/evaluator.hpp"
#include "afdet/ingest.hpp"
#include "afdet/postprocess.hpp"
#include "afdet/targets.hpp"
#include "afdet/voxelizer.hpp"

namespace afdet {

struct SizeProfile {
  double l = 1.0, w = 1.0, h = 1.0;
};

struct SynthSpec {
  std::uint64_t seed = 0;
  ClassCounts object_counts = {6, 4, 3};
  Range3 roi{{-75.2, -75.2, -2.0}, {75.2, 75.2, 4.0}};
  std::size_t min_points_per_object = 20;
  std::size_t max_points_per_object = 120;
  std::size_t ground_points = 2000;
  std::array<SizeProfile, kNumClasses> sizes = {
      SizeProfile{4.5, 2.0, 1.7}, SizeProfile{0.9, 0.9, 1.7}, SizeProfile{1.8, 0.8, 1.7}};
  double size_jitter = 0.2;
  // Minimum BEV center spacing between objects, in addition to non-overlap.
  double min_center_distance = 1.5;
  // Fraction of extra invalid (range <= 0) records injected into frames.
  double invalid_fraction = 0.02;

  void validate() const;
};

// Non-overlapping boxes resting on z = 0 with surface-sampled points, plus
// ground returns just below z = 0. Deterministic per seed.
Scene synth_scene(const SynthSpec& spec);

// Two raw sweeps of one synthetic scene. Labels are in the current sensor frame.
struct SynthFrame {
  std::vector<RangeRecord> current;
  std::vector<RangeRecord> previous;
  Pose pose_current;
  Pose pose_previous;
  std::vector<Box3D> labels;
};

SynthFrame synth_frame(const SynthSpec& spec);

// Scene directory layout: current.rngr, previous.rngr, pose_current.json,
// pose_previous.json, labels.json.
void write_scene_dir(const std::filesystem::path& dir, const SynthFrame& frame);
SynthFrame read_scene_dir(const std::filesystem::path& dir);
// Sorted scene_* subdirectories of a corpus directory.
std::vector<std::filesystem::path> list_corpus(const std::filesystem::path& corpus);
std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& corpus,
                                                const SynthSpec& base, std::size_t num_scenes);

std::string boxes_to_json(std::span<const Box3D> boxes);
std::vector<Box3D> boxes_from_json(std::string_view text);

enum class Preset { kBase, kLite, kFull };

struct PipelineConfig {
  Preset preset = Preset::kBase;
  std::size_t num_frames = 2;
  double frame_lag = kDefaultFrameLag;
  Range3 training_range;
  Range3 inference_range;
  std::array<double, 3> grid_size{0.1, 0.1, 0.15};
  std::uint32_t train_max_points_per_voxel = 15;
  std::uint64_t train_max_voxels = 300000;
  HeadConfig head;
  PostprocessConfig post;
  EvalConfig eval;
  std::size_t threads = 1;
  // When set, head maps are read from <dir>/<scene name>.tgts instead of the
  // ideal head built from the labels.
  std::optional<std::filesystem::path> head_maps_dir;

  static PipelineConfig preset_config(Preset p);
  VoxelGrid inference_grid() const;
  VoxelGrid training_grid() const;
};

Preset parse_preset(std::string_view name);
std::string_view preset_name(Preset p);
// JSON object mirroring PipelineConfig; unspecified fields keep the values of
// the named preset ("preset" key, default base).
PipelineConfig pipeline_config_from_json(std::string_view text);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

// Head outputs equal to the encoded targets with the IoU branch predicting a
// perfect overlap everywhere.
TargetSet ideal_head(const TargetSet& targets);

struct StageTimes {
  double ingest = 0.0;
  double voxelize = 0.0;
  double encode = 0.0;
  double decode = 0.0;
  double nms = 0.0;

  double total() const { return ingest + voxelize + encode + decode + nms; }
};

struct SceneResult {
  std::string name;
  std::size_t num_points = 0;
  std::size_t num_voxels = 0;
  std::vector<Detection> detections;
  std::vector<Box3D> ground_truth;  // labels inside the inference range
  TargetDiagnostics target_diagnostics;
  StageTimes times;  // seconds
};

// ingest -> densify -> filter -> voxelize -> encode -> head -> decode ->
// rescore -> NMS for one loaded scene.
SceneResult process_scene(const PipelineConfig& cfg, const SynthFrame& frame,
                          const std::string& name = "scene");

struct PipelineResult {
  std::vector<SceneResult> scenes;
  EvalReport report;
};

PipelineResult run_pipeline(const PipelineConfig& cfg, std::span<const std::filesystem::path> scene_dirs);
// Writes detections/<scene>.jsonl, metrics.json and metrics.txt.
void write_pipeline_outputs(const std::filesystem::path& out_dir, const PipelineResult& result);

enum class BenchStage { kIngest, kVoxelize, kEncode, kDecode, kNms, kE2e };
BenchStage parse_bench_stage(std::string_view name);

struct StageStats {
  std::string stage;
  std::vector<double> samples_ms;
  double min_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

struct BenchReport {
  std::size_t scenes = 0;
  std::size_t repetitions = 0;
  double load_ms = 0.0;  // file I/O, measured once outside the timed stages
  std::vector<StageStats> stages;
  double voxelize_points_per_s = 0.0;
  std::uint64_t points_voxelized = 0;
};

// Times each stage over the corpus; one extra warm-up repetition is run first
// and discarded. Requires repetitions >= 3.
BenchReport bench(BenchStage stage, const PipelineConfig& cfg,
                  std::span<const std::filesystem::path> scene_dirs, std::size_t repetitions);
std::string bench_to_json(const BenchReport& report);
std::string bench_to_table(const BenchReport& report);

}  // namespace afdet
