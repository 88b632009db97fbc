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

// afdet command-line front end.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "afdet/augment.hpp"
#include "afdet/errors.hpp"
#include "afdet/evaluator.hpp"
#include "afdet/harness.hpp"
#include "afdet/io.hpp"
#include "afdet/model_utils.hpp"
#include "afdet/postprocess.hpp"
#include "afdet/targets.hpp"
#include "afdet/voxelizer.hpp"

namespace fs = std::filesystem;
using namespace afdet;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
  std::string output_dir = "out";
};

PipelineConfig load_config(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig::preset_config(Preset::kBase)
                                        : pipeline_config_from_json(read_file_text(g.config));
  if (g.threads) cfg.threads = *g.threads;
  return cfg;
}

// Points of one scene after ingest, densify and range filtering.
PointCloud ingest_scene(const PipelineConfig& cfg, const SynthFrame& frame) {
  PointCloud points = convert_range_records(frame.current);
  if (cfg.num_frames >= 2)
    points = densify(points, convert_range_records(frame.previous), frame.pose_current,
                     frame.pose_previous, cfg.frame_lag, cfg.threads);
  return filter_range(points, cfg.inference_range);
}

std::vector<fs::path> scene_dirs_from(const std::string& path) {
  if (fs::exists(fs::path(path) / "labels.json")) return {fs::path(path)};
  auto dirs = list_corpus(path);
  if (dirs.empty()) throw InputError("no scene_* directories under '" + path + "'");
  return dirs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AFDet deterministic pipeline tools"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "pipeline config JSON");
  app.add_option("--seed", g.seed, "RNG seed");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware concurrency)");
  app.add_option("--output-dir", g.output_dir, "output directory");

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus of scene directories");
  std::size_t num_scenes = 1;
  synth->add_option("-n,--num-scenes", num_scenes, "number of scenes")->check(CLI::PositiveNumber);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "convert, densify and range-filter one scene into points.pcpd");
  std::string scene_dir;
  ingest->add_option("scene", scene_dir, "scene directory")->required();

  // voxelize
  auto* vox = app.add_subcommand("voxelize", "voxelize a PCPD cloud into voxels.voxl");
  std::string pcpd_path;
  std::optional<std::uint32_t> max_points;
  std::optional<std::uint64_t> max_voxels;
  bool training_caps = false;
  vox->add_option("points", pcpd_path, "PCPD point file")->required();
  vox->add_option("--max-points", max_points, "per-voxel point cap");
  vox->add_option("--max-voxels", max_voxels, "voxel cap");
  vox->add_flag("--training", training_caps, "use the training range and caps from the config");

  // augment
  auto* aug = app.add_subcommand("augment", "augment one scene (GT sampling, global transform, instance noise)");
  std::string aug_scene, db_path;
  bool write_db = false, no_global = false, no_noise = false;
  aug->add_option("scene", aug_scene, "scene directory, or a corpus with --write-db")->required();
  aug->add_option("--db", db_path, "GT database index JSON to sample from");
  aug->add_flag("--write-db", write_db, "build a GT database from the scene(s) instead of augmenting");
  aug->add_flag("--no-global", no_global, "skip the global flip/rotate/scale/translate");
  aug->add_flag("--no-noise", no_noise, "skip per-instance noise");

  // encode
  auto* enc = app.add_subcommand("encode", "encode training targets for one scene into <scene>.tgts");
  std::string enc_scene;
  enc->add_option("scene", enc_scene, "scene directory")->required();

  // decode
  auto* dec = app.add_subcommand("decode", "decode head maps (TGTS) into detections.jsonl");
  std::string tgts_path;
  std::optional<double> score_threshold;
  dec->add_option("maps", tgts_path, "TGTS head map file")->required();
  dec->add_option("--score-threshold", score_threshold, "minimum peak score");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate detection files against a corpus");
  std::string det_dir, eval_corpus, iou_kind = "bev";
  ev->add_option("detections", det_dir, "directory of <scene>.jsonl files")->required();
  ev->add_option("corpus", eval_corpus, "corpus or scene directory with labels")->required();
  ev->add_option("--iou-kind", iou_kind, "bev or 3d")->check(CLI::IsMember({"bev", "3d"}));

  // bench
  auto* bn = app.add_subcommand("bench", "time pipeline stages over a corpus");
  std::string bench_corpus, stage = "e2e";
  std::size_t reps = 3;
  bn->add_option("corpus", bench_corpus, "corpus directory")->required();
  bn->add_option("--stage", stage, "ingest, voxelize, encode, decode, nms or e2e");
  bn->add_option("--repetitions", reps, "timed repetitions (>= 3)");

  // swa-avg
  auto* swa = app.add_subcommand("swa-avg", "average checkpoints");
  std::vector<std::string> ckpts;
  std::string out_ckpt;
  swa->add_option("checkpoints", ckpts, "input CKPT files")->required();
  swa->add_option("-o,--output", out_ckpt, "output CKPT")->required();

  // fold-bn
  auto* fold = app.add_subcommand("fold-bn", "fold batch-norm layers into preceding convolutions");
  std::string fold_in, pairs_path, fold_out;
  fold->add_option("checkpoint", fold_in, "input CKPT")->required();
  fold->add_option("pairs", pairs_path, "JSON list of conv/bn name pairs")->required();
  fold->add_option("-o,--output", fold_out, "output CKPT")->required();

  // run
  auto* run = app.add_subcommand("run", "run the full ideal-head pipeline and evaluation over a corpus");
  std::string run_corpus;
  run->add_option("corpus", run_corpus, "corpus directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const fs::path out = g.output_dir;
    if (*synth) {
      SynthSpec spec;
      spec.seed = g.seed;
      const auto dirs = write_corpus(out, spec, num_scenes);
      std::printf("wrote %zu scenes to %s\n", dirs.size(), out.string().c_str());
    } else if (*ingest) {
      const PipelineConfig cfg = load_config(g);
      const PointCloud points = ingest_scene(cfg, read_scene_dir(scene_dir));
      write_pcpd(out / "points.pcpd", points);
      std::printf("%zu points -> %s\n", points.size(), (out / "points.pcpd").string().c_str());
    } else if (*vox) {
      const PipelineConfig cfg = load_config(g);
      VoxelizeOptions opts;
      opts.threads = cfg.threads;
      VoxelGrid grid = cfg.inference_grid();
      if (training_caps) {
        grid = cfg.training_grid();
        opts.max_points_per_voxel = cfg.train_max_points_per_voxel;
        opts.max_voxels = cfg.train_max_voxels;
      }
      if (max_points) opts.max_points_per_voxel = max_points;
      if (max_voxels) opts.max_voxels = max_voxels;
      const SparseVoxels v = voxelize(read_pcpd(pcpd_path), grid, opts);
      write_voxl(out / "voxels.voxl", v);
      std::printf("%zu voxels (dropped points %llu, dropped voxels %llu, out of range %llu)\n", v.size(),
                  static_cast<unsigned long long>(v.dropped_points),
                  static_cast<unsigned long long>(v.dropped_voxels),
                  static_cast<unsigned long long>(v.out_of_range_points));
    } else if (*aug) {
      const PipelineConfig cfg = load_config(g);
      if (write_db) {
        std::vector<Scene> scenes;
        for (const auto& dir : scene_dirs_from(aug_scene)) {
          const SynthFrame f = read_scene_dir(dir);
          scenes.push_back({ingest_scene(cfg, f), f.labels});
        }
        const GtDatabase db = build_gt_database(scenes);
        write_gt_database(db, out / "gt_db.json", out / "gt_db.pcpd");
        std::printf("%zu database entries -> %s\n", db.size(), (out / "gt_db.json").string().c_str());
      } else {
        const SynthFrame f = read_scene_dir(aug_scene);
        Scene scene{ingest_scene(cfg, f), f.labels};
        if (!db_path.empty()) scene = sample_gt(read_gt_database(db_path), scene, kDefaultSampleCounts, g.seed);
        if (!no_global) {
          std::mt19937_64 rng(g.seed + 1);
          scene = apply_global_transform(scene, draw_global_transform(rng));
        }
        if (!no_noise) scene = instance_noise(scene, InstanceNoiseSpec{}, g.seed + 2);
        write_pcpd(out / "points.pcpd", scene.points);
        write_file_text(out / "labels.json", boxes_to_json(scene.boxes) + "\n");
        std::printf("%zu points, %zu boxes -> %s\n", scene.points.size(), scene.boxes.size(),
                    out.string().c_str());
      }
    } else if (*enc) {
      const PipelineConfig cfg = load_config(g);
      const SynthFrame f = read_scene_dir(enc_scene);
      const TargetSet t = encode_targets(f.labels, cfg.inference_grid(), cfg.head);
      const fs::path dst = out / (fs::path(enc_scene).filename().string() + ".tgts");
      write_tgts(dst, t);
      std::printf("%zu objects (out of range %zu, over limit %zu, collisions %zu) -> %s\n", t.obj_index.size(),
                  t.diagnostics.out_of_range, t.diagnostics.over_limit, t.diagnostics.center_collisions,
                  dst.string().c_str());
    } else if (*dec) {
      PipelineConfig cfg = load_config(g);
      if (score_threshold) cfg.post.score_threshold = *score_threshold;
      const auto dets = postprocess(read_tgts(tgts_path), cfg.inference_grid(), cfg.head, cfg.post);
      write_detections(out / "detections.jsonl", dets);
      std::printf("%zu detections -> %s\n", dets.size(), (out / "detections.jsonl").string().c_str());
    } else if (*ev) {
      PipelineConfig cfg = load_config(g);
      if (ev->count("--iou-kind"))
        cfg.eval.iou_kind = iou_kind == "3d" ? MatchIou::kAxisAligned3d : MatchIou::kBevRotated;
      std::vector<EvalFrame> frames;
      for (const auto& dir : scene_dirs_from(eval_corpus)) {
        EvalFrame fr;
        fr.dets = read_detections(fs::path(det_dir) / (dir.filename().string() + ".jsonl"));
        for (const Box3D& b : read_scene_dir(dir).labels)
          if (cfg.inference_range.contains_center(b)) fr.gts.push_back(b);
        frames.push_back(std::move(fr));
      }
      const EvalReport report = evaluate(frames, cfg.eval);
      write_file_text(out / "metrics.json", report_to_json(report) + "\n");
      write_file_text(out / "metrics.txt", report_to_table(report));
      std::cout << report_to_table(report);
    } else if (*bn) {
      const PipelineConfig cfg = load_config(g);
      const auto dirs = scene_dirs_from(bench_corpus);
      const BenchReport report = bench(parse_bench_stage(stage), cfg, dirs, reps);
      write_file_text(out / "bench.json", bench_to_json(report) + "\n");
      write_file_text(out / "bench.txt", bench_to_table(report));
      std::cout << bench_to_table(report);
    } else if (*swa) {
      std::vector<Checkpoint> in;
      for (const auto& p : ckpts) in.push_back(read_ckpt(p));
      write_ckpt(out_ckpt, swa_average(in));
      std::printf("averaged %zu checkpoints -> %s\n", in.size(), out_ckpt.c_str());
    } else if (*fold) {
      const auto pairs = fold_pairs_from_json(read_file_text(pairs_path));
      write_ckpt(fold_out, fold_checkpoint(read_ckpt(fold_in), pairs));
      std::printf("folded %zu pairs -> %s\n", pairs.size(), fold_out.c_str());
    } else if (*run) {
      const PipelineConfig cfg = load_config(g);
      const auto dirs = scene_dirs_from(run_corpus);
      const PipelineResult result = run_pipeline(cfg, dirs);
      write_pipeline_outputs(out, result);
      std::cout << report_to_table(result.report);
    }
    return 0;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InvariantError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
