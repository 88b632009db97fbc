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

#include "afdet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "afdet/errors.hpp"
#include "afdet/geometry.hpp"
#include "afdet/io.hpp"

namespace afdet {

std::size_t GtDatabase::size() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.size();
  return n;
}

GtDatabase build_gt_database(std::span<const Scene> scenes) {
  GtDatabase db;
  for (const Scene& scene : scenes) {
    for (const Box3D& box : scene.boxes) {
      GtEntry entry{box, {}};
      for (const Point& p : scene.points)
        if (point_in_box(p, box)) entry.local_points.push_back(to_box_local(p, box));
      db.entries[class_index(box.cls)].push_back(std::move(entry));
    }
  }
  return db;
}

Scene sample_gt(const GtDatabase& db, const Scene& scene, const ClassCounts& wanted,
                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Scene out = scene;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& pool = db.entries[c];
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t take = std::min(wanted[c], order.size());
    for (std::size_t k = 0; k < take; ++k) {
      const GtEntry& cand = pool[order[k]];
      const bool collides = std::any_of(out.boxes.begin(), out.boxes.end(), [&](const Box3D& b) {
        return iou_bev_rotated(cand.box, b) > 0.0;
      });
      if (collides) continue;
      out.boxes.push_back(cand.box);
      for (const Point& p : cand.local_points) out.points.push_back(from_box_local(p, cand.box));
    }
  }
  return out;
}

GlobalTransformSpec draw_global_transform(std::mt19937_64& rng, const GlobalAugmentRanges& r) {
  std::bernoulli_distribution flip(r.flip_probability);
  std::uniform_real_distribution<double> rot(-r.max_rotation, r.max_rotation);
  std::uniform_real_distribution<double> scale(r.min_scale, r.max_scale);
  std::uniform_real_distribution<double> shift(-r.max_translation, r.max_translation);
  GlobalTransformSpec s;
  s.flip_x = flip(rng);
  s.flip_y = flip(rng);
  s.rotation = rot(rng);
  s.scale = scale(rng);
  for (double& t : s.translation) t = shift(rng);
  return s;
}

Scene apply_global_transform(const Scene& scene, const GlobalTransformSpec& spec) {
  if (!(spec.scale > 0.0)) throw InputError("global scale must be positive");
  const double c = std::cos(spec.rotation);
  const double s = std::sin(spec.rotation);
  const auto& t = spec.translation;
  auto move = [&](double& x, double& y, double& z) {
    if (spec.flip_x) x = -x;
    if (spec.flip_y) y = -y;
    const double rx = c * x - s * y;
    const double ry = s * x + c * y;
    x = rx * spec.scale + t[0];
    y = ry * spec.scale + t[1];
    z = z * spec.scale + t[2];
  };

  Scene out = scene;
  for (Point& p : out.points) move(p.x, p.y, p.z);
  for (Box3D& b : out.boxes) {
    move(b.cx, b.cy, b.cz);
    double yaw = b.yaw;
    if (spec.flip_x) yaw = std::numbers::pi - yaw;
    if (spec.flip_y) yaw = -yaw;
    b.yaw = wrap_angle(yaw + spec.rotation);
    b.l *= spec.scale;
    b.w *= spec.scale;
    b.h *= spec.scale;
  }
  return out;
}

Scene apply_instance_perturbations(const Scene& scene,
                                   std::span<const InstancePerturbation> perturbations) {
  if (perturbations.size() != scene.boxes.size())
    throw InputError("instance perturbations must match the box count");
  // Membership is decided on the unperturbed scene; a point inside several
  // boxes goes to the highest-index box.
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(scene.points.size(), kNone);
  for (std::size_t b = scene.boxes.size(); b-- > 0;) {
    for (std::size_t i = 0; i < scene.points.size(); ++i)
      if (owner[i] == kNone && point_in_box(scene.points[i], scene.boxes[b])) owner[i] = b;
  }

  Scene out = scene;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (owner[i] == kNone) continue;
    const Box3D& box = scene.boxes[owner[i]];
    const InstancePerturbation& d = perturbations[owner[i]];
    Point& p = out.points[i];
    const double c = std::cos(d.rotation);
    const double s = std::sin(d.rotation);
    const double dx = p.x - box.cx;
    const double dy = p.y - box.cy;
    p.x = box.cx + c * dx - s * dy + d.offset[0];
    p.y = box.cy + s * dx + c * dy + d.offset[1];
    p.z += d.offset[2];
  }
  for (std::size_t b = 0; b < out.boxes.size(); ++b) {
    Box3D& box = out.boxes[b];
    const InstancePerturbation& d = perturbations[b];
    box.cx += d.offset[0];
    box.cy += d.offset[1];
    box.cz += d.offset[2];
    box.yaw = wrap_angle(box.yaw + d.rotation);
  }
  return out;
}

Scene instance_noise(const Scene& scene, const InstanceNoiseSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rot(-spec.max_rotation, spec.max_rotation);
  std::normal_distribution<double> loc(0.0, spec.location_std);
  std::vector<InstancePerturbation> draws(scene.boxes.size());
  for (auto& d : draws) {
    d.rotation = spec.max_rotation > 0.0 ? rot(rng) : 0.0;
    for (double& o : d.offset) o = spec.location_std > 0.0 ? loc(rng) : 0.0;
  }
  return apply_instance_perturbations(scene, draws);
}

namespace {

constexpr std::size_t kPcpdHeaderBytes = 4 + 2 + 8 + 1;
constexpr std::size_t kPcpdPointBytes = kPointDim * sizeof(float);

nlohmann::json box_to_json(const Box3D& b) {
  return nlohmann::json::array({b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw});
}

}  // namespace

void write_gt_database(const GtDatabase& db, const std::filesystem::path& index_path,
                       const std::filesystem::path& blob_path) {
  PointCloud blob;
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (const GtEntry& e : db.entries[c]) {
      entries.push_back({{"class", class_name(class_from_index(c))},
                         {"box", box_to_json(e.box)},
                         {"num_points", e.local_points.size()},
                         {"offset", kPcpdHeaderBytes + blob.size() * kPcpdPointBytes}});
      blob.insert(blob.end(), e.local_points.begin(), e.local_points.end());
    }
  }
  write_pcpd(blob_path, blob);
  nlohmann::json index = {{"blob", blob_path.filename().string()}, {"entries", entries}};
  write_file_text(index_path, index.dump(2) + "\n");
}

GtDatabase read_gt_database(const std::filesystem::path& index_path) {
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(read_file_text(index_path));
    const auto blob_path = index_path.parent_path() / index.at("blob").get<std::string>();
    const PointCloud blob = read_pcpd(blob_path);
    GtDatabase db;
    for (const auto& e : index.at("entries")) {
      const auto& bj = e.at("box");
      if (!bj.is_array() || bj.size() != 7) throw InputError("GT database: box needs 7 numbers");
      const ClassId cls = parse_class(e.at("class").get<std::string>());
      GtEntry entry;
      entry.box = make_box(bj[0], bj[1], bj[2], bj[3], bj[4], bj[5], bj[6], cls);
      const auto n = e.at("num_points").get<std::size_t>();
      const auto offset = e.at("offset").get<std::size_t>();
      if (offset < kPcpdHeaderBytes || (offset - kPcpdHeaderBytes) % kPcpdPointBytes != 0)
        throw InputError("GT database: misaligned blob offset");
      const std::size_t first = (offset - kPcpdHeaderBytes) / kPcpdPointBytes;
      if (first + n > blob.size()) throw InputError("GT database: entry exceeds blob");
      entry.local_points.assign(blob.begin() + static_cast<std::ptrdiff_t>(first),
                                blob.begin() + static_cast<std::ptrdiff_t>(first + n));
      db.entries[class_index(cls)].push_back(std::move(entry));
    }
    return db;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("GT database index: ") + e.what());
  }
}

}  // namespace afdet
