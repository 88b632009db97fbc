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

#include "afdet/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "afdet/errors.hpp"
#include "afdet/io.hpp"
#include "afdet/parallel.hpp"

namespace afdet {

Pose Pose::translation(double tx, double ty, double tz) {
  Pose p;
  p(0, 3) = tx;
  p(1, 3) = ty;
  p(2, 3) = tz;
  return p;
}

Pose Pose::rotation_z(double angle, double tx, double ty, double tz) {
  Pose p = translation(tx, ty, tz);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  p(0, 0) = c;
  p(0, 1) = -s;
  p(1, 0) = s;
  p(1, 1) = c;
  return p;
}

void Pose::validate() const {
  constexpr double kTol = 1e-6;
  for (double v : m)
    if (!std::isfinite(v)) throw InputError("corrupt pose: non-finite entry");
  if (std::abs((*this)(3, 0)) > 0.0 || std::abs((*this)(3, 1)) > 0.0 ||
      std::abs((*this)(3, 2)) > 0.0 || (*this)(3, 3) != 1.0)
    throw InputError("corrupt pose: bottom row must be (0, 0, 0, 1)");
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += (*this)(k, i) * (*this)(k, j);
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > kTol)
        throw InputError("corrupt pose: rotation block is not orthonormal");
    }
  }
  const Pose& p = *this;
  const double det = p(0, 0) * (p(1, 1) * p(2, 2) - p(1, 2) * p(2, 1)) -
                     p(0, 1) * (p(1, 0) * p(2, 2) - p(1, 2) * p(2, 0)) +
                     p(0, 2) * (p(1, 0) * p(2, 1) - p(1, 1) * p(2, 0));
  if (std::abs(det - 1.0) > kTol) throw InputError("corrupt pose: rotation determinant is not +1");
}

Pose Pose::inverse() const {
  validate();
  Pose inv;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) inv(r, c) = (*this)(c, r);
  for (int r = 0; r < 3; ++r) {
    double t = 0.0;
    for (int k = 0; k < 3; ++k) t += inv(r, k) * (*this)(k, 3);
    inv(r, 3) = -t;
  }
  return inv;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += (*this)(r, k) * rhs(k, c);
      out(r, c) = acc;
    }
  return out;
}

void Pose::apply(double& x, double& y, double& z) const {
  const double nx = m[0] * x + m[1] * y + m[2] * z + m[3];
  const double ny = m[4] * x + m[5] * y + m[6] * z + m[7];
  const double nz = m[8] * x + m[9] * y + m[10] * z + m[11];
  x = nx;
  y = ny;
  z = nz;
}

PointCloud convert_range_records(std::span<const RangeRecord> records, double clamp) {
  if (!(clamp > 0.0)) throw InputError("intensity clamp must be positive");
  PointCloud out;
  out.reserve(records.size());
  for (const RangeRecord& r : records) {
    if (!(r.range > 0.0)) continue;
    out.push_back(Point{r.x, r.y, r.z, std::clamp(r.intensity, 0.0, clamp), r.elongation, 0.0});
  }
  return out;
}

PointCloud densify(std::span<const Point> current, std::span<const Point> previous,
                   const Pose& pose_cur, const Pose& pose_prev, double dt_prev,
                   std::size_t threads) {
  if (!(dt_prev > 0.0)) throw InputError("previous-frame time lag must be positive");
  pose_prev.validate();
  const Pose prev_to_cur = pose_cur.inverse() * pose_prev;

  PointCloud out(current.size() + previous.size());
  std::copy(current.begin(), current.end(), out.begin());
  const std::size_t offset = current.size();
  parallel_for(previous.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Point p = previous[i];
      prev_to_cur.apply(p.x, p.y, p.z);
      p.dt = dt_prev;
      out[offset + i] = p;
    }
  });
  return out;
}

PointCloud filter_range(std::span<const Point> points, const Range3& roi) {
  for (int a = 0; a < 3; ++a)
    if (!(roi.min[a] < roi.max[a])) throw InputError("region of interest needs min < max per axis");
  PointCloud out;
  out.reserve(points.size());
  std::copy_if(points.begin(), points.end(), std::back_inserter(out),
               [&](const Point& p) { return roi.contains(p); });
  return out;
}

std::vector<std::uint8_t> encode_rngr(std::span<const RangeRecord> records) {
  ByteWriter w;
  w.magic("RNGR");
  w.put<std::uint16_t>(1);
  w.put<std::uint64_t>(records.size());
  for (const RangeRecord& r : records) {
    for (double v : {r.range, r.intensity, r.elongation, r.x, r.y, r.z})
      w.put<float>(static_cast<float>(v));
  }
  return w.take();
}

std::vector<RangeRecord> decode_rngr(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "RNGR");
  r.expect_magic("RNGR");
  const auto version = r.get<std::uint16_t>();
  if (version != 1) throw InputError("RNGR: unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint64_t>();
  if (count > r.remaining() / (6 * sizeof(float))) throw InputError("RNGR: truncated input");
  std::vector<RangeRecord> out(count);
  for (RangeRecord& rec : out) {
    rec.range = r.get<float>();
    rec.intensity = r.get<float>();
    rec.elongation = r.get<float>();
    rec.x = r.get<float>();
    rec.y = r.get<float>();
    rec.z = r.get<float>();
  }
  r.expect_end();
  return out;
}

void write_rngr(const std::filesystem::path& path, std::span<const RangeRecord> records) {
  write_file_bytes(path, encode_rngr(records));
}

std::vector<RangeRecord> read_rngr(const std::filesystem::path& path) {
  return decode_rngr(read_file_bytes(path));
}

Pose pose_from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("pose JSON: ") + e.what());
  }
  if (!j.is_array() || j.size() != 16) throw InputError("pose JSON must be an array of 16 numbers");
  Pose p;
  for (std::size_t i = 0; i < 16; ++i) {
    if (!j[i].is_number()) throw InputError("pose JSON must be an array of 16 numbers");
    p.m[i] = j[i].get<double>();
  }
  p.validate();
  return p;
}

std::string pose_to_json_text(const Pose& pose) {
  return nlohmann::json(pose.m).dump();
}

Pose read_pose_json(const std::filesystem::path& path) {
  return pose_from_json_text(read_file_text(path));
}

void write_pose_json(const std::filesystem::path& path, const Pose& pose) {
  write_file_text(path, pose_to_json_text(pose) + "\n");
}

}  // namespace afdet
