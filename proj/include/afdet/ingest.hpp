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
#include <filesystem>
#include <span>
#include <vector>

#include "afdet/types.hpp"

namespace afdet {

struct RangeRecord {
  double range = 0.0;
  double intensity = 0.0;
  double elongation = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;
};

// 4x4 row-major homogeneous rigid transform (sensor -> world).
struct Pose {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  static Pose identity() { return {}; }
  static Pose translation(double tx, double ty, double tz);
  static Pose rotation_z(double angle, double tx = 0.0, double ty = 0.0, double tz = 0.0);

  double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 4 + c)]; }
  double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 4 + c)]; }

  // Throws InputError unless the bottom row is (0,0,0,1) and the rotation
  // block is orthonormal with determinant +1 (tolerance 1e-6).
  void validate() const;
  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  void apply(double& x, double& y, double& z) const;
};

inline constexpr double kDefaultIntensityClamp = 1.5;
inline constexpr double kDefaultFrameLag = 0.1;

// Drops records with range <= 0, clamps intensity, keeps input order.
PointCloud convert_range_records(std::span<const RangeRecord> records,
                                 double clamp = kDefaultIntensityClamp);

// Moves `previous` into the current sensor frame (pose_cur^-1 * pose_prev),
// stamps dt = dt_prev and appends it after `current`.
PointCloud densify(std::span<const Point> current, std::span<const Point> previous,
                   const Pose& pose_cur, const Pose& pose_prev, double dt_prev = kDefaultFrameLag,
                   std::size_t threads = 1);

// Keeps points with min <= coord < max on every axis.
PointCloud filter_range(std::span<const Point> points, const Range3& roi);

// "RNGR" raw range records: magic, u16 version = 1, u64 count, then float32
// (range, intensity, elongation, x, y, z) per record.
std::vector<std::uint8_t> encode_rngr(std::span<const RangeRecord> records);
std::vector<RangeRecord> decode_rngr(std::span<const std::uint8_t> bytes);
void write_rngr(const std::filesystem::path& path, std::span<const RangeRecord> records);
std::vector<RangeRecord> read_rngr(const std::filesystem::path& path);

// Pose file: JSON array of 16 numbers, row-major.
Pose read_pose_json(const std::filesystem::path& path);
void write_pose_json(const std::filesystem::path& path, const Pose& pose);
Pose pose_from_json_text(std::string_view text);
std::string pose_to_json_text(const Pose& pose);

}  // namespace afdet
