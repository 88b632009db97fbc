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

#include "afdet/io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace afdet {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write to '" + path.string() + "' failed");
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << text;
}

std::vector<std::uint8_t> encode_pcpd(std::span<const Point> points) {
  ByteWriter w;
  w.magic("PCPD");
  w.put<std::uint16_t>(1);
  w.put<std::uint64_t>(points.size());
  w.put<std::uint8_t>(static_cast<std::uint8_t>(kPointDim));
  for (const Point& p : points)
    for (double f : p.features()) w.put<float>(static_cast<float>(f));
  return w.take();
}

PointCloud decode_pcpd(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "PCPD");
  r.expect_magic("PCPD");
  const auto version = r.get<std::uint16_t>();
  if (version != 1) throw InputError("PCPD: unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint8_t>();
  if (dim != kPointDim) throw InputError("PCPD: feature dim must be 6, got " + std::to_string(dim));
  if (count > r.remaining() / (sizeof(float) * kPointDim)) throw InputError("PCPD: truncated input");
  PointCloud points;
  points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Point p;
    p.x = r.get<float>();
    p.y = r.get<float>();
    p.z = r.get<float>();
    p.intensity = r.get<float>();
    p.elongation = r.get<float>();
    p.dt = r.get<float>();
    points.push_back(p);
  }
  r.expect_end();
  return points;
}

void write_pcpd(const std::filesystem::path& path, std::span<const Point> points) {
  write_file_bytes(path, encode_pcpd(points));
}

PointCloud read_pcpd(const std::filesystem::path& path) {
  return decode_pcpd(read_file_bytes(path));
}

}  // namespace afdet
