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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace afdet {

struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> values;

  std::size_t numel() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Name -> tensor map that preserves insertion order.
class Checkpoint {
 public:
  // Throws InputError on duplicate names or a shape/value-count mismatch.
  void add(std::string name, Tensor tensor);
  const Tensor* find(std::string_view name) const;
  Tensor* find(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool erase(std::string_view name);

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

// Element-wise mean. All inputs must share names, order and shapes; the error
// names the first mismatching tensor.
Checkpoint swa_average(std::span<const Checkpoint> checkpoints);

struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> mean;
  std::vector<float> var;
  double eps = 1e-5;
};

struct FoldedLayer {
  Tensor weight;
  std::vector<float> bias;
};

// Merges inference-mode batch norm into the preceding layer. The weight's
// leading dimension is the output channel; bias may be empty (treated as 0).
FoldedLayer fold_batchnorm(const Tensor& weight, std::span<const float> bias,
                           const BatchNormParams& bn);

struct FoldPair {
  std::string conv;
  std::string bn;
  double eps = 1e-5;
};

// Folds each pair in place: reads <conv>.weight, optional <conv>.bias and
// <bn>.{weight,bias,running_mean,running_var}; writes <conv>.weight and
// <conv>.bias and removes the <bn>.* tensors.
Checkpoint fold_checkpoint(const Checkpoint& ckpt, std::span<const FoldPair> pairs);
std::vector<FoldPair> fold_pairs_from_json(std::string_view text);

enum class LrScheduleKind { kOneCycle, kSwaCyclical };

struct LrScheduleSpec {
  LrScheduleKind kind = LrScheduleKind::kOneCycle;
  double lr_max = 3e-3;
  double div_factor = 10.0;
  double final_lr = 3e-8;
  double momentum_high = 0.95;
  double momentum_low = 0.85;
  double warm_fraction = 0.4;
  std::uint64_t steps_per_cycle = 0;  // swa-cyclical only

  static LrScheduleSpec main_training();
  static LrScheduleSpec swa(std::uint64_t steps_per_epoch);
  void validate() const;
};

struct LrPoint {
  double lr = 0.0;
  double momentum = 0.0;
};

// Cosine warm-up from lr_max / div_factor to lr_max over the warm fraction,
// then cosine decay to final_lr; momentum moves inversely between its bounds.
// The swa-cyclical kind restarts the cycle every steps_per_cycle steps.
LrPoint lr_schedule(const LrScheduleSpec& spec, std::uint64_t step, std::uint64_t total_steps);
// Step within a cycle of `cycle_steps` steps at which lr peaks.
std::uint64_t lr_peak_step(const LrScheduleSpec& spec, std::uint64_t cycle_steps);

// "CKPT" container: magic, u32 tensor count, then per tensor u32 name length,
// UTF-8 name, u8 rank, u32 dims, float32 data.
std::vector<std::uint8_t> encode_ckpt(const Checkpoint& ckpt);
Checkpoint decode_ckpt(std::span<const std::uint8_t> bytes);
void write_ckpt(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_ckpt(const std::filesystem::path& path);

}  // namespace afdet
