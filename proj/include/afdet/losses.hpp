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
#include <span>
#include <vector>

namespace afdet {

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // d value / d pred, same length as pred
};

struct FocalParams {
  double alpha = 2.0;
  double beta = 4.0;
};

inline constexpr double kHeatmapEps = 1e-6;

// Clamps predictions into [eps, 1 - eps] for use with focal_loss.
std::vector<double> clamp_probabilities(std::span<const double> pred, double eps = kHeatmapEps);

// Penalty-reduced focal loss over a heatmap, normalized by max(1, #positives).
// pred must lie strictly inside (0, 1).
LossResult focal_loss(std::span<const double> pred, std::span<const double> target,
                      const FocalParams& params = {});

// Mean |pred - target| over elements whose mask is nonzero.
LossResult l1_masked(std::span<const double> pred, std::span<const double> target,
                     std::span<const std::uint8_t> mask);

// Masked mean of 0.5 d^2 / beta for |d| < beta, |d| - 0.5 beta otherwise.
LossResult smooth_l1(std::span<const double> pred, std::span<const double> target,
                     std::span<const std::uint8_t> mask, double beta = 1.0);

struct LossParts {
  double heat = 0.0;
  double off = 0.0;
  double z = 0.0;
  double size = 0.0;
  double ori = 0.0;
  double iou = 0.0;
  double kps = 0.0;
};

struct LossWeights {
  double off = 2.0;
  double z = 2.0;
  double size = 2.0;
  double ori = 2.0;
  double iou = 2.0;
  double kps = 2.0;
};

// heat + sum of weighted sub-head losses. Throws InputError naming the first
// non-finite part or negative weight.
double total_loss(const LossParts& parts, const LossWeights& weights = {});

}  // namespace afdet
