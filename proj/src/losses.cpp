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

#include "afdet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "afdet/errors.hpp"

namespace afdet {

namespace {

void check_shapes(std::size_t pred, std::size_t target, const char* what) {
  if (pred != target)
    throw InputError(std::string(what) + ": shape mismatch (" + std::to_string(pred) + " vs " +
                     std::to_string(target) + ")");
}

// Pairwise summation keeps the reduction order fixed and the error small.
double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace

std::vector<double> clamp_probabilities(std::span<const double> pred, double eps) {
  std::vector<double> out(pred.begin(), pred.end());
  for (double& p : out) p = std::clamp(p, eps, 1.0 - eps);
  return out;
}

LossResult focal_loss(std::span<const double> pred, std::span<const double> target,
                      const FocalParams& params) {
  check_shapes(pred.size(), target.size(), "focal_loss");
  const double a = params.alpha;
  const double b = params.beta;
  LossResult out;
  out.grad.resize(pred.size());
  std::vector<double> terms(pred.size());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i];
    const double y = target[i];
    if (!(p > 0.0 && p < 1.0)) throw InputError("focal_loss: predictions must lie in (0, 1)");
    if (y == 1.0) {
      ++positives;
      const double q = 1.0 - p;
      terms[i] = -std::pow(q, a) * std::log(p);
      out.grad[i] = a * std::pow(q, a - 1.0) * std::log(p) - std::pow(q, a) / p;
    } else {
      const double neg = std::pow(1.0 - y, b);
      const double pa = std::pow(p, a);
      const double log_q = std::log1p(-p);
      terms[i] = -neg * pa * log_q;
      out.grad[i] = -neg * (a * std::pow(p, a - 1.0) * log_q - pa / (1.0 - p));
    }
  }
  const double norm = static_cast<double>(std::max<std::size_t>(1, positives));
  out.value = pairwise_sum(terms) / norm;
  for (double& g : out.grad) g /= norm;
  return out;
}

LossResult l1_masked(std::span<const double> pred, std::span<const double> target,
                     std::span<const std::uint8_t> mask) {
  check_shapes(pred.size(), target.size(), "l1_masked");
  check_shapes(pred.size(), mask.size(), "l1_masked mask");
  LossResult out;
  out.grad.assign(pred.size(), 0.0);
  std::vector<double> terms;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const double d = pred[i] - target[i];
    terms.push_back(std::abs(d));
    out.grad[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  }
  if (terms.empty()) return out;
  const double n = static_cast<double>(terms.size());
  out.value = pairwise_sum(terms) / n;
  for (double& g : out.grad) g /= n;
  return out;
}

LossResult smooth_l1(std::span<const double> pred, std::span<const double> target,
                     std::span<const std::uint8_t> mask, double beta) {
  check_shapes(pred.size(), target.size(), "smooth_l1");
  check_shapes(pred.size(), mask.size(), "smooth_l1 mask");
  if (!(beta > 0.0)) throw InputError("smooth_l1: beta must be positive");
  LossResult out;
  out.grad.assign(pred.size(), 0.0);
  std::vector<double> terms;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const double d = pred[i] - target[i];
    const double ad = std::abs(d);
    if (ad < beta) {
      terms.push_back(0.5 * d * d / beta);
      out.grad[i] = d / beta;
    } else {
      terms.push_back(ad - 0.5 * beta);
      out.grad[i] = d > 0.0 ? 1.0 : -1.0;
    }
  }
  if (terms.empty()) return out;
  const double n = static_cast<double>(terms.size());
  out.value = pairwise_sum(terms) / n;
  for (double& g : out.grad) g /= n;
  return out;
}

double total_loss(const LossParts& parts, const LossWeights& w) {
  const std::pair<const char*, double> named[] = {
      {"heat", parts.heat}, {"off", parts.off}, {"z", parts.z},   {"size", parts.size},
      {"ori", parts.ori},   {"iou", parts.iou}, {"kps", parts.kps}};
  for (const auto& [name, v] : named)
    if (!std::isfinite(v)) throw InputError(std::string("total_loss: non-finite ") + name + " loss");
  for (double lam : {w.off, w.z, w.size, w.ori, w.iou, w.kps})
    if (!(lam >= 0.0)) throw InputError("total_loss: loss weights must be non-negative");
  return parts.heat + w.off * parts.off + w.z * parts.z + w.size * parts.size +
         w.ori * parts.ori + w.iou * parts.iou + w.kps * parts.kps;
}

}  // namespace afdet
