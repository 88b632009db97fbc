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

#include "afdet/model_utils.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <numbers>
#include <numeric>

#include "afdet/errors.hpp"
#include "afdet/io.hpp"

namespace afdet {

std::size_t Tensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t d) { return a * d; });
}

void Checkpoint::add(std::string name, Tensor tensor) {
  if (find(name)) throw InputError("checkpoint: duplicate tensor '" + name + "'");
  if (tensor.numel() != tensor.values.size())
    throw InputError("checkpoint: tensor '" + name + "' value count does not match its shape");
  entries_.emplace_back(std::move(name), std::move(tensor));
}

const Tensor* Checkpoint::find(std::string_view name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return &t;
  return nullptr;
}

Tensor* Checkpoint::find(std::string_view name) {
  for (auto& [n, t] : entries_)
    if (n == name) return &t;
  return nullptr;
}

const Tensor& Checkpoint::at(std::string_view name) const {
  const Tensor* t = find(name);
  if (!t) throw InputError("checkpoint: missing tensor '" + std::string(name) + "'");
  return *t;
}

bool Checkpoint::erase(std::string_view name) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

Checkpoint swa_average(std::span<const Checkpoint> checkpoints) {
  if (checkpoints.empty()) throw InputError("swa_average needs at least one checkpoint");
  const Checkpoint& ref = checkpoints.front();
  for (std::size_t k = 1; k < checkpoints.size(); ++k) {
    const auto& other = checkpoints[k].entries();
    for (std::size_t i = 0; i < std::max(other.size(), ref.size()); ++i) {
      if (i >= ref.size() || i >= other.size()) {
        const std::string& name = i < ref.size() ? ref.entries()[i].first : other[i].first;
        throw InputError("swa_average: tensor '" + name + "' missing from checkpoint " +
                         std::to_string(k));
      }
      if (other[i].first != ref.entries()[i].first || other[i].second.shape != ref.entries()[i].second.shape)
        throw InputError("swa_average: tensor '" + ref.entries()[i].first +
                         "' differs in name or shape in checkpoint " + std::to_string(k));
    }
  }
  Checkpoint out;
  const double k = static_cast<double>(checkpoints.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto& [name, t0] = ref.entries()[i];
    Tensor avg{t0.shape, std::vector<float>(t0.values.size())};
    for (std::size_t e = 0; e < t0.values.size(); ++e) {
      double sum = 0.0;
      for (const Checkpoint& c : checkpoints) sum += c.entries()[i].second.values[e];
      avg.values[e] = static_cast<float>(sum / k);
    }
    out.add(name, std::move(avg));
  }
  return out;
}

FoldedLayer fold_batchnorm(const Tensor& weight, std::span<const float> bias,
                           const BatchNormParams& bn) {
  if (weight.shape.empty()) throw InputError("fold_batchnorm: weight needs an output-channel dim");
  const std::size_t out_ch = weight.shape[0];
  if (bn.gamma.size() != out_ch || bn.beta.size() != out_ch || bn.mean.size() != out_ch ||
      bn.var.size() != out_ch)
    throw InputError("fold_batchnorm: batch-norm channel count does not match the weight");
  if (!bias.empty() && bias.size() != out_ch)
    throw InputError("fold_batchnorm: bias channel count does not match the weight");
  if (!(bn.eps >= 0.0)) throw InputError("fold_batchnorm: eps must be non-negative");
  if (weight.values.size() != weight.numel() || (out_ch > 0 && weight.values.size() % out_ch != 0))
    throw InputError("fold_batchnorm: malformed weight tensor");

  FoldedLayer out{weight, std::vector<float>(out_ch)};
  const std::size_t per_ch = out_ch == 0 ? 0 : weight.values.size() / out_ch;
  for (std::size_t c = 0; c < out_ch; ++c) {
    const double denom = static_cast<double>(bn.var[c]) + bn.eps;
    if (!(denom > 0.0)) throw InputError("fold_batchnorm: variance + eps must be positive");
    const double s = bn.gamma[c] / std::sqrt(denom);
    for (std::size_t e = 0; e < per_ch; ++e) {
      float& w = out.weight.values[c * per_ch + e];
      w = static_cast<float>(w * s);
    }
    const double b = bias.empty() ? 0.0 : bias[c];
    out.bias[c] = static_cast<float>((b - bn.mean[c]) * s + bn.beta[c]);
  }
  return out;
}

Checkpoint fold_checkpoint(const Checkpoint& ckpt, std::span<const FoldPair> pairs) {
  Checkpoint out = ckpt;
  auto vec = [&](const std::string& name) {
    const Tensor& t = out.at(name);
    return t.values;
  };
  for (const FoldPair& p : pairs) {
    const Tensor weight = out.at(p.conv + ".weight");
    const std::string bias_name = p.conv + ".bias";
    const std::vector<float> bias = out.find(bias_name) ? vec(bias_name) : std::vector<float>{};
    BatchNormParams bn{vec(p.bn + ".weight"), vec(p.bn + ".bias"), vec(p.bn + ".running_mean"),
                       vec(p.bn + ".running_var"), p.eps};
    FoldedLayer folded = fold_batchnorm(weight, bias, bn);
    *out.find(p.conv + ".weight") = std::move(folded.weight);
    Tensor bias_t{{static_cast<std::uint32_t>(folded.bias.size())}, std::move(folded.bias)};
    if (Tensor* existing = out.find(bias_name))
      *existing = std::move(bias_t);
    else
      out.add(bias_name, std::move(bias_t));
    for (const char* suffix : {".weight", ".bias", ".running_mean", ".running_var", ".num_batches_tracked"})
      out.erase(p.bn + suffix);
  }
  return out;
}

std::vector<FoldPair> fold_pairs_from_json(std::string_view text) {
  std::vector<FoldPair> pairs;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array()) throw InputError("fold-bn pairs JSON must be an array");
    for (const auto& e : j) {
      FoldPair p;
      if (e.is_array()) {
        if (e.size() != 2) throw InputError("fold-bn pair arrays need exactly [conv, bn]");
        p.conv = e[0].get<std::string>();
        p.bn = e[1].get<std::string>();
      } else {
        p.conv = e.at("conv").get<std::string>();
        p.bn = e.at("bn").get<std::string>();
        p.eps = e.value("eps", p.eps);
      }
      pairs.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("fold-bn pairs JSON: ") + e.what());
  }
  return pairs;
}

LrScheduleSpec LrScheduleSpec::main_training() {
  LrScheduleSpec s;
  s.kind = LrScheduleKind::kOneCycle;
  s.lr_max = 3e-3;
  s.div_factor = 10.0;
  s.final_lr = s.lr_max / s.div_factor * 1e-4;
  return s;
}

LrScheduleSpec LrScheduleSpec::swa(std::uint64_t steps_per_epoch) {
  LrScheduleSpec s;
  s.kind = LrScheduleKind::kSwaCyclical;
  s.lr_max = 3e-4;
  s.div_factor = 10.0;
  s.final_lr = 3e-9;
  s.steps_per_cycle = steps_per_epoch;
  return s;
}

void LrScheduleSpec::validate() const {
  if (!(lr_max > 0.0)) throw InputError("lr_max must be positive");
  if (!(div_factor > 1.0)) throw InputError("div_factor must exceed 1");
  if (!(final_lr >= 0.0)) throw InputError("final_lr must be non-negative");
  if (!(warm_fraction > 0.0 && warm_fraction < 1.0)) throw InputError("warm_fraction must lie in (0, 1)");
  if (!(momentum_low <= momentum_high)) throw InputError("momentum_low must not exceed momentum_high");
  if (kind == LrScheduleKind::kSwaCyclical && steps_per_cycle == 0)
    throw InputError("swa-cyclical schedule needs steps_per_cycle > 0");
}

namespace {

// start at t = 0, end at t = 1, both returned exactly.
double cosine_anneal(double start, double end, double t) {
  if (t <= 0.0) return start;
  if (t >= 1.0) return end;
  return end + (start - end) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace

std::uint64_t lr_peak_step(const LrScheduleSpec& spec, std::uint64_t cycle_steps) {
  return static_cast<std::uint64_t>(std::floor(spec.warm_fraction * static_cast<double>(cycle_steps)));
}

LrPoint lr_schedule(const LrScheduleSpec& spec, std::uint64_t step, std::uint64_t total_steps) {
  spec.validate();
  if (step > total_steps) throw InputError("lr_schedule: step exceeds total_steps");
  std::uint64_t pos = step;
  std::uint64_t cycle = total_steps;
  if (spec.kind == LrScheduleKind::kSwaCyclical) {
    cycle = spec.steps_per_cycle;
    const std::uint64_t cycles = std::max<std::uint64_t>(1, (total_steps + cycle - 1) / cycle);
    const std::uint64_t idx = std::min(step / cycle, cycles - 1);
    pos = step - idx * cycle;
    if (pos > cycle) pos = cycle;
  }
  const double lr_start = spec.lr_max / spec.div_factor;
  const std::uint64_t peak = lr_peak_step(spec, cycle);
  LrPoint p;
  if (pos <= peak) {
    const double t = peak == 0 ? 1.0 : static_cast<double>(pos) / static_cast<double>(peak);
    p.lr = cosine_anneal(lr_start, spec.lr_max, t);
    p.momentum = cosine_anneal(spec.momentum_high, spec.momentum_low, t);
  } else {
    const double t = static_cast<double>(pos - peak) / static_cast<double>(cycle - peak);
    p.lr = cosine_anneal(spec.lr_max, spec.final_lr, t);
    p.momentum = cosine_anneal(spec.momentum_low, spec.momentum_high, t);
  }
  return p;
}

std::vector<std::uint8_t> encode_ckpt(const Checkpoint& ckpt) {
  ByteWriter w;
  w.magic("CKPT");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.size()));
  for (const auto& [name, t] : ckpt.entries()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(name.data()), name.size()));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.shape.size()));
    for (std::uint32_t d : t.shape) w.put<std::uint32_t>(d);
    for (float v : t.values) w.put<float>(v);
  }
  return w.take();
}

Checkpoint decode_ckpt(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "CKPT");
  r.expect_magic("CKPT");
  const auto count = r.get<std::uint32_t>();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>();
    const auto raw = r.take(len);
    std::string name(raw.begin(), raw.end());
    Tensor t;
    const auto rank = r.get<std::uint8_t>();
    std::uint64_t numel = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      t.shape.push_back(r.get<std::uint32_t>());
      numel *= t.shape.back();
    }
    if (numel > r.remaining() / sizeof(float)) throw InputError("CKPT: truncated input");
    t.values.resize(numel);
    for (float& v : t.values) v = r.get<float>();
    ckpt.add(std::move(name), std::move(t));
  }
  r.expect_end();
  return ckpt;
}

void write_ckpt(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_bytes(path, encode_ckpt(ckpt));
}

Checkpoint read_ckpt(const std::filesystem::path& path) { return decode_ckpt(read_file_bytes(path)); }

}  // namespace afdet
