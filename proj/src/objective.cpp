// Copyright 2026 The bevmotion Authors
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

#include "bevmotion/objective.hpp"

#include <algorithm>
#include <cmath>

#include "bevmotion/errors.hpp"
#include "bevmotion/grid_core.hpp"

namespace bevmotion {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
  if (move < 0.0 || state < 0.0 || cls < 0.0 || pattern < 0.0) {
    throw ConfigError("loss weights must be >= 0");
  }
}

MotionLoss motion_loss(const torch::Tensor& pred, const torch::Tensor& target,
                       const torch::Tensor& valid, double horizon_seconds, double delta) {
  if (!pred.sizes().equals(target.sizes()) || pred.dim() != 5 || pred.size(2) != 2) {
    throw ContractError("motion_loss expects matching [B, T, 2, H, W] tensors");
  }
  MotionLoss out;
  auto mask = valid.to(pred.dtype());
  const double n_valid = mask.sum().item<double>();
  if (n_valid == 0.0) {
    out.value = (pred * 0.0).sum();
    out.supervised = false;
    return out;
  }
  // Per-cell loss: component sum, mean over steps -> [B, H, W].
  auto per_cell = F::smooth_l1_loss(pred, target,
                                    F::SmoothL1LossFuncOptions().reduction(torch::kNone).beta(delta))
                      .sum(2)
                      .mean(1);
  auto speed = target.select(1, target.size(1) - 1).norm(2, 1).detach() / horizon_seconds;
  auto group = torch::where(speed <= kStaticSpeed, torch::zeros_like(speed),
                            torch::where(speed <= kSlowSpeed, torch::ones_like(speed),
                                         torch::full_like(speed, 2.0)));
  std::array<double, 3> counts{};
  int present = 0;
  for (int g = 0; g < 3; ++g) {
    counts[g] = ((group == g).to(mask.dtype()) * mask).sum().item<double>();
    present += counts[g] > 0.0 ? 1 : 0;
  }
  auto weight = torch::zeros_like(per_cell);
  for (int g = 0; g < 3; ++g) {
    if (counts[g] == 0.0) {
      continue;
    }
    const double w = std::clamp(n_valid / (present * counts[g]), 0.1, 10.0);
    auto in_group = (group == g).to(mask.dtype()) * mask;
    weight = weight + in_group * w;
    out.per_group[g] = ((per_cell.detach() * in_group).sum() / counts[g]).item<double>();
  }
  out.value = (per_cell * weight).sum() / weight.sum();
  return out;
}

LossTerm state_loss(const torch::Tensor& logits, const torch::Tensor& target,
                    const torch::Tensor& valid) {
  if (!logits.sizes().equals(target.sizes())) {
    throw ContractError("state_loss expects matching [B, H, W] tensors");
  }
  auto mask = valid.to(logits.dtype());
  const double n = mask.sum().item<double>();
  if (n == 0.0) {
    return {(logits * 0.0).sum(), false};
  }
  auto bce = F::binary_cross_entropy_with_logits(
      logits, target.to(logits.dtype()),
      F::BinaryCrossEntropyWithLogitsFuncOptions().reduction(torch::kNone));
  return {(bce * mask).sum() / n, true};
}

LossTerm cls_loss(const torch::Tensor& logits, const torch::Tensor& target,
                  const torch::Tensor& valid) {
  if (logits.dim() != 4 || target.dim() != 3 || logits.size(0) != target.size(0) ||
      logits.size(2) != target.size(1) || logits.size(3) != target.size(2)) {
    throw ContractError("cls_loss expects logits [B, C, H, W] and target [B, H, W]");
  }
  auto mask = valid.to(logits.dtype());
  const double n = mask.sum().item<double>();
  if (n == 0.0) {
    return {(logits * 0.0).sum(), false};
  }
  auto ce = F::cross_entropy(logits, target, F::CrossEntropyFuncOptions().reduction(torch::kNone));
  return {(ce * mask).sum() / n, true};
}

torch::Tensor gaussian_kl(const torch::Tensor& mean1, const torch::Tensor& log_var1,
                          const torch::Tensor& mean2, const torch::Tensor& log_var2) {
  // log(s2/s1) + (s1^2 + (m1-m2)^2) / (2 s2^2) - 1/2
  return 0.5 * (log_var2 - log_var1) +
         (torch::exp(log_var1) + (mean1 - mean2).pow(2)) / (2.0 * torch::exp(log_var2)) - 0.5;
}

double gaussian_kl(double mean1, double sigma1, double mean2, double sigma2) {
  return std::log(sigma2 / sigma1) +
         (sigma1 * sigma1 + (mean1 - mean2) * (mean1 - mean2)) / (2.0 * sigma2 * sigma2) - 0.5;
}

torch::Tensor pattern_loss(const LatentField& posterior, const LatentField& prior) {
  if (!posterior.mean.sizes().equals(prior.mean.sizes())) {
    throw ContractError("pattern_loss expects latents of equal shape");
  }
  return gaussian_kl(posterior.mean, posterior.log_var, prior.mean, prior.log_var).mean();
}

LossReport total_loss(const LossParts& parts, const LossWeights& weights, double pattern_scale) {
  weights.validate();
  LossReport r;
  r.pattern_weight = weights.pattern * std::clamp(pattern_scale, 0.0, 1.0);
  r.total = weights.move * parts.move.value + weights.state * parts.state.value +
            weights.cls * parts.cls.value;
  r.move = parts.move.value.item<double>();
  r.state = parts.state.value.item<double>();
  r.cls = parts.cls.value.item<double>();
  if (parts.pattern) {
    r.total = r.total + r.pattern_weight * *parts.pattern;
    r.pattern = parts.pattern->item<double>();
  }
  r.total_value = r.total.item<double>();
  r.no_supervision = !parts.move.supervised || !parts.state.supervised || !parts.cls.supervised;
  r.move_per_group = parts.move.per_group;
  return r;
}

}  // namespace bevmotion
