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

#pragma once

#include <array>
#include <optional>

#include <torch/torch.h>

#include "bevmotion/dspg.hpp"

namespace bevmotion {

struct LossWeights {
  double move = 1.0;
  double state = 1.0;
  double cls = 1.0;
  double pattern = 0.1;

  /// Throws ConfigError on a negative weight.
  void validate() const;
};

/// A scalar loss; `supervised` is false when the valid mask was empty, in
/// which case `value` is an exact zero.
struct LossTerm {
  torch::Tensor value;
  bool supervised = true;
};

struct MotionLoss : LossTerm {
  /// Unweighted mean smooth-L1 per speed group (static, slow, fast).
  std::array<std::optional<double>, 3> per_group{};
};

/// Smooth-L1 (delta) summed over the two components, averaged over valid
/// cells and all steps. Cells are reweighted per speed group by the inverse
/// group frequency in the batch, clamped to [0.1, 10], and the weighted sum
/// is normalized by the total weight.
///   pred, target: [B, T, 2, H, W] meters; valid: [B, H, W].
MotionLoss motion_loss(const torch::Tensor& pred, const torch::Tensor& target,
                       const torch::Tensor& valid, double horizon_seconds, double delta = 1.0);

/// Binary cross-entropy on valid cells. logits, target: [B, H, W].
LossTerm state_loss(const torch::Tensor& logits, const torch::Tensor& target,
                    const torch::Tensor& valid);

/// Categorical cross-entropy on valid cells. logits [B, C, H, W], target [B, H, W] int64.
LossTerm cls_loss(const torch::Tensor& logits, const torch::Tensor& target,
                  const torch::Tensor& valid);

/// KL(N(mu1, var1) || N(mu2, var2)) per element, from log-variances.
torch::Tensor gaussian_kl(const torch::Tensor& mean1, const torch::Tensor& log_var1,
                          const torch::Tensor& mean2, const torch::Tensor& log_var2);

/// Closed-form KL between two scalar Gaussians given standard deviations.
double gaussian_kl(double mean1, double sigma1, double mean2, double sigma2);

/// KL(posterior || prior), averaged over latent cells and channels.
torch::Tensor pattern_loss(const LatentField& posterior, const LatentField& prior);

struct LossParts {
  MotionLoss move;
  LossTerm state;
  LossTerm cls;
  std::optional<torch::Tensor> pattern;  // absent when no prior is trained
};

struct LossReport {
  torch::Tensor total;  // differentiable
  double total_value = 0.0;
  double move = 0.0;
  double state = 0.0;
  double cls = 0.0;
  double pattern = 0.0;
  double pattern_weight = 0.0;  // effective lambda after warm-up
  bool no_supervision = false;
  std::array<std::optional<double>, 3> move_per_group{};
};

/// Weighted sum; `pattern_scale` in [0, 1] multiplies lambda_pattern (KL warm-up).
LossReport total_loss(const LossParts& parts, const LossWeights& weights,
                      double pattern_scale = 1.0);

}  // namespace bevmotion
