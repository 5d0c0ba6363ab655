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

#include <functional>
#include <optional>
#include <utility>

#include <torch/torch.h>

namespace bevmotion {

struct DspgOptions {
  int latent_dim = 16;     // d_z
  int split_channels = 16; // width of each dynamic/static head
  int hidden = 32;
  int steps = 5;           // T
  int classes = 5;
  double motion_scale = 0.2;  // network units per meter
  double log_var_min = -10.0;
  double log_var_max = 10.0;
};

enum class LatentMode { kDeterministic, kSample };
enum class LatentSource { kPosterior, kPrior };

/// Spatial diagonal Gaussian at 1/4 grid resolution, all [B, d_z, h, w].
struct LatentField {
  torch::Tensor mean;
  torch::Tensor log_var;
  torch::Tensor sample;
  torch::Tensor eps;  // undefined in deterministic mode
  LatentSource source = LatentSource::kPosterior;
};

/// sample = mean + exp(log_var / 2) * eps.
torch::Tensor reparameterize(const torch::Tensor& mean, const torch::Tensor& log_var,
                             const torch::Tensor& eps);

/// Dynamic and static conv heads over the same input, concatenated, reduced
/// 4x by two strided convs and projected to (mean, log-variance). With
/// `learn_variance` off the log-variance is fixed at zero and the latent is
/// the mean.
class LatentEncoderImpl : public torch::nn::Module {
 public:
  LatentEncoderImpl(int in_channels, const DspgOptions& opts, bool learn_variance);

  LatentField forward(const torch::Tensor& features, LatentMode mode,
                      std::optional<at::Generator> gen = std::nullopt,
                      LatentSource source = LatentSource::kPosterior);

  bool learns_variance() const { return learn_variance_; }

 private:
  DspgOptions opts_;
  bool learn_variance_;
  torch::nn::Conv2d dynamic_{nullptr};
  torch::nn::Conv2d static_{nullptr};
  torch::nn::Conv2d down1_{nullptr};
  torch::nn::Conv2d down2_{nullptr};
  torch::nn::Conv2d mean_{nullptr};
  torch::nn::Conv2d log_var_{nullptr};
};
TORCH_MODULE(LatentEncoder);

/// Convolutional GRU on the latent map:
///   z = sigmoid(Wz [x, h]), r = sigmoid(Wr [x, h]),
///   c = tanh(Wc [x, r * h]), h' = (1 - z) * h + z * c.
class SpatialGruImpl : public torch::nn::Module {
 public:
  SpatialGruImpl(int input_dim, int hidden_dim, int kernel = 3);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& h);

  torch::nn::Conv2d& gates() { return gates_; }
  torch::nn::Conv2d& candidate() { return candidate_; }

 private:
  int hidden_dim_;
  torch::nn::Conv2d gates_{nullptr};
  torch::nn::Conv2d candidate_{nullptr};
};
TORCH_MODULE(SpatialGru);

/// Flow-state decoder: 3x3 conv on the latent state, bilinear upsampling to
/// the grid, fusion with full-resolution skip features, 1x1 projection to a
/// 2-channel displacement in network units.
class FlowStateDecoderImpl : public torch::nn::Module {
 public:
  FlowStateDecoderImpl(int latent_dim, int skip_channels, int hidden);
  torch::Tensor forward(const torch::Tensor& state, const torch::Tensor& skip);

 private:
  torch::nn::Conv2d latent_{nullptr};
  torch::nn::Conv2d fuse_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(FlowStateDecoder);

/// Classification/state decoding from the upsampled latent concatenated
/// with skip features.
class ClsStateDecoderImpl : public torch::nn::Module {
 public:
  ClsStateDecoderImpl(int latent_dim, int skip_channels, int hidden, int classes);
  /// Returns (class logits [B, classes, H, W], state logits [B, H, W]).
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& z0,
                                                  const torch::Tensor& skip);

 private:
  torch::nn::Conv2d fuse_{nullptr};
  torch::nn::Conv2d cls_{nullptr};
  torch::nn::Conv2d state_{nullptr};
};
TORCH_MODULE(ClsStateDecoder);

/// Called before step `tau` (0-based) of a rollout; tests use it to perturb
/// parameters mid-rollout.
using RolloutHook = std::function<void(int tau)>;

/// T autoregressive SGRU steps from z0 (which also conditions every step),
/// each decoded by the FSD. Returns motion [B, T, 2, H, W] in meters. Throws
/// NumericalError naming the step and the latent norm trace on NaN/Inf.
torch::Tensor rollout(SpatialGruImpl& sgru, FlowStateDecoderImpl& fsd, const torch::Tensor& z0,
                      const torch::Tensor& skip, const DspgOptions& opts,
                      const RolloutHook& before_step = {});

/// Bilinear resize of [B, C, h, w] to [B, C, H, W].
torch::Tensor upsample_to(const torch::Tensor& x, int64_t height, int64_t width);

}  // namespace bevmotion
