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

#include <cstdint>
#include <utility>

#include <torch/torch.h>

#include "bevmotion/attention.hpp"
#include "bevmotion/grid_core.hpp"

namespace bevmotion {

/// Sizes of the label-conditioned prior extractor.
struct RvpeOptions {
  int channels = 32;        // C' (backbone width and branch output width)
  int prior_channels = 32;  // C'' of the integrated prior feature
  int motion_hidden = 8;    // output channels of the 3D motion convolution
  int attention_dim = 32;
  int downsample = 4;       // global-branch pooling factor
  int max_instances = 32;
  int cells_per_instance = 8;
  int token_dim = 32;
  int steps = 5;            // prediction horizon T
  bool position_encoding = true;
  double motion_scale = 0.2;  // meters -> network units

  /// N * 2 + num_categories + T * 2.
  int instance_row_width() const { return cells_per_instance * 2 + kNumCategories + steps * 2; }
};

/// Per-instance input rows built from ground truth, plus the validity mask.
struct InstanceRows {
  torch::Tensor rows;  // [max_instances, instance_row_width] float
  torch::Tensor mask;  // [max_instances] bool
  int count = 0;       // valid rows
};

/// Samples up to max_instances instances (uniformly, seeded, then sorted by
/// id) and for each one: cells_per_instance cell positions normalized to
/// [-1, 1] (sampled without replacement when possible, cycled otherwise,
/// emitted in row-major order), the one-hot category, and the per-step mean
/// ground-truth motion scaled by motion_scale.
InstanceRows build_instance_rows(const SceneLabels& labels, const RvpeOptions& opts,
                                 std::uint64_t seed);

/// Label tensors the prior extractor reads, batched.
struct PriorInputs {
  torch::Tensor motion;         // [B, T, 2, H, W] meters
  torch::Tensor category;       // [B, H, W] int64
  torch::Tensor state;          // [B, H, W] float
  torch::Tensor instance_rows;  // [B, N_ins, width]
  torch::Tensor instance_mask;  // [B, N_ins] bool
};

/// Grid-level local branch: a 3D convolution over (T, H, W) for motion and a
/// 2D convolution over the concatenated one-hot category and state map.
class LocalBranchImpl : public torch::nn::Module {
 public:
  explicit LocalBranchImpl(const RvpeOptions& opts);

  /// motion [B, T, 2, H, W] (network units), cls_state [B, C+1, H, W].
  /// Returns (motion features, category/state features), each [B, C', H, W].
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& motion,
                                                  const torch::Tensor& cls_state);

  torch::nn::Conv3d& motion_conv() { return motion_conv_; }

 private:
  RvpeOptions opts_;
  torch::nn::Conv3d motion_conv_{nullptr};
  torch::nn::Conv2d motion_project_{nullptr};
  torch::nn::Conv2d cls_state_conv_{nullptr};
  torch::nn::Conv2d cls_state_project_{nullptr};
};
TORCH_MODULE(LocalBranch);

/// Grid-level global branch: temporal self-attention over the T motion steps
/// at every pooled location, then spatial self-attention across pooled
/// locations of [temporal features, category, state], upsampled back.
class GlobalBranchImpl : public torch::nn::Module {
 public:
  explicit GlobalBranchImpl(const RvpeOptions& opts);

  torch::Tensor forward(const torch::Tensor& motion, const torch::Tensor& cls_state);

  /// [B*h*w, T, 2] motion tokens -> [B*h*w, D] per-location summary.
  torch::Tensor temporal_attention(const torch::Tensor& tokens);
  /// [B, L, D] tokens -> [B, L, D]; position encodings are added by forward().
  torch::Tensor spatial_attention(const torch::Tensor& tokens);

 private:
  RvpeOptions opts_;
  torch::nn::Linear motion_embed_{nullptr};
  torch::Tensor temporal_position_;
  Attention temporal_{nullptr};
  torch::nn::Linear spatial_in_{nullptr};
  Attention spatial_{nullptr};
  torch::nn::Conv2d project_{nullptr};
};
TORCH_MODULE(GlobalBranch);

/// Adaptive convex fusion: rho = sigmoid(W * avgpool([global, local]) + b)
/// per channel, output = rho * global + (1 - rho) * local.
class GateFusionImpl : public torch::nn::Module {
 public:
  explicit GateFusionImpl(int channels);

  /// Returns (fused [B, C, H, W], rho [B, C]).
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& global,
                                                  const torch::Tensor& local);
  static torch::Tensor combine(const torch::Tensor& global, const torch::Tensor& local,
                               const torch::Tensor& rho);

  torch::nn::Linear& gate() { return gate_; }

 private:
  torch::nn::Linear gate_{nullptr};
};
TORCH_MODULE(GateFusion);

/// Recurrent encoder over each instance's motion steps; the final hidden
/// state is the instance token.
class InstanceEncoderImpl : public torch::nn::Module {
 public:
  explicit InstanceEncoderImpl(const RvpeOptions& opts);
  /// rows [B, N, width] -> tokens [B, N, token_dim].
  torch::Tensor forward(const torch::Tensor& rows);

 private:
  RvpeOptions opts_;
  torch::nn::LSTM lstm_{nullptr};
};
TORCH_MODULE(InstanceEncoder);

/// Grid queries attend to the instance tokens; the attended context joins
/// the backbone features and the fused grid prior and is projected to C''.
class PriorIntegratorImpl : public torch::nn::Module {
 public:
  explicit PriorIntegratorImpl(const RvpeOptions& opts);

  struct Result {
    torch::Tensor prior_feature;  // [B, C'', H, W]
    torch::Tensor attended;       // [B, D, H, W]
    torch::Tensor weights;        // [B, H*W, N]
  };
  Result forward(const torch::Tensor& features, const torch::Tensor& grid_prior,
                 const torch::Tensor& tokens, const torch::Tensor& mask);

  torch::Tensor& null_embedding() { return null_embedding_; }

 private:
  Attention cross_{nullptr};
  torch::Tensor null_embedding_;
  torch::nn::Conv2d project_{nullptr};
};
TORCH_MODULE(PriorIntegrator);

struct PriorOutputs {
  torch::Tensor prior_feature;  // B_prior [B, C'', H, W]
  torch::Tensor grid_prior;     // P_R [B, C', H, W]
  torch::Tensor rho;            // [B, C']
  torch::Tensor local;          // merged local features [B, C', H, W]
  torch::Tensor global;         // [B, C', H, W]
  torch::Tensor tokens;         // P_V [B, N, D]
  torch::Tensor token_mask;     // [B, N]
  torch::Tensor attention;      // [B, H*W, N]
};

/// Label-conditioned prior extractor; reads ground truth only (plus the
/// backbone features for the final integration step).
class RvpeImpl : public torch::nn::Module {
 public:
  explicit RvpeImpl(const RvpeOptions& opts);

  PriorOutputs forward(const torch::Tensor& features, const PriorInputs& inputs);

  /// One-hot category concatenated with the state map: [B, C+1, H, W].
  static torch::Tensor cls_state_input(const torch::Tensor& category, const torch::Tensor& state);

  LocalBranch local{nullptr};
  GlobalBranch global{nullptr};
  GateFusion fusion{nullptr};
  InstanceEncoder instances{nullptr};
  PriorIntegrator integrator{nullptr};

 private:
  RvpeOptions opts_;
  torch::nn::Conv2d local_merge_{nullptr};
};
TORCH_MODULE(Rvpe);

}  // namespace bevmotion
