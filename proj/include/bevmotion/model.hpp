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

#include <optional>
#include <string>

#include <torch/torch.h>

#include "bevmotion/backbone.hpp"
#include "bevmotion/dspg.hpp"
#include "bevmotion/rvpe.hpp"

namespace bevmotion {

/// The four component switches of the ablation grid.
struct ModuleSwitches {
  bool pattern_extractor = true;  // label-conditioned prior + consistency term
  bool pattern_generator = true;  // SGRU rollout + flow-state decoding
  bool latent_modeling = true;    // learned-variance Gaussian latent with sampling
  bool pattern_fusion = true;     // class/state decoded from [B', z0]

  static ModuleSwitches all_on() { return {}; }
  static ModuleSwitches all_off() { return {false, false, false, false}; }

  /// Any switch on means the model carries a latent path.
  bool uses_latent() const {
    return pattern_extractor || pattern_generator || latent_modeling || pattern_fusion;
  }
  std::string describe() const;

  bool operator==(const ModuleSwitches&) const = default;
};

struct ModelOptions {
  std::string backbone = "stpn_toy";
  BackboneOptions backbone_options;
  RvpeOptions rvpe;
  DspgOptions dspg;
  ModuleSwitches switches;
  int head_hidden = 32;

  /// Copies shared sizes (channels, steps, motion scale) into the sub-options.
  void sync(int input_frames, int height_bins, int steps);
};

struct ForwardOptions {
  LatentMode mode = LatentMode::kDeterministic;
  /// Decode from the prior latent instead of the posterior (training only).
  bool use_teacher = false;
  std::optional<at::Generator> generator;
  RolloutHook before_step;
};

struct ModelOutputs {
  torch::Tensor motion;        // [B, T, 2, H, W] meters
  torch::Tensor class_logits;  // [B, classes, H, W]
  torch::Tensor state_logits;  // [B, H, W]
  torch::Tensor features;      // backbone output [B, C', H, W]
  std::optional<LatentField> posterior;
  std::optional<LatentField> prior;
  std::optional<PriorOutputs> prior_outputs;
};

/// Backbone plus the switchable prior/latent/rollout stack. With every
/// switch off this is the backbone with direct motion/class/state heads.
class MotionModelImpl : public torch::nn::Module {
 public:
  explicit MotionModelImpl(ModelOptions opts);

  /// grids [B, input_frames, depth, H, W]. `prior_inputs` (ground truth) is
  /// consumed only when the pattern extractor is enabled.
  ModelOutputs forward(const torch::Tensor& grids, const PriorInputs* prior_inputs,
                       const ForwardOptions& fwd);

  /// Inference path: never reads labels.
  ModelOutputs predict(const torch::Tensor& grids, LatentMode mode = LatentMode::kDeterministic,
                       std::optional<at::Generator> generator = std::nullopt);

  const ModelOptions& options() const { return opts_; }
  BackboneImpl& backbone() { return *backbone_; }
  SpatialGruImpl& sgru() { return *sgru_; }
  FlowStateDecoderImpl& fsd() { return *fsd_; }

 private:
  ModelOptions opts_;
  std::shared_ptr<BackboneImpl> backbone_;
  Rvpe rvpe_{nullptr};
  LatentEncoder posterior_{nullptr};
  LatentEncoder prior_{nullptr};
  SpatialGru sgru_{nullptr};
  FlowStateDecoder fsd_{nullptr};
  ClsStateDecoder cls_state_{nullptr};
  torch::nn::Sequential motion_head_{nullptr};
  torch::nn::Sequential cls_head_{nullptr};
  torch::nn::Sequential state_head_{nullptr};
};
TORCH_MODULE(MotionModel);

}  // namespace bevmotion
