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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "bevmotion/grid_core.hpp"

namespace bevmotion {

struct BackboneOptions {
  int input_frames = 5;
  int height_bins = 13;
  int channels = 32;       // C' of the emitted feature map
  int stem_channels = 16;  // per-frame stem width (stpn_toy)
};

/// Maps stacked occupancy [B, input_frames, depth, H, W] to BEV features
/// [B, channels, H, W] at full grid resolution.
class BackboneImpl : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(const torch::Tensor& grids) = 0;
  virtual std::string name() const = 0;
  int out_channels() const { return out_channels_; }

 protected:
  int out_channels_ = 0;
};

/// Shared stem per frame, temporal fusion by concatenation and a 1x1 conv,
/// then a three-level pyramid (1, 1/2, 1/4) merged back by additive skips.
class StpnToyImpl : public BackboneImpl {
 public:
  explicit StpnToyImpl(const BackboneOptions& opts);
  torch::Tensor forward(const torch::Tensor& grids) override;
  std::string name() const override { return "stpn_toy"; }

 private:
  BackboneOptions opts_;
  torch::nn::Conv2d stem_{nullptr};
  torch::nn::Conv2d temporal_{nullptr};
  torch::nn::Conv2d level1_{nullptr};
  torch::nn::Conv2d down1_{nullptr};
  torch::nn::Conv2d level2_{nullptr};
  torch::nn::Conv2d down2_{nullptr};
  torch::nn::Conv2d level3_{nullptr};
  torch::nn::Conv2d lateral3_{nullptr};
  torch::nn::Conv2d lateral2_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};

/// Debug backbone: per-frame column occupancy (max over height) projected to
/// `channels` by a 1x1 convolution.
class IdentityProbeImpl : public BackboneImpl {
 public:
  explicit IdentityProbeImpl(const BackboneOptions& opts);
  torch::Tensor forward(const torch::Tensor& grids) override;
  std::string name() const override { return "identity_probe"; }

 private:
  torch::nn::Conv2d project_{nullptr};
};

using BackboneFactory = std::function<std::shared_ptr<BackboneImpl>(const BackboneOptions&)>;

/// Throws ConfigError for unknown names.
BackboneFactory backbone_registry(const std::string& name);
std::vector<std::string> registered_backbones();

/// Single-sample feature map in H x W x C' layout with provenance.
struct FeatureMap {
  torch::Tensor values;
  std::string backbone_id;
  std::uint64_t input_hash = 0;
};

FeatureMap extract_features(BackboneImpl& backbone, std::span<const OccupancyGrid> grids);

std::int64_t parameter_count(const torch::nn::Module& module);

}  // namespace bevmotion
