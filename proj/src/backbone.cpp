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

#include "bevmotion/backbone.hpp"

#include <map>

#include "bevmotion/errors.hpp"
#include "bevmotion/tensors.hpp"

namespace bevmotion {

namespace F = torch::nn::functional;

namespace {

torch::nn::Conv2d conv(int in, int out, int k, int stride = 1) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2));
}

torch::Tensor resize_to(const torch::Tensor& x, const torch::Tensor& like) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{like.size(2), like.size(3)})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

void check_input(const torch::Tensor& grids, int frames, int bins) {
  if (grids.dim() != 5 || grids.size(1) != frames || grids.size(2) != bins) {
    throw ContractError("backbone expects [B, " + std::to_string(frames) + ", " +
                        std::to_string(bins) + ", H, W] occupancy");
  }
}

}  // namespace

StpnToyImpl::StpnToyImpl(const BackboneOptions& opts) : opts_(opts) {
  out_channels_ = opts.channels;
  const int c = opts.channels;
  const int c2 = c + c / 2;
  const int c3 = 2 * c;
  stem_ = register_module("stem", conv(opts.height_bins, opts.stem_channels, 3));
  temporal_ = register_module("temporal", conv(opts.input_frames * opts.stem_channels, c, 1));
  level1_ = register_module("level1", conv(c, c, 3));
  down1_ = register_module("down1", conv(c, c2, 3, 2));
  level2_ = register_module("level2", conv(c2, c2, 3));
  down2_ = register_module("down2", conv(c2, c3, 3, 2));
  level3_ = register_module("level3", conv(c3, c3, 3));
  lateral3_ = register_module("lateral3", conv(c3, c2, 1));
  lateral2_ = register_module("lateral2", conv(c2, c, 1));
  out_ = register_module("out", conv(c, c, 3));
}

torch::Tensor StpnToyImpl::forward(const torch::Tensor& grids) {
  check_input(grids, opts_.input_frames, opts_.height_bins);
  const auto B = grids.size(0);
  const auto H = grids.size(3);
  const auto W = grids.size(4);
  auto x = grids.reshape({B * opts_.input_frames, opts_.height_bins, H, W});
  x = torch::relu(stem_(x)).reshape({B, opts_.input_frames * opts_.stem_channels, H, W});
  auto l1 = torch::relu(level1_(torch::relu(temporal_(x))));
  auto l2 = torch::relu(level2_(torch::relu(down1_(l1))));
  auto l3 = torch::relu(level3_(torch::relu(down2_(l2))));
  auto m2 = torch::relu(l2 + resize_to(lateral3_(l3), l2));
  auto m1 = torch::relu(l1 + resize_to(lateral2_(m2), l1));
  return torch::relu(out_(m1));
}

IdentityProbeImpl::IdentityProbeImpl(const BackboneOptions& opts) {
  out_channels_ = opts.channels;
  project_ = register_module("project", conv(opts.input_frames, opts.channels, 1));
}

torch::Tensor IdentityProbeImpl::forward(const torch::Tensor& grids) {
  if (grids.dim() != 5) {
    throw ContractError("backbone expects [B, frames, depth, H, W] occupancy");
  }
  return project_(std::get<0>(grids.max(2)));
}

BackboneFactory backbone_registry(const std::string& name) {
  static const std::map<std::string, BackboneFactory> kRegistry = {
      {"stpn_toy",
       [](const BackboneOptions& o) -> std::shared_ptr<BackboneImpl> {
         return std::make_shared<StpnToyImpl>(o);
       }},
      {"identity_probe",
       [](const BackboneOptions& o) -> std::shared_ptr<BackboneImpl> {
         return std::make_shared<IdentityProbeImpl>(o);
       }},
  };
  auto it = kRegistry.find(name);
  if (it == kRegistry.end()) {
    throw ConfigError("unknown backbone '" + name + "'");
  }
  return it->second;
}

std::vector<std::string> registered_backbones() { return {"identity_probe", "stpn_toy"}; }

FeatureMap extract_features(BackboneImpl& backbone, std::span<const OccupancyGrid> grids) {
  torch::NoGradGuard no_grad;
  auto x = grids_to_tensor(grids).unsqueeze(0);
  FeatureMap fm;
  fm.values = backbone.forward(x)[0].permute({1, 2, 0}).contiguous();
  fm.backbone_id = backbone.name();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& g : grids) {
    for (std::uint8_t v : g.cells) {
      h = (h ^ v) * 0x100000001b3ULL;
    }
  }
  fm.input_hash = h;
  return fm;
}

std::int64_t parameter_count(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) {
    n += p.numel();
  }
  return n;
}

}  // namespace bevmotion
