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

#include "bevmotion/model.hpp"

#include "bevmotion/errors.hpp"
#include "bevmotion/grid_core.hpp"

namespace bevmotion {

namespace {

torch::nn::Sequential head(int in, int hidden, int out) {
  return torch::nn::Sequential(
      torch::nn::Conv2d(torch::nn::Conv2dOptions(in, hidden, 3).padding(1)),
      torch::nn::ReLU(),
      torch::nn::Conv2d(torch::nn::Conv2dOptions(hidden, out, 1)));
}

}  // namespace

std::string ModuleSwitches::describe() const {
  std::string s;
  auto put = [&s](bool on, const char* name) {
    if (on) {
      s += s.empty() ? "" : "+";
      s += name;
    }
  };
  put(pattern_extractor, "PE");
  put(pattern_generator, "PG");
  put(latent_modeling, "LM");
  put(pattern_fusion, "PF");
  return s.empty() ? "baseline" : s;
}

void ModelOptions::sync(int input_frames, int height_bins, int steps) {
  backbone_options.input_frames = input_frames;
  backbone_options.height_bins = height_bins;
  rvpe.channels = backbone_options.channels;
  rvpe.steps = steps;
  dspg.steps = steps;
  dspg.classes = kNumCategories;
  dspg.motion_scale = rvpe.motion_scale;
}

MotionModelImpl::MotionModelImpl(ModelOptions opts) : opts_(std::move(opts)) {
  backbone_ = register_module("backbone", backbone_registry(opts_.backbone)(opts_.backbone_options));
  const int c = backbone_->out_channels();
  const ModuleSwitches& sw = opts_.switches;
  const int zdim = opts_.dspg.latent_dim;
  if (sw.uses_latent()) {
    posterior_ = register_module("posterior", LatentEncoder(c, opts_.dspg, sw.latent_modeling));
  }
  if (sw.pattern_extractor) {
    RvpeOptions ro = opts_.rvpe;
    ro.channels = c;
    rvpe_ = register_module("rvpe", Rvpe(ro));
    prior_ = register_module("prior",
                             LatentEncoder(ro.prior_channels, opts_.dspg, sw.latent_modeling));
  }
  if (sw.pattern_generator) {
    sgru_ = register_module("sgru", SpatialGru(zdim, zdim));
    fsd_ = register_module("fsd", FlowStateDecoder(zdim, c, opts_.dspg.hidden));
  } else {
    const int in = c + (sw.uses_latent() ? zdim : 0);
    motion_head_ = register_module("motion_head", head(in, opts_.head_hidden, 2 * opts_.dspg.steps));
  }
  if (sw.pattern_fusion) {
    cls_state_ = register_module(
        "cls_state", ClsStateDecoder(zdim, c, opts_.head_hidden, opts_.dspg.classes));
  } else {
    cls_head_ = register_module("cls_head", head(c, opts_.head_hidden, opts_.dspg.classes));
    state_head_ = register_module("state_head", head(c, opts_.head_hidden, 1));
  }
}

ModelOutputs MotionModelImpl::forward(const torch::Tensor& grids, const PriorInputs* prior_inputs,
                                      const ForwardOptions& fwd) {
  const ModuleSwitches& sw = opts_.switches;
  ModelOutputs out;
  out.features = backbone_->forward(grids);
  const auto& feats = out.features;
  const auto B = feats.size(0);
  const auto H = feats.size(2);
  const auto W = feats.size(3);

  torch::Tensor z0;
  if (sw.uses_latent()) {
    out.posterior = posterior_->forward(feats, fwd.mode, fwd.generator, LatentSource::kPosterior);
    z0 = out.posterior->sample;
  }
  if (sw.pattern_extractor && prior_inputs != nullptr) {
    out.prior_outputs = rvpe_->forward(feats, *prior_inputs);
    out.prior = prior_->forward(out.prior_outputs->prior_feature, fwd.mode, fwd.generator,
                                LatentSource::kPrior);
    if (fwd.use_teacher) {
      z0 = out.prior->sample;
    }
  } else if (fwd.use_teacher) {
    throw ContractError("teacher decoding needs the pattern extractor and ground-truth inputs");
  }

  const double scale = opts_.dspg.motion_scale;
  if (sw.pattern_generator) {
    out.motion = rollout(*sgru_, *fsd_, z0, feats, opts_.dspg, fwd.before_step);
  } else {
    auto in = sw.uses_latent() ? torch::cat({feats, upsample_to(z0, H, W)}, 1) : feats;
    out.motion = (motion_head_->forward(in) / scale).reshape({B, opts_.dspg.steps, 2, H, W});
  }
  if (sw.pattern_fusion) {
    std::tie(out.class_logits, out.state_logits) = cls_state_->forward(z0, feats);
  } else {
    out.class_logits = cls_head_->forward(feats);
    out.state_logits = state_head_->forward(feats).squeeze(1);
  }
  return out;
}

ModelOutputs MotionModelImpl::predict(const torch::Tensor& grids, LatentMode mode,
                                      std::optional<at::Generator> generator) {
  ForwardOptions fwd;
  fwd.mode = mode;
  fwd.generator = std::move(generator);
  return forward(grids, nullptr, fwd);
}

}  // namespace bevmotion
