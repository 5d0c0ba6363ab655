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

#include "bevmotion/dspg.hpp"

#include <sstream>

#include "bevmotion/errors.hpp"

namespace bevmotion {

namespace F = torch::nn::functional;

namespace {

torch::nn::Conv2d conv(int in, int out, int k, int stride = 1) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2));
}

}  // namespace

torch::Tensor upsample_to(const torch::Tensor& x, int64_t height, int64_t width) {
  if (x.size(2) == height && x.size(3) == width) {
    return x;
  }
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{height, width})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

torch::Tensor reparameterize(const torch::Tensor& mean, const torch::Tensor& log_var,
                             const torch::Tensor& eps) {
  return mean + torch::exp(0.5 * log_var) * eps;
}

LatentEncoderImpl::LatentEncoderImpl(int in_channels, const DspgOptions& opts, bool learn_variance)
    : opts_(opts), learn_variance_(learn_variance) {
  dynamic_ = register_module("dynamic", conv(in_channels, opts.split_channels, 3));
  static_ = register_module("static", conv(in_channels, opts.split_channels, 3));
  down1_ = register_module("down1", conv(2 * opts.split_channels, opts.hidden, 3, 2));
  down2_ = register_module("down2", conv(opts.hidden, opts.hidden, 3, 2));
  mean_ = register_module("mean", conv(opts.hidden, opts.latent_dim, 1));
  if (learn_variance_) {
    log_var_ = register_module("log_var", conv(opts.hidden, opts.latent_dim, 1));
  }
}

LatentField LatentEncoderImpl::forward(const torch::Tensor& features, LatentMode mode,
                                       std::optional<at::Generator> gen, LatentSource source) {
  if (features.dim() != 4) {
    throw ContractError("latent encoder expects [B, C, H, W] features");
  }
  auto split = torch::cat({torch::relu(dynamic_(features)), torch::relu(static_(features))}, 1);
  auto x = torch::relu(down2_(torch::relu(down1_(split))));
  LatentField z;
  z.source = source;
  z.mean = mean_(x);
  if (learn_variance_) {
    z.log_var = torch::clamp(log_var_(x), opts_.log_var_min, opts_.log_var_max);
  } else {
    z.log_var = torch::zeros_like(z.mean);
  }
  if (mode == LatentMode::kSample && learn_variance_) {
    z.eps = gen ? torch::randn(z.mean.sizes(), *gen, z.mean.options())
                : torch::randn(z.mean.sizes(), z.mean.options());
    z.sample = reparameterize(z.mean, z.log_var, z.eps);
  } else {
    z.sample = z.mean;
  }
  return z;
}

SpatialGruImpl::SpatialGruImpl(int input_dim, int hidden_dim, int kernel) : hidden_dim_(hidden_dim) {
  gates_ = register_module("gates", conv(input_dim + hidden_dim, 2 * hidden_dim, kernel));
  candidate_ = register_module("candidate", conv(input_dim + hidden_dim, hidden_dim, kernel));
}

torch::Tensor SpatialGruImpl::forward(const torch::Tensor& x, const torch::Tensor& h) {
  auto g = torch::sigmoid(gates_(torch::cat({x, h}, 1)));
  auto update = g.slice(1, 0, hidden_dim_);
  auto reset = g.slice(1, hidden_dim_);
  auto cand = torch::tanh(candidate_(torch::cat({x, reset * h}, 1)));
  return (1.0 - update) * h + update * cand;
}

FlowStateDecoderImpl::FlowStateDecoderImpl(int latent_dim, int skip_channels, int hidden) {
  latent_ = register_module("latent", conv(latent_dim, hidden, 3));
  fuse_ = register_module("fuse", conv(hidden + skip_channels, hidden, 3));
  out_ = register_module("out", conv(hidden, 2, 1));
}

torch::Tensor FlowStateDecoderImpl::forward(const torch::Tensor& state, const torch::Tensor& skip) {
  auto up = upsample_to(torch::relu(latent_(state)), skip.size(2), skip.size(3));
  return out_(torch::relu(fuse_(torch::cat({up, skip}, 1))));
}

ClsStateDecoderImpl::ClsStateDecoderImpl(int latent_dim, int skip_channels, int hidden,
                                         int classes) {
  fuse_ = register_module("fuse", conv(latent_dim + skip_channels, hidden, 3));
  cls_ = register_module("cls", conv(hidden, classes, 1));
  state_ = register_module("state", conv(hidden, 1, 1));
}

std::pair<torch::Tensor, torch::Tensor> ClsStateDecoderImpl::forward(const torch::Tensor& z0,
                                                                     const torch::Tensor& skip) {
  auto up = upsample_to(z0, skip.size(2), skip.size(3));
  auto x = torch::relu(fuse_(torch::cat({up, skip}, 1)));
  return {cls_(x), state_(x).squeeze(1)};
}

torch::Tensor rollout(SpatialGruImpl& sgru, FlowStateDecoderImpl& fsd, const torch::Tensor& z0,
                      const torch::Tensor& skip, const DspgOptions& opts,
                      const RolloutHook& before_step) {
  std::vector<torch::Tensor> steps;
  steps.reserve(static_cast<std::size_t>(opts.steps));
  std::vector<double> norms;
  auto h = z0;
  for (int tau = 0; tau < opts.steps; ++tau) {
    if (before_step) {
      before_step(tau);
    }
    h = sgru.forward(z0, h);
    auto m = fsd.forward(h, skip) / opts.motion_scale;
    norms.push_back(h.detach().norm().item<double>());
    if (!torch::isfinite(m).all().item<bool>() || !std::isfinite(norms.back())) {
      std::ostringstream os;
      os << "rollout produced non-finite values at step " << tau + 1 << "; latent norms:";
      for (double n : norms) {
        os << ' ' << n;
      }
      throw NumericalError(os.str());
    }
    steps.push_back(m);
  }
  return torch::stack(steps, 1);
}

}  // namespace bevmotion
