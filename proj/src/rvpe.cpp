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

#include "bevmotion/rvpe.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "bevmotion/errors.hpp"
#include "bevmotion/rng.hpp"

namespace bevmotion {

namespace F = torch::nn::functional;

namespace {

void check_motion(const torch::Tensor& motion, const RvpeOptions& opts) {
  if (motion.dim() != 5 || motion.size(1) != opts.steps || motion.size(2) != 2) {
    throw ContractError("prior extractor expects motion [B, " + std::to_string(opts.steps) +
                        ", 2, H, W]");
  }
}

void check_cls_state(const torch::Tensor& cls_state, const torch::Tensor& motion) {
  if (cls_state.dim() != 4 || cls_state.size(1) != kNumCategories + 1 ||
      cls_state.size(0) != motion.size(0) || cls_state.size(2) != motion.size(3) ||
      cls_state.size(3) != motion.size(4)) {
    throw ContractError("prior extractor expects category/state [B, " +
                        std::to_string(kNumCategories + 1) + ", H, W] matching the motion grid");
  }
}

}  // namespace

InstanceRows build_instance_rows(const SceneLabels& labels, const RvpeOptions& opts,
                                 std::uint64_t seed) {
  const int width = opts.instance_row_width();
  InstanceRows out;
  out.rows = torch::zeros({opts.max_instances, width});
  out.mask = torch::zeros({opts.max_instances}, torch::TensorOptions().dtype(torch::kBool));

  std::map<std::int32_t, std::vector<std::size_t>> cells;  // row-major per instance
  for (std::size_t c = 0; c < labels.cells(); ++c) {
    if (labels.instance_id[c] > 0) {
      cells[labels.instance_id[c]].push_back(c);
    }
  }
  std::vector<std::int32_t> ids;
  for (const auto& [id, list] : cells) {
    ids.push_back(id);
  }
  Rng rng(seed);
  if (static_cast<int>(ids.size()) > opts.max_instances) {
    // Partial Fisher-Yates, then restore id order.
    for (int n = 0; n < opts.max_instances; ++n) {
      const auto pick = n + rng.below(ids.size() - static_cast<std::size_t>(n));
      std::swap(ids[static_cast<std::size_t>(n)], ids[pick]);
    }
    ids.resize(static_cast<std::size_t>(opts.max_instances));
    std::sort(ids.begin(), ids.end());
  }

  auto acc = out.rows.accessor<float, 2>();
  const int n_cells = opts.cells_per_instance;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    std::vector<std::size_t> pool = cells[ids[r]];
    std::vector<std::size_t> chosen;
    if (static_cast<int>(pool.size()) >= n_cells) {
      for (int n = 0; n < n_cells; ++n) {
        const auto pick = n + rng.below(pool.size() - static_cast<std::size_t>(n));
        std::swap(pool[static_cast<std::size_t>(n)], pool[pick]);
      }
      chosen.assign(pool.begin(), pool.begin() + n_cells);
      std::sort(chosen.begin(), chosen.end());
    } else {
      for (int n = 0; n < n_cells; ++n) {
        chosen.push_back(pool[static_cast<std::size_t>(n) % pool.size()]);
      }
    }
    int col = 0;
    for (std::size_t c : chosen) {
      const auto i = static_cast<double>(c / static_cast<std::size_t>(labels.width));
      const auto j = static_cast<double>(c % static_cast<std::size_t>(labels.width));
      acc[r][col++] = static_cast<float>(2.0 * (i + 0.5) / labels.height - 1.0);
      acc[r][col++] = static_cast<float>(2.0 * (j + 0.5) / labels.width - 1.0);
    }
    const std::size_t first = cells[ids[r]].front();
    acc[r][col + labels.category[first]] = 1.0f;
    col += kNumCategories;
    const auto& all = cells[ids[r]];
    for (int t = 0; t < labels.steps; ++t) {
      double mx = 0.0;
      double my = 0.0;
      for (std::size_t c : all) {
        const std::size_t m = labels.motion_index(t, c);
        mx += labels.motion[m];
        my += labels.motion[m + 1];
      }
      const double inv = opts.motion_scale / static_cast<double>(all.size());
      acc[r][col++] = static_cast<float>(mx * inv);
      acc[r][col++] = static_cast<float>(my * inv);
    }
    out.mask[static_cast<std::int64_t>(r)] = true;
  }
  out.count = static_cast<int>(ids.size());
  return out;
}

LocalBranchImpl::LocalBranchImpl(const RvpeOptions& opts) : opts_(opts) {
  motion_conv_ = register_module(
      "motion_conv",
      torch::nn::Conv3d(torch::nn::Conv3dOptions(2, opts.motion_hidden, 3).padding(1)));
  motion_project_ = register_module(
      "motion_project",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(opts.motion_hidden * opts.steps, opts.channels, 1)));
  cls_state_conv_ = register_module(
      "cls_state_conv",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(kNumCategories + 1, opts.channels, 3).padding(1)));
  cls_state_project_ = register_module(
      "cls_state_project", torch::nn::Conv2d(torch::nn::Conv2dOptions(opts.channels, opts.channels, 1)));
}

std::pair<torch::Tensor, torch::Tensor> LocalBranchImpl::forward(const torch::Tensor& motion,
                                                                 const torch::Tensor& cls_state) {
  check_motion(motion, opts_);
  check_cls_state(cls_state, motion);
  const auto B = motion.size(0);
  const auto H = motion.size(3);
  const auto W = motion.size(4);
  // [B, T, 2, H, W] -> [B, 2, T, H, W]: time is the depth axis of the 3D conv.
  auto m = torch::relu(motion_conv_(motion.permute({0, 2, 1, 3, 4})));
  m = m.permute({0, 2, 1, 3, 4}).reshape({B, opts_.steps * opts_.motion_hidden, H, W});
  auto fm = motion_project_(m);
  auto fcs = cls_state_project_(torch::relu(cls_state_conv_(cls_state)));
  return {fm, fcs};
}

GlobalBranchImpl::GlobalBranchImpl(const RvpeOptions& opts) : opts_(opts) {
  const int d = opts.attention_dim;
  motion_embed_ = register_module("motion_embed", torch::nn::Linear(2, d));
  temporal_position_ = register_parameter("temporal_position", torch::randn({opts.steps, d}) * 0.02);
  temporal_ = register_module("temporal", Attention(d, d, d));
  spatial_in_ = register_module("spatial_in", torch::nn::Linear(d + kNumCategories + 1, d));
  spatial_ = register_module("spatial", Attention(d, d, d));
  project_ = register_module("project", torch::nn::Conv2d(torch::nn::Conv2dOptions(d, opts.channels, 1)));
}

torch::Tensor GlobalBranchImpl::temporal_attention(const torch::Tensor& tokens) {
  const auto steps = tokens.size(1);
  auto x = motion_embed_(tokens) + temporal_position_.slice(0, 0, steps).unsqueeze(0);
  return temporal_(x, x).output.mean(1);
}

torch::Tensor GlobalBranchImpl::spatial_attention(const torch::Tensor& tokens) {
  return spatial_(tokens, tokens).output;
}

torch::Tensor GlobalBranchImpl::forward(const torch::Tensor& motion, const torch::Tensor& cls_state) {
  check_motion(motion, opts_);
  check_cls_state(cls_state, motion);
  const auto B = motion.size(0);
  const auto T = motion.size(1);
  const auto H = motion.size(3);
  const auto W = motion.size(4);
  const int f = opts_.downsample;
  const auto pool = F::AvgPool2dFuncOptions(f).stride(f).ceil_mode(true).count_include_pad(false);
  auto pm = F::avg_pool2d(motion.reshape({B, T * 2, H, W}), pool);
  const auto h = pm.size(2);
  const auto w = pm.size(3);
  const int d = opts_.attention_dim;
  // [B, T*2, h, w] -> [B*h*w, T, 2]
  auto tokens = pm.reshape({B, T, 2, h, w}).permute({0, 3, 4, 1, 2}).reshape({B * h * w, T, 2});
  auto temporal = temporal_attention(tokens).reshape({B, h * w, d});
  auto pcs = F::avg_pool2d(cls_state, pool).flatten(2).transpose(1, 2);  // [B, h*w, C+1]
  auto x = spatial_in_(torch::cat({temporal, pcs}, -1));
  if (opts_.position_encoding) {
    x = x + sinusoidal_position_encoding_2d(h, w, d).to(x.dtype()).unsqueeze(0);
  }
  auto s = spatial_attention(x).transpose(1, 2).reshape({B, d, h, w});
  s = F::interpolate(s, F::InterpolateFuncOptions()
                            .size(std::vector<int64_t>{H, W})
                            .mode(torch::kBilinear)
                            .align_corners(false));
  return project_(s);
}

GateFusionImpl::GateFusionImpl(int channels) {
  gate_ = register_module("gate", torch::nn::Linear(2 * channels, channels));
}

torch::Tensor GateFusionImpl::combine(const torch::Tensor& global, const torch::Tensor& local,
                                      const torch::Tensor& rho) {
  auto r = rho.view({rho.size(0), rho.size(1), 1, 1});
  return r * global + (1.0 - r) * local;
}

std::pair<torch::Tensor, torch::Tensor> GateFusionImpl::forward(const torch::Tensor& global,
                                                                const torch::Tensor& local) {
  if (!global.sizes().equals(local.sizes())) {
    throw ContractError("gate fusion expects matching global/local shapes");
  }
  auto pooled = torch::cat({global.mean({2, 3}), local.mean({2, 3})}, 1);
  auto rho = torch::sigmoid(gate_(pooled));
  return {combine(global, local, rho), rho};
}

InstanceEncoderImpl::InstanceEncoderImpl(const RvpeOptions& opts) : opts_(opts) {
  const int step_width = opts.cells_per_instance * 2 + kNumCategories + 2;
  lstm_ = register_module(
      "lstm", torch::nn::LSTM(torch::nn::LSTMOptions(step_width, opts.token_dim).batch_first(true)));
}

torch::Tensor InstanceEncoderImpl::forward(const torch::Tensor& rows) {
  const auto B = rows.size(0);
  const auto N = rows.size(1);
  const int static_width = opts_.cells_per_instance * 2 + kNumCategories;
  if (rows.size(2) != opts_.instance_row_width()) {
    throw ContractError("instance rows have the wrong width");
  }
  auto flat = rows.reshape({B * N, rows.size(2)});
  auto fixed = flat.slice(1, 0, static_width).unsqueeze(1).expand({B * N, opts_.steps, static_width});
  auto motion = flat.slice(1, static_width).reshape({B * N, opts_.steps, 2});
  auto seq = torch::cat({fixed, motion}, -1);
  auto [out, state] = lstm_(seq);
  auto h = std::get<0>(state);  // [1, B*N, D]
  return h.squeeze(0).reshape({B, N, opts_.token_dim});
}

PriorIntegratorImpl::PriorIntegratorImpl(const RvpeOptions& opts) {
  cross_ = register_module("cross", Attention(opts.channels, opts.token_dim, opts.token_dim));
  null_embedding_ = register_parameter("null_embedding", torch::zeros({opts.token_dim}));
  project_ = register_module(
      "project", torch::nn::Conv2d(torch::nn::Conv2dOptions(
                     2 * opts.channels + opts.token_dim, opts.prior_channels, 1)));
}

PriorIntegratorImpl::Result PriorIntegratorImpl::forward(const torch::Tensor& features,
                                                         const torch::Tensor& grid_prior,
                                                         const torch::Tensor& tokens,
                                                         const torch::Tensor& mask) {
  const auto B = features.size(0);
  const auto H = features.size(2);
  const auto W = features.size(3);
  auto queries = features.flatten(2).transpose(1, 2);  // [B, H*W, C']
  auto r = cross_(queries, tokens, mask);
  auto live = r.any_key.view({B, 1, 1}).to(r.output.dtype());
  auto attended = live * r.output + (1.0 - live) * null_embedding_.view({1, 1, -1});
  attended = attended.transpose(1, 2).reshape({B, -1, H, W});
  Result out;
  out.prior_feature = project_(torch::cat({features, grid_prior, attended}, 1));
  out.attended = attended;
  out.weights = r.weights;
  return out;
}

RvpeImpl::RvpeImpl(const RvpeOptions& opts) : opts_(opts) {
  local = register_module("local", LocalBranch(opts));
  global = register_module("global", GlobalBranch(opts));
  fusion = register_module("fusion", GateFusion(opts.channels));
  instances = register_module("instances", InstanceEncoder(opts));
  integrator = register_module("integrator", PriorIntegrator(opts));
  local_merge_ = register_module(
      "local_merge", torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * opts.channels, opts.channels, 1)));
}

torch::Tensor RvpeImpl::cls_state_input(const torch::Tensor& category, const torch::Tensor& state) {
  auto onehot = F::one_hot(category, kNumCategories).permute({0, 3, 1, 2}).to(torch::kFloat);
  return torch::cat({onehot, state.unsqueeze(1).to(torch::kFloat)}, 1);
}

PriorOutputs RvpeImpl::forward(const torch::Tensor& features, const PriorInputs& in) {
  auto motion = in.motion * opts_.motion_scale;
  auto cs = cls_state_input(in.category, in.state).to(features.dtype());
  motion = motion.to(features.dtype());
  PriorOutputs out;
  auto [fm, fcs] = local(motion, cs);
  out.local = local_merge_(torch::cat({fm, fcs}, 1));
  out.global = global(motion, cs);
  std::tie(out.grid_prior, out.rho) = fusion(out.global, out.local);
  out.tokens = instances(in.instance_rows.to(features.dtype()));
  out.token_mask = in.instance_mask;
  auto integrated = integrator(features, out.grid_prior, out.tokens, in.instance_mask);
  out.prior_feature = integrated.prior_feature;
  out.attention = integrated.weights;
  return out;
}

}  // namespace bevmotion
