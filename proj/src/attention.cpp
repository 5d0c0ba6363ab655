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

#include "bevmotion/attention.hpp"

#include <cmath>

namespace bevmotion {

AttentionResult scaled_dot_attention(const torch::Tensor& q, const torch::Tensor& k,
                                     const torch::Tensor& v,
                                     const std::optional<torch::Tensor>& key_mask) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size(-1)));
  auto logits = torch::matmul(q, k.transpose(-2, -1)) * scale;
  AttentionResult r;
  if (!key_mask) {
    r.weights = torch::softmax(logits, -1);
    r.any_key = torch::ones({q.size(0)}, torch::TensorOptions().dtype(torch::kBool));
  } else {
    const auto mask = key_mask->to(torch::kBool).unsqueeze(1);  // [N, 1, Lk]
    r.any_key = key_mask->to(torch::kBool).any(-1);             // [N]
    const auto live = r.any_key.view({-1, 1, 1});
    // Fully masked rows get finite logits so softmax stays NaN-free; their
    // weights are zeroed afterwards.
    logits = logits.masked_fill(~mask & live, -std::numeric_limits<float>::infinity());
    logits = logits.masked_fill(~live, 0.0);
    r.weights = torch::softmax(logits, -1) * live.to(logits.dtype());
  }
  r.output = torch::matmul(r.weights, v);
  return r;
}

AttentionImpl::AttentionImpl(int query_dim, int key_dim, int dim) {
  q_ = register_module("q", torch::nn::Linear(query_dim, dim));
  k_ = register_module("k", torch::nn::Linear(key_dim, dim));
  v_ = register_module("v", torch::nn::Linear(key_dim, dim));
  o_ = register_module("o", torch::nn::Linear(dim, dim));
}

AttentionResult AttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& context,
                                       const std::optional<torch::Tensor>& key_mask) {
  auto r = scaled_dot_attention(q_(query), k_(context), v_(context), key_mask);
  r.output = o_(r.output);
  return r;
}

torch::Tensor sinusoidal_position_encoding_2d(int64_t h, int64_t w, int64_t dim) {
  const int64_t half = dim / 2;
  auto encode = [](const torch::Tensor& pos, int64_t channels) {
    auto idx = torch::arange(channels, torch::kFloat);
    auto freq = torch::exp(-(2.0 * torch::floor(idx / 2.0) / static_cast<double>(channels)) *
                           std::log(10000.0));
    auto angles = pos.unsqueeze(1) * freq.unsqueeze(0);
    auto even = (torch::remainder(idx, 2) == 0).unsqueeze(0);
    return torch::where(even, torch::sin(angles), torch::cos(angles));
  };
  auto rows = encode(torch::arange(h, torch::kFloat), half);         // [h, half]
  auto cols = encode(torch::arange(w, torch::kFloat), dim - half);   // [w, dim-half]
  auto r = rows.unsqueeze(1).expand({h, w, half});
  auto c = cols.unsqueeze(0).expand({h, w, dim - half});
  return torch::cat({r, c}, -1).reshape({h * w, dim});
}

}  // namespace bevmotion
