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

#include <torch/torch.h>

namespace bevmotion {

struct AttentionResult {
  torch::Tensor output;   // [N, Lq, D]
  torch::Tensor weights;  // [N, Lq, Lk]; rows with no valid key are all zero
  torch::Tensor any_key;  // [N] bool, false when every key of a batch row is masked
};

/// softmax(q k^T / sqrt(d)) v with an optional key-validity mask [N, Lk].
AttentionResult scaled_dot_attention(const torch::Tensor& q, const torch::Tensor& k,
                                     const torch::Tensor& v,
                                     const std::optional<torch::Tensor>& key_mask = std::nullopt);

/// Single-head attention with learned q/k/v/output projections.
class AttentionImpl : public torch::nn::Module {
 public:
  AttentionImpl(int query_dim, int key_dim, int dim);

  AttentionResult forward(const torch::Tensor& query, const torch::Tensor& context,
                          const std::optional<torch::Tensor>& key_mask = std::nullopt);

 private:
  torch::nn::Linear q_{nullptr};
  torch::nn::Linear k_{nullptr};
  torch::nn::Linear v_{nullptr};
  torch::nn::Linear o_{nullptr};
};
TORCH_MODULE(Attention);

/// Fixed sinusoidal 2D encoding [h*w, dim]; half the channels encode rows.
torch::Tensor sinusoidal_position_encoding_2d(int64_t h, int64_t w, int64_t dim);

}  // namespace bevmotion
