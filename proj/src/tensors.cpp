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

#include "bevmotion/tensors.hpp"

#include "bevmotion/errors.hpp"

namespace bevmotion {

torch::Tensor grids_to_tensor(std::span<const OccupancyGrid> grids) {
  if (grids.empty()) {
    throw ContractError("grids_to_tensor: no frames");
  }
  const auto& g0 = grids.front();
  auto out = torch::empty({static_cast<std::int64_t>(grids.size()), g0.depth, g0.height, g0.width});
  auto acc = out.accessor<float, 4>();
  for (std::size_t f = 0; f < grids.size(); ++f) {
    const auto& g = grids[f];
    if (g.height != g0.height || g.width != g0.width || g.depth != g0.depth) {
      throw ContractError("grids_to_tensor: frames differ in shape");
    }
    for (int i = 0; i < g.height; ++i) {
      for (int j = 0; j < g.width; ++j) {
        for (int k = 0; k < g.depth; ++k) {
          acc[f][k][i][j] = static_cast<float>(g.at(i, j, k));
        }
      }
    }
  }
  return out;
}

torch::Tensor voxelize_sequence(const PointSequence& points, const GridSpec& spec) {
  std::vector<OccupancyGrid> grids;
  grids.reserve(points.frames.size());
  for (const auto& frame : points.frames) {
    grids.push_back(voxelize(frame, spec).grid);
  }
  return grids_to_tensor(grids);
}

LabelTensors labels_to_tensors(const SceneLabels& l) {
  const std::int64_t T = l.steps;
  const std::int64_t H = l.height;
  const std::int64_t W = l.width;
  LabelTensors out;
  out.motion = torch::from_blob(const_cast<float*>(l.motion.data()), {T, H, W, 2}, torch::kFloat)
                   .permute({0, 3, 1, 2})
                   .contiguous();
  auto u8_map = [&](const std::vector<std::uint8_t>& v) {
    return torch::from_blob(const_cast<std::uint8_t*>(v.data()), {H, W}, torch::kUInt8).clone();
  };
  out.category = u8_map(l.category).to(torch::kLong);
  out.state = u8_map(l.state).to(torch::kFloat);
  out.valid = u8_map(l.valid).to(torch::kFloat);
  out.instance_id =
      torch::from_blob(const_cast<std::int32_t*>(l.instance_id.data()), {H, W}, torch::kInt)
          .to(torch::kLong);
  return out;
}

Prediction tensors_to_prediction(const torch::Tensor& motion, const torch::Tensor& class_logits,
                                 const torch::Tensor& state_logits, std::int64_t b) {
  Prediction p;
  p.steps = static_cast<int>(motion.size(1));
  p.height = static_cast<int>(motion.size(3));
  p.width = static_cast<int>(motion.size(4));
  auto m = motion[b].detach().to(torch::kFloat).permute({0, 2, 3, 1}).contiguous();
  p.motion.assign(m.data_ptr<float>(), m.data_ptr<float>() + m.numel());
  auto c = class_logits[b].detach().to(torch::kFloat).permute({1, 2, 0}).contiguous();
  p.class_logits.assign(c.data_ptr<float>(), c.data_ptr<float>() + c.numel());
  auto s = state_logits[b].detach().to(torch::kFloat).contiguous();
  p.state_logits.assign(s.data_ptr<float>(), s.data_ptr<float>() + s.numel());
  return p;
}

}  // namespace bevmotion
