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
#include <span>
#include <vector>

#include <torch/torch.h>

#include "bevmotion/dataset.hpp"
#include "bevmotion/grid_core.hpp"

namespace bevmotion {

/// Per-frame occupancy stacked as [input_frames, depth, H, W] float.
torch::Tensor grids_to_tensor(std::span<const OccupancyGrid> grids);

/// Voxelizes every frame of a point sequence and stacks the result.
torch::Tensor voxelize_sequence(const PointSequence& points, const GridSpec& spec);

/// Label maps in channel-first layout for one sequence.
struct LabelTensors {
  torch::Tensor motion;       // [T, 2, H, W] float, meters
  torch::Tensor category;     // [H, W] int64
  torch::Tensor state;        // [H, W] float in {0, 1}
  torch::Tensor valid;        // [H, W] float in {0, 1}
  torch::Tensor instance_id;  // [H, W] int64
};

LabelTensors labels_to_tensors(const SceneLabels& labels);

/// Converts batched network outputs (batch index `b`) back to the on-disk layout.
Prediction tensors_to_prediction(const torch::Tensor& motion, const torch::Tensor& class_logits,
                                 const torch::Tensor& state_logits, std::int64_t b);

}  // namespace bevmotion
