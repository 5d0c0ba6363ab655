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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "bevmotion/config.hpp"
#include "bevmotion/model.hpp"

namespace bevmotion {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Where training stands at an epoch boundary.
struct TrainState {
  int next_epoch = 0;
  std::int64_t step = 0;
  std::vector<char> optimizer;  // serialized optimizer archive
};

struct NamedTensor {
  std::string name;
  torch::Tensor value;
};

struct Checkpoint {
  ExperimentConfig config;
  std::uint64_t config_hash = 0;
  std::vector<NamedTensor> tensors;
  std::optional<TrainState> train_state;
};

/// Writes config, every parameter and buffer, and optionally the training
/// state. Atomic on the filesystem.
void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config,
                     const torch::nn::Module& model, const TrainState* state = nullptr);

/// Throws FormatError/CorruptionError on damaged files.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies tensors into `model`; every parameter must be present with a
/// matching shape.
void load_tensors(torch::nn::Module& model, const std::vector<NamedTensor>& tensors);

/// Rebuilds the model described by the checkpoint and loads its weights.
MotionModel load_model(const Checkpoint& ckpt);

std::vector<char> serialize_optimizer(const torch::optim::Optimizer& optimizer);
void restore_optimizer(torch::optim::Optimizer& optimizer, const std::vector<char>& blob);

}  // namespace bevmotion
