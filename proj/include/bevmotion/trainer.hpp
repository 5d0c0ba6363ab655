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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "bevmotion/checkpoint.hpp"
#include "bevmotion/config.hpp"
#include "bevmotion/dataset.hpp"
#include "bevmotion/metrics.hpp"
#include "bevmotion/model.hpp"
#include "bevmotion/objective.hpp"
#include "bevmotion/tensors.hpp"

namespace bevmotion {

/// One batch in network layout.
struct Batch {
  torch::Tensor grids;  // [B, T_in, depth, H, W]
  torch::Tensor valid;  // [B, H, W]
  PriorInputs labels;   // motion/category/state plus instance rows
};

/// Dataset with inputs voxelized once and kept as bytes.
class TensorDataset {
 public:
  TensorDataset(const Dataset& data, const RvpeOptions& rvpe);

  std::size_t size() const { return grids_.size(); }
  const GridSpec& spec() const { return spec_; }
  /// Instance rows are resampled from `seed`.
  Batch batch(std::span<const std::size_t> indices, std::uint64_t seed) const;

 private:
  GridSpec spec_;
  RvpeOptions rvpe_;
  std::vector<torch::Tensor> grids_;  // uint8 [T_in, depth, H, W]
  std::vector<LabelTensors> labels_;
  std::vector<const SceneLabels*> raw_labels_;
};

/// Forward pass plus every loss term for one batch.
LossReport compute_loss(MotionModelImpl& model, const Batch& batch, const ExperimentConfig& config,
                        const ForwardOptions& fwd, double pattern_scale);

struct StepRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double learning_rate = 0.0;
  double total = 0.0;
  double move = 0.0;
  double state = 0.0;
  double cls = 0.0;
  double pattern = 0.0;
  double pattern_weight = 0.0;
  bool no_supervision = false;
  bool teacher = false;

  nlohmann::json to_json() const;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  std::optional<metrics::MetricReport> validation;
  std::string checkpoint;
  double wall_seconds = 0.0;
};

struct RunRecord {
  std::uint64_t config_hash = 0;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

struct TrainerOptions {
  /// Checkpoints and logs go here; nothing is written when empty.
  std::filesystem::path out_dir;
  /// Called after every optimizer step.
  std::function<void(const StepRecord&)> on_step;
  bool verbose = false;
};

class Trainer {
 public:
  Trainer(ExperimentConfig config, const Dataset& train, const Dataset* val,
          TrainerOptions options = {});

  /// Restores weights and optimizer state; the config hash must match.
  void resume(const Checkpoint& ckpt);

  /// Runs epochs until `until_epoch` (exclusive; -1 = configured total) or
  /// until max_steps is reached.
  RunRecord run(int until_epoch = -1);

  MotionModel model() const { return model_; }
  int next_epoch() const { return next_epoch_; }
  std::int64_t step() const { return step_; }
  std::int64_t total_steps() const { return total_steps_; }
  const ExperimentConfig& config() const { return config_; }

  /// Saves weights and training state.
  void save(const std::filesystem::path& path) const;

  /// Linear KL warm-up factor at a given step.
  double pattern_scale_at(std::int64_t step) const;
  /// Teacher-path probability at a given step.
  double teacher_probability_at(std::int64_t step) const;

 private:
  ExperimentConfig config_;
  TensorDataset train_;
  const Dataset* val_;
  TrainerOptions options_;
  MotionModel model_{nullptr};
  std::unique_ptr<torch::optim::Adam> optimizer_;
  int next_epoch_ = 0;
  std::int64_t step_ = 0;
  std::int64_t total_steps_ = 0;
};

}  // namespace bevmotion
