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

#include <json.hpp>

#include "bevmotion/dspg.hpp"
#include "bevmotion/grid_core.hpp"
#include "bevmotion/model.hpp"
#include "bevmotion/objective.hpp"
#include "bevmotion/scene_sim.hpp"

namespace bevmotion {

struct TrainConfig {
  double learning_rate = 0.0016;
  std::vector<int> decay_epochs{10, 20, 30, 40};
  double decay_factor = 0.5;
  int epochs = 45;
  int batch_size = 4;
  /// Probability of decoding from the prior latent; annealed linearly to
  /// zero over the last `teacher_anneal_fraction` of training.
  double teacher_probability = 0.5;
  double teacher_anneal_fraction = 1.0 / 3.0;
  /// Linear KL warm-up over this fraction of all steps.
  double kl_warmup_fraction = 0.1;
  /// Stops after this many optimizer steps when > 0.
  int max_steps = 0;
  bool validate_each_epoch = true;

  static TrainConfig paper();
  static TrainConfig toy();

  /// Learning rate during 0-based epoch `epoch`: every decay epoch <= epoch
  /// has already been applied.
  double learning_rate_at(int epoch) const;
  void validate() const;
};

struct DataConfig {
  int train = 160;
  int val = 20;
  int test = 20;
  std::optional<Category> mask;
};

struct PlotConfig {
  double pixels_per_meter = 8.0;
  int arrow_stride = 4;
  int chart_width = 480;
  int chart_height = 320;
};

struct ExperimentConfig {
  sim::SceneConfig scene;  // carries the grid spec
  DataConfig data;
  ModelOptions model;
  LossWeights loss;
  double smooth_l1_delta = 1.0;
  TrainConfig train;
  LatentMode eval_mode = LatentMode::kDeterministic;
  PlotConfig plot;
  std::uint64_t seed = 0;

  const GridSpec& grid() const { return scene.grid; }

  /// Syncs derived sizes and checks every section; throws ConfigError.
  void finalize();
  void set_seed(std::uint64_t s);

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);

  /// Reduced grid and scene used by the desk-scale benchmark.
  static ExperimentConfig toy();
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string hex64(std::uint64_t v);

}  // namespace bevmotion
