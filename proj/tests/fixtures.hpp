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

#include "bevmotion/config.hpp"
#include "bevmotion/dataset.hpp"
#include "bevmotion/scene_sim.hpp"

namespace fixture {

/// 32x32 grid with a couple of objects; small enough for per-test training.
inline bevmotion::ExperimentConfig small_config(std::uint64_t seed = 1) {
  auto cfg = bevmotion::ExperimentConfig::toy();
  cfg.scene.grid.x_min = -8.0;
  cfg.scene.grid.x_max = 8.0;
  cfg.scene.grid.y_min = -8.0;
  cfg.scene.grid.y_max = 8.0;
  cfg.scene.car.count = 1;
  cfg.scene.pedestrian.count = 1;
  cfg.scene.bike.count = 1;
  cfg.scene.others.count = 0;
  cfg.train.epochs = 4;
  cfg.train.decay_epochs = {2};
  cfg.train.batch_size = 2;
  cfg.train.validate_each_epoch = false;
  cfg.set_seed(seed);
  cfg.finalize();
  return cfg;
}

inline bevmotion::Dataset small_data(const bevmotion::ExperimentConfig& cfg, int n,
                                     std::uint64_t split = 0) {
  return bevmotion::sim::generate_split(cfg.scene, n, split);
}

}  // namespace fixture
