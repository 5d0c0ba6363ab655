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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "bevmotion/dataset.hpp"
#include "bevmotion/grid_core.hpp"

namespace bevmotion::sim {

enum class MotionModel : std::uint8_t {
  kConstantVelocity = 0,
  kConstantTurn = 1,
  kStopAndGo = 2,
};

struct SpeedRange {
  double min = 0.0;
  double max = 0.0;
};

/// Footprint, height and speed distribution of one object class.
struct ClassConfig {
  int count = 0;
  SpeedRange speed;
  double length = 1.0;
  double width = 1.0;
  double height = 1.5;
};

/// Declarative description of a synthetic scene family. Every field has a
/// config-file key of the same name under "sim." (see README).
struct SceneConfig {
  GridSpec grid;
  ClassConfig car{6, {0.0, 10.0}, 4.5, 1.9, 1.6};
  ClassConfig pedestrian{4, {0.0, 1.8}, 0.6, 0.6, 1.7};
  ClassConfig bike{2, {0.0, 7.0}, 1.8, 0.6, 1.5};
  ClassConfig others{2, {0.0, 1.0}, 1.0, 1.0, 1.0};

  /// Probability that an object is parked regardless of its speed range.
  double static_fraction = 0.25;
  /// Object returns per m^2 of footprint, sampled on the footprint outline.
  double point_density = 8.0;
  /// Static background returns per m^2 of BEV area.
  double clutter_density = 0.02;
  /// Fraction of all returns removed at random.
  double sparsity_factor = 0.0;
  /// Gaussian sensor noise per coordinate (m).
  double noise_sigma = 0.02;
  /// Relative frequency of constant-velocity, constant-turn, stop-and-go.
  std::array<double, 3> motion_model_weights{0.6, 0.25, 0.15};
  double max_yaw_rate = 0.35;   // rad/s, constant-turn
  double max_accel = 1.0;       // m/s^2, stop-and-go
  double ground_z = -1.7;       // m, bottom of every object
  double placement_margin = 0.6;
  int max_placement_attempts = 200;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError for negative counts/densities or sparsity outside [0,1].
  void validate() const;

  ClassConfig& class_config(Category c);
  const ClassConfig& class_config(Category c) const;
};

/// One simulated rigid object. poses[f] is the pose at frame f, with frames
/// 0..input_frames-1 the observed window (last one current) followed by the
/// output_steps future frames.
struct ObjectTrack {
  std::int32_t instance_id = 0;
  Category category = Category::kCar;
  MotionModel motion = MotionModel::kConstantVelocity;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  std::vector<Pose2> poses;
};

struct SimulatedSequence {
  Sequence sequence;
  /// Instance id of the object behind each point (0 = background clutter).
  std::vector<std::vector<std::int32_t>> owners;
  std::vector<ObjectTrack> tracks;
};

/// Deterministic in config.rng_seed. Throws GenerationError when objects
/// cannot be placed without overlap within the attempt budget.
SimulatedSequence generate_sequence(const SceneConfig& config);

/// True when world point (x, y) lies inside the track's footprint at frame f,
/// inflated by `tolerance` on every side.
bool inside_footprint(const ObjectTrack& track, int frame, double x, double y,
                      double tolerance);

/// `n` sequences with per-sequence seeds derived from (config.rng_seed, split_id).
/// When `masked` is set, objects of that class are removed from every scene.
Dataset generate_split(const SceneConfig& config, int n, std::uint64_t split_id,
                       std::optional<Category> masked = std::nullopt);

struct BenchmarkPaths {
  std::filesystem::path train;
  std::filesystem::path val;
  std::filesystem::path test;
};

/// Writes train/val/test PMDS files under `out_dir`. A masked category is
/// removed from the training split only.
BenchmarkPaths make_benchmark(const SceneConfig& config, int n_train, int n_val, int n_test,
                              std::optional<Category> mask_category,
                              const std::filesystem::path& out_dir);

}  // namespace bevmotion::sim
