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

#include <gtest/gtest.h>

#include <cmath>

#include "bevmotion/errors.hpp"
#include "bevmotion/metrics.hpp"
#include "bevmotion/scene_sim.hpp"

namespace bevmotion::sim {
namespace {

SceneConfig empty_scene() {
  SceneConfig c;
  c.car.count = c.pedestrian.count = c.bike.count = c.others.count = 0;
  c.clutter_density = 0.0;
  return c;
}

TEST(SceneSim, EmptySceneHasNoPointsOrLabels) {
  auto s = generate_sequence(empty_scene());
  for (const auto& f : s.sequence.points.frames) {
    EXPECT_TRUE(f.empty());
  }
  const auto& l = s.sequence.labels;
  for (std::size_t c = 0; c < l.cells(); ++c) {
    ASSERT_EQ(l.valid[c], 0);
  }
}

TEST(SceneSim, SingleCarFiveMetersPerSecond) {
  SceneConfig c = empty_scene();
  c.car = {1, {5.0, 5.0}, 4.5, 1.9, 1.6};
  c.static_fraction = 0.0;
  c.motion_model_weights = {1.0, 0.0, 0.0};
  c.noise_sigma = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    c.rng_seed = seed;
    auto s = generate_sequence(c);
    const auto& l = s.sequence.labels;
    std::size_t cells = 0;
    for (std::size_t k = 0; k < l.cells(); ++k) {
      if (l.category[k] != static_cast<std::uint8_t>(Category::kCar)) {
        continue;
      }
      ++cells;
      const auto m = l.final_motion(k);
      EXPECT_NEAR(std::hypot(m[0], m[1]), 5.0, 1e-4);
    }
    EXPECT_GT(cells, 0u);
  }
}

TEST(SceneSim, SameSeedIsBitIdentical) {
  SceneConfig c;
  c.rng_seed = 99;
  auto a = generate_sequence(c);
  auto b = generate_sequence(c);
  EXPECT_EQ(a.sequence, b.sequence);
  c.rng_seed = 100;
  EXPECT_FALSE(generate_sequence(c).sequence == a.sequence);
}

TEST(SceneSim, PointsLieInsideTheirFootprints) {
  SceneConfig c;
  c.rng_seed = 5;
  auto s = generate_sequence(c);
  for (std::size_t f = 0; f < s.sequence.points.frames.size(); ++f) {
    const auto& pts = s.sequence.points.frames[f];
    for (std::size_t n = 0; n < pts.size(); ++n) {
      const auto id = s.owners[f][n];
      if (id == 0) {
        continue;
      }
      const auto& track = s.tracks.at(static_cast<std::size_t>(id - 1));
      ASSERT_EQ(track.instance_id, id);
      EXPECT_TRUE(inside_footprint(track, static_cast<int>(f), pts[n].x, pts[n].y,
                                   4.0 * c.noise_sigma + 1e-4));
    }
  }
}

TEST(SceneSim, LabelsMatchTrackPoses) {
  SceneConfig c;
  c.rng_seed = 6;
  auto s = generate_sequence(c);
  const auto& l = s.sequence.labels;
  const GridSpec& g = c.grid;
  const int n_in = g.input_frames;
  for (int i = 0; i < l.height; ++i) {
    for (int j = 0; j < l.width; ++j) {
      const auto cell = l.cell(i, j);
      const auto id = l.instance_id[cell];
      if (id <= 0) {
        continue;
      }
      const auto& t = s.tracks.at(static_cast<std::size_t>(id - 1));
      for (int tau = 0; tau < g.output_steps; ++tau) {
        const auto d = rigid_displacement(t.poses[n_in - 1], t.poses[n_in + tau],
                                          g.cell_center_x(i), g.cell_center_y(j));
        EXPECT_NEAR(l.motion[l.motion_index(tau, cell)], d[0], 1e-5);
        EXPECT_NEAR(l.motion[l.motion_index(tau, cell) + 1], d[1], 1e-5);
      }
    }
  }
}

TEST(SceneSim, MaskedCategoryAbsentFromTrainOnly) {
  SceneConfig c;
  c.grid.xy_resolution = 0.5;
  c.rng_seed = 8;
  Dataset train = generate_split(c, 6, 0, Category::kOthers);
  Dataset test = generate_split(c, 6, 2);
  auto count = [](const Dataset& d) {
    std::size_t n = 0;
    for (const auto& s : d.sequences) {
      for (auto v : s.labels.category) {
        n += v == static_cast<std::uint8_t>(Category::kOthers);
      }
    }
    return n;
  };
  EXPECT_EQ(train.sequences.size(), 6u);
  EXPECT_EQ(count(train), 0u);
  EXPECT_GT(count(test), 0u);
}

TEST(SceneSim, FastCarsFallInFastGroup) {
  SceneConfig c;
  c.grid.xy_resolution = 0.5;
  c.car.speed = {6.0, 10.0};
  c.static_fraction = 0.0;
  c.rng_seed = 12;
  Dataset d = generate_split(c, 100, 0);
  std::size_t cars = 0;
  std::size_t fast = 0;
  for (const auto& s : d.sequences) {
    for (std::size_t k = 0; k < s.labels.cells(); ++k) {
      if (s.labels.category[k] != static_cast<std::uint8_t>(Category::kCar)) {
        continue;
      }
      ++cars;
      fast += metrics::speed_group(metrics::cell_speed(s.labels, k, c.grid.horizon_seconds())) ==
              metrics::SpeedGroup::kFast;
    }
  }
  ASSERT_GT(cars, 0u);
  EXPECT_GE(static_cast<double>(fast) / cars, 0.95);
}

TEST(SceneSim, RejectsBackgroundMaskAndBadConfig) {
  SceneConfig c;
  EXPECT_THROW(make_benchmark(c, 1, 1, 1, Category::kBackground, "/tmp/unused"), ConfigError);
  c.car.count = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SceneSim, ImpossiblePlacementFails) {
  SceneConfig c;
  c.grid.x_min = c.grid.y_min = -4;
  c.grid.x_max = c.grid.y_max = 4;
  c.car.count = 40;
  c.max_placement_attempts = 20;
  EXPECT_THROW(generate_sequence(c), GenerationError);
}

}  // namespace
}  // namespace bevmotion::sim
