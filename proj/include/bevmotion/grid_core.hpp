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
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bevmotion {

/// Semantic classes carried by the category map.
enum class Category : std::uint8_t {
  kBackground = 0,
  kCar = 1,
  kPedestrian = 2,
  kBike = 3,
  kOthers = 4,
};

inline constexpr int kNumCategories = 5;

std::string_view category_name(Category c);
/// Accepts "background", "car", "pedestrian", "bike", "others".
Category parse_category(std::string_view name);

/// Geometry of the bird's-eye-view grid and the temporal layout of one sample.
///
/// Rows (i) run along x, columns (j) along y, height bins (k) along z. All
/// ranges are half-open: a coordinate v belongs to the grid iff min <= v < max.
struct GridSpec {
  double x_min = -32.0;
  double x_max = 32.0;
  double y_min = -32.0;
  double y_max = 32.0;
  double z_min = -3.0;
  double z_max = 2.0;
  double xy_resolution = 0.25;
  double z_resolution = 0.4;
  double frame_interval = 0.2;
  int input_frames = 5;
  int output_steps = 5;

  /// Throws ConfigError when a range is empty or a resolution non-positive.
  void validate() const;

  int height() const;  // round((x_max - x_min) / xy_resolution)
  int width() const;   // round((y_max - y_min) / xy_resolution)
  int depth() const;   // ceil((z_max - z_min) / z_resolution)

  /// Seconds covered by the prediction horizon.
  double horizon_seconds() const { return output_steps * frame_interval; }

  /// World coordinates of a BEV cell center.
  double cell_center_x(int i) const { return x_min + (i + 0.5) * xy_resolution; }
  double cell_center_y(int j) const { return y_min + (j + 0.5) * xy_resolution; }

  bool operator==(const GridSpec&) const = default;
};

struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;

  bool operator==(const Point&) const = default;
};

/// Input_frames point sets in one co-registered ego frame, oldest first; the
/// last frame is the "current" frame that labels refer to.
struct PointSequence {
  std::vector<std::vector<Point>> frames;

  bool operator==(const PointSequence&) const = default;
};

/// Binary H x W x C occupancy of a single frame, stored row-major (i, j, k).
struct OccupancyGrid {
  int height = 0;
  int width = 0;
  int depth = 0;
  std::vector<std::uint8_t> cells;

  OccupancyGrid() = default;
  OccupancyGrid(int h, int w, int c);

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * width + j) * depth + k;
  }
  std::uint8_t at(int i, int j, int k) const { return cells[index(i, j, k)]; }
  std::size_t occupied_count() const;

  bool operator==(const OccupancyGrid&) const = default;
};

struct VoxelizeResult {
  OccupancyGrid grid;
  std::size_t dropped = 0;  // points outside the grid extent
};

/// Cell indices of a point, or false when the point lies outside the grid.
bool cell_of(const Point& p, const GridSpec& spec, int& i, int& j, int& k);

/// Binary occupancy of one frame. Out-of-range points are dropped and counted.
VoxelizeResult voxelize(std::span<const Point> points, const GridSpec& spec);

/// Ground-truth fields of one sequence, referenced to its current frame.
///
/// motion is laid out (tau, i, j, component) with tau = 0 meaning the first
/// future step; all maps are row-major (i, j).
struct SceneLabels {
  int steps = 0;
  int height = 0;
  int width = 0;
  std::vector<float> motion;
  std::vector<std::uint8_t> category;
  std::vector<std::uint8_t> state;
  std::vector<std::int32_t> instance_id;
  std::vector<std::uint8_t> valid;

  SceneLabels() = default;
  SceneLabels(int t, int h, int w);

  std::size_t cell(int i, int j) const { return static_cast<std::size_t>(i) * width + j; }
  std::size_t cells() const { return static_cast<std::size_t>(height) * width; }
  std::size_t motion_index(int tau, std::size_t cell_idx) const {
    return (static_cast<std::size_t>(tau) * cells() + cell_idx) * 2;
  }
  /// Ground-truth displacement of a cell at the final step.
  std::array<float, 2> final_motion(std::size_t cell_idx) const;

  bool operator==(const SceneLabels&) const = default;
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

/// Rigid object as seen by the label rasterizer.
struct LabeledObject {
  std::int32_t instance_id = 0;  // > 0
  Category category = Category::kCar;
  Pose2 current;
  std::vector<Pose2> future;  // one pose per output step
};

/// Everything rasterize_labels needs about one sequence: the current-frame
/// points, which object produced each of them (0 = background), and the
/// object poses over the prediction horizon.
struct GroundTruthFrame {
  std::span<const Point> points;
  std::span<const std::int32_t> owners;
  std::span<const LabeledObject> objects;
};

/// Displacement of world point (px, py) when carried rigidly from pose
/// `from` to pose `to`.
std::array<double, 2> rigid_displacement(const Pose2& from, const Pose2& to, double px, double py);

/// Per-cell supervision for the current frame. A cell is valid when any
/// in-range point lands in it; it belongs to the lowest instance id among the
/// objects that put a point there.
SceneLabels rasterize_labels(const GroundTruthFrame& scene, const GridSpec& spec);

/// Static threshold in m/s shared by labels, speed groups and state maps.
inline constexpr double kStaticSpeed = 0.2;
inline constexpr double kSlowSpeed = 5.0;

}  // namespace bevmotion
