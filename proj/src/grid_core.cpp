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

#include "bevmotion/grid_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bevmotion/errors.hpp"

namespace bevmotion {

namespace {

constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "background", "car", "pedestrian", "bike", "others"};

int bin_index(double v, double lo, double res) {
  return static_cast<int>(std::floor((v - lo) / res));
}

}  // namespace

std::string_view category_name(Category c) {
  return kCategoryNames.at(static_cast<std::size_t>(c));
}

Category parse_category(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) {
      return static_cast<Category>(i);
    }
  }
  throw ConfigError("unknown category '" + std::string(name) + "'");
}

void GridSpec::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(x_min) || !finite(x_max) || !finite(y_min) || !finite(y_max) || !finite(z_min) ||
      !finite(z_max)) {
    throw ConfigError("grid ranges must be finite");
  }
  if (!(x_max > x_min) || !(y_max > y_min) || !(z_max > z_min)) {
    throw ConfigError("grid ranges must be strictly increasing");
  }
  if (!(xy_resolution > 0.0) || !(z_resolution > 0.0) || !(frame_interval > 0.0)) {
    throw ConfigError("grid resolutions and frame interval must be positive");
  }
  if (input_frames < 1 || output_steps < 1) {
    throw ConfigError("input_frames and output_steps must be >= 1");
  }
  if (height() < 1 || width() < 1 || depth() < 1) {
    throw ConfigError("grid must have at least one cell per axis");
  }
}

int GridSpec::height() const {
  return static_cast<int>(std::lround((x_max - x_min) / xy_resolution));
}

int GridSpec::width() const {
  return static_cast<int>(std::lround((y_max - y_min) / xy_resolution));
}

int GridSpec::depth() const {
  // 5.0 / 0.4 = 12.5 -> 13; the epsilon keeps exact multiples from gaining a bin.
  return static_cast<int>(std::ceil((z_max - z_min) / z_resolution - 1e-9));
}

OccupancyGrid::OccupancyGrid(int h, int w, int c)
    : height(h), width(w), depth(c), cells(static_cast<std::size_t>(h) * w * c, 0) {}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

bool cell_of(const Point& p, const GridSpec& spec, int& i, int& j, int& k) {
  const double x = p.x;
  const double y = p.y;
  const double z = p.z;
  if (!(x >= spec.x_min && x < spec.x_max && y >= spec.y_min && y < spec.y_max &&
        z >= spec.z_min && z < spec.z_max)) {
    return false;
  }
  i = bin_index(x, spec.x_min, spec.xy_resolution);
  j = bin_index(y, spec.y_min, spec.xy_resolution);
  k = bin_index(z, spec.z_min, spec.z_resolution);
  return i >= 0 && i < spec.height() && j >= 0 && j < spec.width() && k >= 0 && k < spec.depth();
}

VoxelizeResult voxelize(std::span<const Point> points, const GridSpec& spec) {
  VoxelizeResult out;
  out.grid = OccupancyGrid(spec.height(), spec.width(), spec.depth());
  for (const Point& p : points) {
    int i = 0;
    int j = 0;
    int k = 0;
    if (cell_of(p, spec, i, j, k)) {
      out.grid.cells[out.grid.index(i, j, k)] = 1;
    } else {
      ++out.dropped;
    }
  }
  return out;
}

SceneLabels::SceneLabels(int t, int h, int w)
    : steps(t),
      height(h),
      width(w),
      motion(static_cast<std::size_t>(t) * h * w * 2, 0.0f),
      category(static_cast<std::size_t>(h) * w, 0),
      state(static_cast<std::size_t>(h) * w, 0),
      instance_id(static_cast<std::size_t>(h) * w, 0),
      valid(static_cast<std::size_t>(h) * w, 0) {}

std::array<float, 2> SceneLabels::final_motion(std::size_t cell_idx) const {
  const std::size_t m = motion_index(steps - 1, cell_idx);
  return {motion[m], motion[m + 1]};
}

std::array<double, 2> rigid_displacement(const Pose2& from, const Pose2& to, double px,
                                         double py) {
  const double dtheta = to.heading - from.heading;
  const double c = std::cos(dtheta);
  const double s = std::sin(dtheta);
  const double rx = px - from.x;
  const double ry = py - from.y;
  const double nx = to.x + c * rx - s * ry;
  const double ny = to.y + s * rx + c * ry;
  return {nx - px, ny - py};
}

SceneLabels rasterize_labels(const GroundTruthFrame& scene, const GridSpec& spec) {
  spec.validate();
  if (scene.points.size() != scene.owners.size()) {
    throw ContractError("rasterize_labels: points and owners differ in length");
  }
  const int T = spec.output_steps;
  SceneLabels labels(T, spec.height(), spec.width());

  // Lowest owning instance id per cell; INT32_MAX marks "no object".
  constexpr std::int32_t kNone = std::numeric_limits<std::int32_t>::max();
  std::vector<std::int32_t> owner(labels.cells(), kNone);
  for (std::size_t n = 0; n < scene.points.size(); ++n) {
    int i = 0;
    int j = 0;
    int k = 0;
    if (!cell_of(scene.points[n], spec, i, j, k)) {
      continue;
    }
    const std::size_t c = labels.cell(i, j);
    labels.valid[c] = 1;
    const std::int32_t id = scene.owners[n];
    if (id > 0) {
      owner[c] = std::min(owner[c], id);
    }
  }

  std::vector<const LabeledObject*> by_id;
  for (const LabeledObject& obj : scene.objects) {
    if (obj.instance_id <= 0) {
      throw ContractError("rasterize_labels: instance ids must be positive");
    }
    if (static_cast<int>(obj.future.size()) != T) {
      throw ContractError("rasterize_labels: object trajectory must cover every output step");
    }
    if (static_cast<std::size_t>(obj.instance_id) >= by_id.size()) {
      by_id.resize(static_cast<std::size_t>(obj.instance_id) + 1, nullptr);
    }
    by_id[static_cast<std::size_t>(obj.instance_id)] = &obj;
  }

  for (int i = 0; i < labels.height; ++i) {
    for (int j = 0; j < labels.width; ++j) {
      const std::size_t c = labels.cell(i, j);
      const std::int32_t id = owner[c];
      if (id == kNone) {
        continue;
      }
      if (static_cast<std::size_t>(id) >= by_id.size() || by_id[id] == nullptr) {
        throw ContractError("rasterize_labels: point owner " + std::to_string(id) +
                            " has no object");
      }
      const LabeledObject& obj = *by_id[id];
      labels.category[c] = static_cast<std::uint8_t>(obj.category);
      labels.instance_id[c] = id;
      const double px = spec.cell_center_x(i);
      const double py = spec.cell_center_y(j);
      bool moving = false;
      for (int tau = 0; tau < T; ++tau) {
        const auto d = rigid_displacement(obj.current, obj.future[tau], px, py);
        const std::size_t m = labels.motion_index(tau, c);
        labels.motion[m] = static_cast<float>(d[0]);
        labels.motion[m + 1] = static_cast<float>(d[1]);
        const double limit = kStaticSpeed * (tau + 1) * spec.frame_interval;
        if (std::hypot(labels.motion[m], labels.motion[m + 1]) > limit) {
          moving = true;
        }
      }
      labels.state[c] = moving ? 1 : 0;
    }
  }
  return labels;
}

}  // namespace bevmotion
