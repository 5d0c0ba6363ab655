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

#include "bevmotion/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bevmotion/errors.hpp"
#include "bevmotion/rng.hpp"

namespace bevmotion::sim {

namespace {

using Corners = std::array<std::array<double, 2>, 4>;

Corners footprint_corners(const Pose2& pose, double length, double width, double inflate) {
  const double hl = 0.5 * length + inflate;
  const double hw = 0.5 * width + inflate;
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  Corners out{};
  const std::array<std::array<double, 2>, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  for (std::size_t n = 0; n < 4; ++n) {
    out[n] = {pose.x + c * local[n][0] - s * local[n][1],
              pose.y + s * local[n][0] + c * local[n][1]};
  }
  return out;
}

// Separating-axis test for two convex quadrilaterals.
bool overlaps(const Corners& a, const Corners& b) {
  for (const Corners* poly : {&a, &b}) {
    for (std::size_t e = 0; e < 4; ++e) {
      const auto& p0 = (*poly)[e];
      const auto& p1 = (*poly)[(e + 1) % 4];
      const double ax = -(p1[1] - p0[1]);
      const double ay = p1[0] - p0[0];
      double amin = 1e300;
      double amax = -1e300;
      double bmin = 1e300;
      double bmax = -1e300;
      for (const auto& p : a) {
        const double v = p[0] * ax + p[1] * ay;
        amin = std::min(amin, v);
        amax = std::max(amax, v);
      }
      for (const auto& p : b) {
        const double v = p[0] * ax + p[1] * ay;
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
      }
      if (amax < bmin || bmax < amin) {
        return false;
      }
    }
  }
  return true;
}

struct Kinematics {
  MotionModel model = MotionModel::kConstantVelocity;
  double speed = 0.0;
  double yaw_rate = 0.0;
  double accel = 0.0;
  double speed_cap = 0.0;
};

// Distance travelled between time 0 and t under a clamped linear speed
// profile; exact piecewise integration of v(u) = clamp(v0 + a u, 0, cap).
double stop_and_go_distance(const Kinematics& k, double t) {
  auto speed_at = [&](double u) { return std::clamp(k.speed + k.accel * u, 0.0, k.speed_cap); };
  double lo = std::min(0.0, t);
  double hi = std::max(0.0, t);
  std::vector<double> knots{lo, hi};
  if (k.accel != 0.0) {
    for (double target : {0.0, k.speed_cap}) {
      const double u = (target - k.speed) / k.accel;
      if (u > lo && u < hi) {
        knots.push_back(u);
      }
    }
  }
  std::sort(knots.begin(), knots.end());
  double dist = 0.0;
  for (std::size_t n = 0; n + 1 < knots.size(); ++n) {
    const double a = knots[n];
    const double b = knots[n + 1];
    dist += 0.5 * (speed_at(a) + speed_at(b)) * (b - a);
  }
  return t >= 0.0 ? dist : -dist;
}

Pose2 pose_at(const Pose2& origin, const Kinematics& k, double t) {
  switch (k.model) {
    case MotionModel::kConstantTurn: {
      if (std::abs(k.yaw_rate) < 1e-9) {
        break;
      }
      const double h = origin.heading + k.yaw_rate * t;
      const double r = k.speed / k.yaw_rate;
      return {origin.x + r * (std::sin(h) - std::sin(origin.heading)),
              origin.y - r * (std::cos(h) - std::cos(origin.heading)), h};
    }
    case MotionModel::kStopAndGo: {
      const double s = stop_and_go_distance(k, t);
      return {origin.x + s * std::cos(origin.heading), origin.y + s * std::sin(origin.heading),
              origin.heading};
    }
    case MotionModel::kConstantVelocity:
      break;
  }
  return {origin.x + k.speed * t * std::cos(origin.heading),
          origin.y + k.speed * t * std::sin(origin.heading), origin.heading};
}

MotionModel pick_model(Rng& rng, const std::array<double, 3>& weights) {
  const double total = weights[0] + weights[1] + weights[2];
  double u = rng.uniform() * total;
  for (std::size_t n = 0; n < 3; ++n) {
    if (u < weights[n]) {
      return static_cast<MotionModel>(n);
    }
    u -= weights[n];
  }
  return MotionModel::kConstantVelocity;
}

// Uniform point on the outline of an L x W rectangle centered at the origin.
std::array<double, 2> outline_point(Rng& rng, double length, double width) {
  const double perimeter = 2.0 * (length + width);
  double s = rng.uniform() * perimeter;
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  if (s < length) {
    return {-hl + s, hw};
  }
  s -= length;
  if (s < width) {
    return {hl, hw - s};
  }
  s -= width;
  if (s < length) {
    return {hl - s, -hw};
  }
  s -= length;
  return {-hl, -hw + s};
}

void check_class(const ClassConfig& c, const char* name) {
  if (c.count < 0) {
    throw ConfigError(std::string("sim.") + name + ".count must be >= 0");
  }
  if (c.speed.min < 0.0 || c.speed.max < c.speed.min) {
    throw ConfigError(std::string("sim.") + name + ".speed must satisfy 0 <= min <= max");
  }
  if (!(c.length > 0.0) || !(c.width > 0.0) || !(c.height > 0.0)) {
    throw ConfigError(std::string("sim.") + name + " dimensions must be positive");
  }
}

}  // namespace

void SceneConfig::validate() const {
  grid.validate();
  check_class(car, "car");
  check_class(pedestrian, "pedestrian");
  check_class(bike, "bike");
  check_class(others, "others");
  if (point_density < 0.0 || clutter_density < 0.0) {
    throw ConfigError("sim densities must be >= 0");
  }
  if (!(sparsity_factor >= 0.0 && sparsity_factor <= 1.0)) {
    throw ConfigError("sim.sparsity_factor must lie in [0, 1]");
  }
  if (!(static_fraction >= 0.0 && static_fraction <= 1.0)) {
    throw ConfigError("sim.static_fraction must lie in [0, 1]");
  }
  if (noise_sigma < 0.0 || max_yaw_rate < 0.0 || max_accel < 0.0 || placement_margin < 0.0) {
    throw ConfigError("sim noise, yaw rate, acceleration and margin must be >= 0");
  }
  if (std::any_of(motion_model_weights.begin(), motion_model_weights.end(),
                  [](double w) { return w < 0.0; }) ||
      motion_model_weights[0] + motion_model_weights[1] + motion_model_weights[2] <= 0.0) {
    throw ConfigError("sim.motion_model_weights must be non-negative with a positive sum");
  }
  if (max_placement_attempts < 1) {
    throw ConfigError("sim.max_placement_attempts must be >= 1");
  }
}

ClassConfig& SceneConfig::class_config(Category c) {
  return const_cast<ClassConfig&>(std::as_const(*this).class_config(c));
}

const ClassConfig& SceneConfig::class_config(Category c) const {
  switch (c) {
    case Category::kCar:
      return car;
    case Category::kPedestrian:
      return pedestrian;
    case Category::kBike:
      return bike;
    case Category::kOthers:
      return others;
    case Category::kBackground:
      break;
  }
  throw ConfigError("background has no object class configuration");
}

bool inside_footprint(const ObjectTrack& track, int frame, double x, double y,
                      double tolerance) {
  const Pose2& p = track.poses.at(static_cast<std::size_t>(frame));
  const double c = std::cos(p.heading);
  const double s = std::sin(p.heading);
  const double dx = x - p.x;
  const double dy = y - p.y;
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return std::abs(u) <= 0.5 * track.length + tolerance &&
         std::abs(v) <= 0.5 * track.width + tolerance;
}

SimulatedSequence generate_sequence(const SceneConfig& config) {
  config.validate();
  const GridSpec& spec = config.grid;
  const int n_in = spec.input_frames;
  const int n_frames = spec.input_frames + spec.output_steps;
  const double dt = spec.frame_interval;
  Rng rng(config.rng_seed);

  SimulatedSequence out;
  std::vector<std::vector<Corners>> placed;  // per object, per frame

  std::int32_t next_id = 1;
  for (Category cat : {Category::kCar, Category::kPedestrian, Category::kBike,
                       Category::kOthers}) {
    const ClassConfig& cc = config.class_config(cat);
    for (int n = 0; n < cc.count; ++n) {
      bool ok = false;
      for (int attempt = 0; attempt < config.max_placement_attempts && !ok; ++attempt) {
        Kinematics k;
        k.model = pick_model(rng, config.motion_model_weights);
        k.speed = rng.uniform(cc.speed.min, cc.speed.max);
        k.speed_cap = cc.speed.max;
        k.yaw_rate = rng.uniform(-config.max_yaw_rate, config.max_yaw_rate);
        k.accel = rng.uniform(-config.max_accel, config.max_accel);
        if (rng.bernoulli(config.static_fraction)) {
          k = Kinematics{};
        }
        const double inset = 0.5 * std::max(cc.length, cc.width);
        const Pose2 origin{rng.uniform(spec.x_min + inset, spec.x_max - inset),
                           rng.uniform(spec.y_min + inset, spec.y_max - inset),
                           rng.uniform(-std::numbers::pi, std::numbers::pi)};
        ObjectTrack track;
        track.category = cat;
        track.motion = k.model;
        track.length = cc.length;
        track.width = cc.width;
        track.height = cc.height;
        std::vector<Corners> corners;
        for (int f = 0; f < n_frames; ++f) {
          const double t = (f - (n_in - 1)) * dt;
          track.poses.push_back(pose_at(origin, k, t));
          corners.push_back(footprint_corners(track.poses.back(), cc.length, cc.width,
                                              0.5 * config.placement_margin));
        }
        ok = std::none_of(placed.begin(), placed.end(), [&](const std::vector<Corners>& other) {
          for (int f = 0; f < n_frames; ++f) {
            if (overlaps(corners[f], other[f])) {
              return true;
            }
          }
          return false;
        });
        if (ok) {
          track.instance_id = next_id++;
          placed.push_back(std::move(corners));
          out.tracks.push_back(std::move(track));
        }
      }
      if (!ok) {
        throw GenerationError("could not place " + std::string(category_name(cat)) + " #" +
                              std::to_string(n) + " after " +
                              std::to_string(config.max_placement_attempts) + " attempts");
      }
    }
  }

  const double area = (spec.x_max - spec.x_min) * (spec.y_max - spec.y_min);
  const auto n_clutter = static_cast<std::size_t>(std::llround(config.clutter_density * area));
  std::vector<Point> clutter(n_clutter);
  for (Point& p : clutter) {
    p.x = static_cast<float>(rng.uniform(spec.x_min, spec.x_max));
    p.y = static_cast<float>(rng.uniform(spec.y_min, spec.y_max));
    p.z = static_cast<float>(rng.uniform(config.ground_z - 0.2, config.ground_z + 2.5));
  }

  const double sigma = config.noise_sigma;
  auto keep = [&]() { return !rng.bernoulli(config.sparsity_factor); };
  out.sequence.points.frames.resize(static_cast<std::size_t>(n_in));
  out.owners.resize(static_cast<std::size_t>(n_in));
  for (int f = 0; f < n_in; ++f) {
    auto& pts = out.sequence.points.frames[f];
    auto& own = out.owners[f];
    for (const ObjectTrack& track : out.tracks) {
      const auto n_pts = static_cast<int>(
          std::max(1.0, std::round(config.point_density * track.length * track.width)));
      if (config.point_density <= 0.0) {
        continue;
      }
      const Pose2& pose = track.poses[f];
      const double c = std::cos(pose.heading);
      const double s = std::sin(pose.heading);
      for (int n = 0; n < n_pts; ++n) {
        const auto uv = outline_point(rng, track.length, track.width);
        const double z = rng.uniform(config.ground_z, config.ground_z + track.height);
        Point p;
        p.x = static_cast<float>(pose.x + c * uv[0] - s * uv[1] + rng.normal(0.0, sigma));
        p.y = static_cast<float>(pose.y + s * uv[0] + c * uv[1] + rng.normal(0.0, sigma));
        p.z = static_cast<float>(z + rng.normal(0.0, sigma));
        if (keep()) {
          pts.push_back(p);
          own.push_back(track.instance_id);
        }
      }
    }
    for (const Point& base : clutter) {
      Point p{static_cast<float>(base.x + rng.normal(0.0, sigma)),
              static_cast<float>(base.y + rng.normal(0.0, sigma)),
              static_cast<float>(base.z + rng.normal(0.0, sigma))};
      if (keep()) {
        pts.push_back(p);
        own.push_back(0);
      }
    }
  }

  std::vector<LabeledObject> objects;
  objects.reserve(out.tracks.size());
  for (const ObjectTrack& track : out.tracks) {
    LabeledObject obj;
    obj.instance_id = track.instance_id;
    obj.category = track.category;
    obj.current = track.poses[static_cast<std::size_t>(n_in - 1)];
    obj.future.assign(track.poses.begin() + n_in, track.poses.end());
    objects.push_back(std::move(obj));
  }
  GroundTruthFrame gt{out.sequence.points.frames.back(), out.owners.back(), objects};
  out.sequence.labels = rasterize_labels(gt, spec);
  return out;
}

Dataset generate_split(const SceneConfig& config, int n, std::uint64_t split_id,
                       std::optional<Category> masked) {
  if (n < 0) {
    throw ConfigError("sequence count must be >= 0");
  }
  SceneConfig cfg = config;
  if (masked) {
    cfg.class_config(*masked).count = 0;
  }
  Dataset ds;
  ds.spec = config.grid;
  ds.sequences.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cfg.rng_seed = derive_seed(config.rng_seed, (split_id << 32) | static_cast<std::uint64_t>(i));
    ds.sequences.push_back(generate_sequence(cfg).sequence);
  }
  return ds;
}

BenchmarkPaths make_benchmark(const SceneConfig& config, int n_train, int n_val, int n_test,
                              std::optional<Category> mask_category,
                              const std::filesystem::path& out_dir) {
  if (n_train <= 0 || n_val <= 0 || n_test <= 0) {
    throw ConfigError("benchmark split sizes must be > 0");
  }
  if (mask_category && *mask_category == Category::kBackground) {
    throw ConfigError("the background category cannot be masked");
  }
  std::filesystem::create_directories(out_dir);
  BenchmarkPaths paths{out_dir / "train.pmds", out_dir / "val.pmds", out_dir / "test.pmds"};
  write_dataset(paths.train, generate_split(config, n_train, 0, mask_category));
  write_dataset(paths.val, generate_split(config, n_val, 1));
  write_dataset(paths.test, generate_split(config, n_test, 2));
  return paths;
}

}  // namespace bevmotion::sim
