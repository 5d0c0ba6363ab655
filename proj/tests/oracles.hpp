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

// Brute-force reference implementations. Deliberately naive: straight loops,
// no shared helpers with the library beyond the plain data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "bevmotion/dataset.hpp"
#include "bevmotion/grid_core.hpp"

namespace oracle {

using bevmotion::GridSpec;
using bevmotion::Point;
using bevmotion::Prediction;
using bevmotion::SceneLabels;

// Occupied (i, j, k) triples of one frame.
inline std::vector<std::uint8_t> voxelize(const std::vector<Point>& pts, const GridSpec& g) {
  const int H = static_cast<int>(std::lround((g.x_max - g.x_min) / g.xy_resolution));
  const int W = static_cast<int>(std::lround((g.y_max - g.y_min) / g.xy_resolution));
  const int D = static_cast<int>(std::ceil((g.z_max - g.z_min) / g.z_resolution - 1e-9));
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(H) * W * D, 0);
  for (const Point& p : pts) {
    const double x = p.x;
    const double y = p.y;
    const double z = p.z;
    if (x < g.x_min || x >= g.x_max || y < g.y_min || y >= g.y_max || z < g.z_min ||
        z >= g.z_max) {
      continue;
    }
    const int i = static_cast<int>(std::floor((x - g.x_min) / g.xy_resolution));
    const int j = static_cast<int>(std::floor((y - g.y_min) / g.xy_resolution));
    const int k = static_cast<int>(std::floor((z - g.z_min) / g.z_resolution));
    if (i < 0 || i >= H || j < 0 || j >= W || k < 0 || k >= D) {
      continue;
    }
    occ[(static_cast<std::size_t>(i) * W + j) * D + k] = 1;
  }
  return occ;
}

struct Stat {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

inline std::optional<Stat> stat_of(std::vector<double> v) {
  if (v.empty()) {
    return std::nullopt;
  }
  Stat s;
  s.count = v.size();
  double sum = 0.0;
  for (double e : v) {
    sum += e;
  }
  s.mean = sum / v.size();
  std::sort(v.begin(), v.end());
  if (v.size() % 2 == 1) {
    s.median = v[v.size() / 2];
  } else {
    s.median = (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2.0;
  }
  return s;
}

inline int group_of(const SceneLabels& l, int i, int j, double horizon) {
  const std::size_t base = ((static_cast<std::size_t>(l.steps - 1) * l.height + i) * l.width + j) * 2;
  const double speed = std::sqrt(static_cast<double>(l.motion[base]) * l.motion[base] +
                                 static_cast<double>(l.motion[base + 1]) * l.motion[base + 1]) /
                       horizon;
  if (speed <= 0.2) {
    return 0;
  }
  if (speed <= 5.0) {
    return 1;
  }
  return 2;
}

inline double final_error(const Prediction& p, const SceneLabels& l, int i, int j) {
  const std::size_t base = ((static_cast<std::size_t>(l.steps - 1) * l.height + i) * l.width + j) * 2;
  const double dx = static_cast<double>(p.motion[base]) - l.motion[base];
  const double dy = static_cast<double>(p.motion[base + 1]) - l.motion[base + 1];
  return std::sqrt(dx * dx + dy * dy);
}

inline std::array<std::optional<Stat>, 3> group_errors(const Prediction& p, const SceneLabels& l,
                                                       double horizon) {
  std::array<std::vector<double>, 3> e;
  for (int i = 0; i < l.height; ++i) {
    for (int j = 0; j < l.width; ++j) {
      if (l.valid[static_cast<std::size_t>(i) * l.width + j]) {
        e[group_of(l, i, j, horizon)].push_back(final_error(p, l, i, j));
      }
    }
  }
  return {stat_of(e[0]), stat_of(e[1]), stat_of(e[2])};
}

struct Scores {
  std::size_t cells = 0;
  std::size_t correct = 0;
  double oa = 0.0;
  double mca = 0.0;
};

inline Scores classification(const Prediction& p, const SceneLabels& l) {
  std::array<std::size_t, 5> tot{};
  std::array<std::size_t, 5> hit{};
  Scores s;
  for (std::size_t c = 0; c < l.cells(); ++c) {
    if (!l.valid[c]) {
      continue;
    }
    int best = 0;
    for (int k = 1; k < 5; ++k) {
      if (p.class_logits[c * 5 + k] > p.class_logits[c * 5 + best]) {
        best = k;
      }
    }
    ++tot[l.category[c]];
    ++s.cells;
    if (best == l.category[c]) {
      ++hit[l.category[c]];
      ++s.correct;
    }
  }
  double sum = 0.0;
  int present = 0;
  for (int k = 0; k < 5; ++k) {
    if (tot[k] > 0) {
      sum += static_cast<double>(hit[k]) / tot[k];
      ++present;
    }
  }
  s.oa = s.cells ? static_cast<double>(s.correct) / s.cells : 0.0;
  s.mca = present ? sum / present : 0.0;
  return s;
}

inline std::optional<double> stability(const Prediction& p, const SceneLabels& l) {
  std::map<int, std::vector<std::array<double, 2>>> inst;
  const std::size_t off = static_cast<std::size_t>(l.steps - 1) * l.cells() * 2;
  for (std::size_t c = 0; c < l.cells(); ++c) {
    if (l.valid[c] && l.instance_id[c] > 0) {
      inst[l.instance_id[c]].push_back({p.motion[off + 2 * c], p.motion[off + 2 * c + 1]});
    }
  }
  if (inst.empty()) {
    return std::nullopt;
  }
  double total = 0.0;
  for (const auto& [id, d] : inst) {
    double mx = 0.0;
    double my = 0.0;
    for (const auto& v : d) {
      mx += v[0];
      my += v[1];
    }
    mx /= d.size();
    my /= d.size();
    double var = 0.0;
    for (const auto& v : d) {
      var += (v[0] - mx) * (v[0] - mx) + (v[1] - my) * (v[1] - my);
    }
    total += var / d.size();
  }
  return total / inst.size();
}

inline std::array<std::array<std::optional<Stat>, 3>, 3> buckets(const Prediction& p,
                                                                  const SceneLabels& l,
                                                                  const GridSpec& g) {
  std::array<std::array<std::vector<double>, 3>, 3> e;
  for (int i = 0; i < l.height; ++i) {
    for (int j = 0; j < l.width; ++j) {
      if (!l.valid[static_cast<std::size_t>(i) * l.width + j]) {
        continue;
      }
      const double x = g.x_min + (i + 0.5) * g.xy_resolution;
      const double y = g.y_min + (j + 0.5) * g.xy_resolution;
      const double d = std::sqrt(x * x + y * y);
      const int b = d < 10.0 ? 0 : (d < 20.0 ? 1 : 2);
      e[b][group_of(l, i, j, g.output_steps * g.frame_interval)].push_back(final_error(p, l, i, j));
    }
  }
  std::array<std::array<std::optional<Stat>, 3>, 3> out;
  for (int b = 0; b < 3; ++b) {
    for (int k = 0; k < 3; ++k) {
      out[b][k] = stat_of(e[b][k]);
    }
  }
  return out;
}

// Random labels/prediction pair on a grid of the given spec; speeds cover all
// three groups and land exactly on the thresholds now and then.
inline std::pair<SceneLabels, Prediction> random_instance(const GridSpec& g, std::mt19937_64& rng) {
  const int T = g.output_steps;
  const int H = static_cast<int>(std::lround((g.x_max - g.x_min) / g.xy_resolution));
  const int W = static_cast<int>(std::lround((g.y_max - g.y_min) / g.xy_resolution));
  SceneLabels l(T, H, W);
  Prediction p;
  p.steps = T;
  p.height = H;
  p.width = W;
  p.motion.assign(l.motion.size(), 0.0f);
  p.class_logits.assign(l.cells() * 5, 0.0f);
  p.state_logits.assign(l.cells(), 0.0f);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double horizon = T * g.frame_interval;
  for (std::size_t c = 0; c < l.cells(); ++c) {
    l.valid[c] = u(rng) < 0.5;
    if (!l.valid[c]) {
      continue;
    }
    l.category[c] = static_cast<std::uint8_t>(rng() % 5);
    l.instance_id[c] = l.category[c] == 0 ? 0 : static_cast<std::int32_t>(1 + rng() % 12);
    const double pick = u(rng);
    double speed = 0.0;
    if (pick < 0.2) {
      speed = 0.0;
    } else if (pick < 0.35) {
      speed = u(rng) * 0.2;
    } else if (pick < 0.65) {
      speed = 0.2 + u(rng) * 4.8;
    } else if (pick < 0.95) {
      speed = 5.0 + u(rng) * 7.0;
    } else {
      speed = u(rng) < 0.5 ? 0.2 : 5.0;
    }
    const double heading = u(rng) * 6.283185307179586;
    for (int t = 0; t < T; ++t) {
      const double frac = (t + 1.0) / T;
      const std::size_t m = (static_cast<std::size_t>(t) * l.cells() + c) * 2;
      l.motion[m] = static_cast<float>(speed * horizon * frac * std::cos(heading));
      l.motion[m + 1] = static_cast<float>(speed * horizon * frac * std::sin(heading));
      p.motion[m] = l.motion[m] + static_cast<float>(u(rng) - 0.5);
      p.motion[m + 1] = l.motion[m + 1] + static_cast<float>(u(rng) - 0.5);
    }
    l.state[c] = speed > 0.2;
    for (int k = 0; k < 5; ++k) {
      p.class_logits[c * 5 + k] = static_cast<float>(u(rng));
    }
    if (u(rng) < 0.6) {
      p.class_logits[c * 5 + l.category[c]] = 2.0f;
    }
  }
  return {l, p};
}

}  // namespace oracle
