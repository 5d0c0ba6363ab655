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

#include "bevmotion/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>

#include <ATen/CPUGeneratorImpl.h>

#include "bevmotion/errors.hpp"
#include "bevmotion/rng.hpp"
#include "bevmotion/tensors.hpp"

namespace bevmotion {

namespace {

Prediction empty_prediction(const GridSpec& spec) {
  Prediction p;
  p.steps = spec.output_steps;
  p.height = spec.height();
  p.width = spec.width();
  const auto cells = static_cast<std::size_t>(p.height) * p.width;
  p.motion.assign(cells * p.steps * 2, 0.0f);
  p.class_logits.assign(cells * kNumCategories, 0.0f);
  p.state_logits.assign(cells, 0.0f);
  return p;
}

using Vec2 = std::array<double, 2>;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) {
    return pts;
  }
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) {
      --k;
    }
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

struct Cluster {
  std::vector<std::size_t> cells;  // row-major BEV cell indices
  std::vector<Vec2> points;
  Vec2 centroid{0.0, 0.0};
  bool on_border = false;  // clipped by the grid edge
};

/// Single-linkage clusters of returns closer than `link` meters; outline
/// returns are sparse, so plain cell adjacency splits objects.
std::vector<Cluster> cluster_frame(const std::vector<Point>& frame, const GridSpec& spec,
                                   double link = 1.2) {
  const int H = spec.height();
  const int W = spec.width();
  std::vector<std::vector<std::size_t>> by_cell(static_cast<std::size_t>(H) * W);
  std::vector<std::size_t> cell_of_point(frame.size(), SIZE_MAX);
  for (std::size_t n = 0; n < frame.size(); ++n) {
    int i = 0;
    int j = 0;
    int k = 0;
    if (cell_of(frame[n], spec, i, j, k)) {
      cell_of_point[n] = static_cast<std::size_t>(i) * W + j;
      by_cell[cell_of_point[n]].push_back(n);
    }
  }
  std::vector<std::size_t> parent(frame.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const int reach = static_cast<int>(std::ceil(link / spec.xy_resolution));
  const double link2 = link * link;
  for (std::size_t n = 0; n < frame.size(); ++n) {
    if (cell_of_point[n] == SIZE_MAX) {
      continue;
    }
    const int ci = static_cast<int>(cell_of_point[n] / W);
    const int cj = static_cast<int>(cell_of_point[n] % W);
    for (int ni = std::max(0, ci - reach); ni <= std::min(H - 1, ci + reach); ++ni) {
      for (int nj = std::max(0, cj - reach); nj <= std::min(W - 1, cj + reach); ++nj) {
        for (std::size_t m : by_cell[static_cast<std::size_t>(ni) * W + nj]) {
          if (m <= n) {
            continue;
          }
          const double dx = frame[n].x - frame[m].x;
          const double dy = frame[n].y - frame[m].y;
          if (dx * dx + dy * dy <= link2) {
            parent[find(m)] = find(n);
          }
        }
      }
    }
  }
  // Clusters ordered by their first cell in row-major order.
  std::map<std::size_t, std::size_t> root_to_cluster;
  std::vector<Cluster> clusters;
  for (std::size_t c = 0; c < by_cell.size(); ++c) {
    for (std::size_t n : by_cell[c]) {
      const auto root = find(n);
      auto [it, fresh] = root_to_cluster.emplace(root, clusters.size());
      if (fresh) {
        clusters.emplace_back();
      }
      Cluster& cl = clusters[it->second];
      cl.points.push_back({frame[n].x, frame[n].y});
      if (cl.cells.empty() || cl.cells.back() != c) {
        cl.cells.push_back(c);
        const int ci = static_cast<int>(c / W);
        const int cj = static_cast<int>(c % W);
        cl.on_border = cl.on_border || ci == 0 || cj == 0 || ci == H - 1 || cj == W - 1;
      }
    }
  }
  for (auto& cl : clusters) {
    for (const auto& p : cl.points) {
      cl.centroid[0] += p[0];
      cl.centroid[1] += p[1];
    }
    cl.centroid[0] /= static_cast<double>(cl.points.size());
    cl.centroid[1] /= static_cast<double>(cl.points.size());
  }
  return clusters;
}

}  // namespace

std::optional<Rectangle> min_area_rectangle(std::span<const std::array<double, 2>> points) {
  if (points.empty()) {
    return std::nullopt;
  }
  const auto hull = convex_hull(std::vector<Vec2>(points.begin(), points.end()));
  if (hull.size() == 1) {
    return Rectangle{hull[0][0], hull[0][1], 0.0, 0.0, 0.0};
  }
  std::optional<Rectangle> best;
  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < hull.size(); ++e) {
    const Vec2& a = hull[e];
    const Vec2& b = hull[(e + 1) % hull.size()];
    const double theta = std::atan2(b[1] - a[1], b[0] - a[0]);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    double u0 = std::numeric_limits<double>::infinity();
    double u1 = -u0;
    double v0 = u0;
    double v1 = -u0;
    for (const auto& p : hull) {
      const double u = c * p[0] + s * p[1];
      const double v = -s * p[0] + c * p[1];
      u0 = std::min(u0, u);
      u1 = std::max(u1, u);
      v0 = std::min(v0, v);
      v1 = std::max(v1, v);
    }
    const double area = (u1 - u0) * (v1 - v0);
    if (area < best_area) {
      best_area = area;
      const double uc = 0.5 * (u0 + u1);
      const double vc = 0.5 * (v0 + v1);
      best = Rectangle{c * uc - s * vc, s * uc + c * vc, theta, u1 - u0, v1 - v0};
    }
  }
  return best;
}

ModelPredictor::ModelPredictor(MotionModel model, LatentMode mode, std::uint64_t seed)
    : model_(std::move(model)), mode_(mode), seed_(seed) {}

Prediction ModelPredictor::predict(const Sequence& seq, const GridSpec& spec) {
  torch::NoGradGuard no_grad;
  model_->eval();
  auto grids = voxelize_sequence(seq.points, spec).unsqueeze(0);
  std::optional<at::Generator> gen;
  if (mode_ == LatentMode::kSample) {
    gen = at::detail::createCPUGenerator(derive_seed(seed_, calls_));
  }
  ++calls_;
  auto out = model_->predict(grids, mode_, gen);
  return tensors_to_prediction(out.motion, out.class_logits, out.state_logits, 0);
}

Prediction StaticPredictor::predict(const Sequence&, const GridSpec& spec) {
  return empty_prediction(spec);
}

Prediction ConstantVelocityPredictor::predict(const Sequence& seq, const GridSpec& spec) {
  Prediction pred = empty_prediction(spec);
  const auto& frames = seq.points.frames;
  if (frames.empty()) {
    return pred;
  }
  std::vector<std::vector<Cluster>> clusters;
  clusters.reserve(frames.size());
  for (const auto& f : frames) {
    clusters.push_back(cluster_frame(f, spec));
  }
  const double gate = max_speed_ * spec.frame_interval + 1.0;
  const std::size_t cells = static_cast<std::size_t>(pred.height) * pred.width;
  for (const Cluster& now : clusters.back()) {
    const auto r_now = min_area_rectangle(now.points);
    const double area_now = std::max(r_now->length * r_now->width, 1e-6);
    const Cluster* earliest = &now;
    std::optional<Rectangle> r_then;
    int span = 0;
    for (int f = static_cast<int>(frames.size()) - 2; f >= 0; --f) {
      const Cluster* match = nullptr;
      double best = gate;
      for (const Cluster& cand : clusters[static_cast<std::size_t>(f)]) {
        const double d = std::hypot(cand.centroid[0] - earliest->centroid[0],
                                    cand.centroid[1] - earliest->centroid[1]);
        if (d < best) {
          best = d;
          match = &cand;
        }
      }
      // Clipped or merged clusters would bias the center estimate.
      if (match == nullptr || match->on_border) {
        break;
      }
      auto r = min_area_rectangle(match->points);
      const double ratio = std::max(r->length * r->width, 1e-6) / area_now;
      if (ratio > 1.5 || ratio < 1.0 / 1.5) {
        break;
      }
      earliest = match;
      r_then = r;
      ++span;
    }
    if (span == 0) {
      continue;
    }
    const double elapsed = span * spec.frame_interval;
    const double vx = (r_now->cx - r_then->cx) / elapsed;
    const double vy = (r_now->cy - r_then->cy) / elapsed;
    const bool moving = std::hypot(vx, vy) > kStaticSpeed;
    for (auto c : now.cells) {
      for (int tau = 0; tau < pred.steps; ++tau) {
        const double t = (tau + 1) * spec.frame_interval;
        const std::size_t m = (static_cast<std::size_t>(tau) * cells + c) * 2;
        pred.motion[m] = static_cast<float>(vx * t);
        pred.motion[m + 1] = static_cast<float>(vy * t);
      }
      pred.state_logits[c] = moving ? 4.0f : -4.0f;
    }
  }
  return pred;
}

std::unique_ptr<Predictor> make_baseline(const std::string& name) {
  if (name == "static") {
    return std::make_unique<StaticPredictor>();
  }
  if (name == "constant_velocity" || name == "cv") {
    return std::make_unique<ConstantVelocityPredictor>();
  }
  throw ConfigError("unknown baseline predictor \"" + name +
                    "\" (expected static or constant_velocity)");
}

PredictionSet predict_dataset(Predictor& predictor, const Dataset& data) {
  PredictionSet set;
  set.spec = data.spec;
  set.predictions.reserve(data.sequences.size());
  for (const auto& seq : data.sequences) {
    set.predictions.push_back(predictor.predict(seq, data.spec));
  }
  return set;
}

metrics::MetricReport evaluate(Predictor& predictor, const Dataset& data,
                               std::optional<Category> masked) {
  metrics::MetricAccumulator acc(data.spec, masked);
  for (const auto& seq : data.sequences) {
    acc.add(predictor.predict(seq, data.spec), seq.labels);
  }
  return acc.finish();
}

metrics::MetricReport evaluate_predictions(const PredictionSet& preds, const Dataset& data,
                                           std::optional<Category> masked) {
  if (preds.predictions.size() != data.sequences.size()) {
    throw DataError("prediction count " + std::to_string(preds.predictions.size()) +
                    " does not match dataset size " + std::to_string(data.sequences.size()));
  }
  if (!(preds.spec == data.spec)) {
    throw DataError("prediction grid does not match the dataset grid");
  }
  metrics::MetricAccumulator acc(data.spec, masked);
  for (std::size_t i = 0; i < preds.predictions.size(); ++i) {
    acc.add(preds.predictions[i], data.sequences[i].labels);
  }
  return acc.finish();
}

void attach_generalization(metrics::MetricReport& full, const metrics::MetricReport& masked) {
  if (full.masked_category != masked.masked_category || !full.masked_category) {
    throw ContractError("generalization needs both reports on the same masked category");
  }
  full.generalization_index = metrics::generalization_index(full.masked_groups,
                                                            masked.masked_groups);
}

}  // namespace bevmotion
