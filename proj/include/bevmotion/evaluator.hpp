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
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "bevmotion/dataset.hpp"
#include "bevmotion/dspg.hpp"
#include "bevmotion/metrics.hpp"
#include "bevmotion/model.hpp"

namespace bevmotion {

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  virtual Prediction predict(const Sequence& seq, const GridSpec& spec) = 0;
};

/// Runs the network one sequence at a time. Deterministic mode uses the
/// latent mean; sample mode draws from a generator seeded per sequence.
class ModelPredictor : public Predictor {
 public:
  ModelPredictor(MotionModel model, LatentMode mode = LatentMode::kDeterministic,
                 std::uint64_t seed = 0);
  std::string name() const override { return "model"; }
  Prediction predict(const Sequence& seq, const GridSpec& spec) override;

 private:
  MotionModel model_;
  LatentMode mode_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
};

/// Zero motion, uniform class and state logits.
class StaticPredictor : public Predictor {
 public:
  std::string name() const override { return "static"; }
  Prediction predict(const Sequence& seq, const GridSpec& spec) override;
};

/// Rule baseline: clusters the occupied BEV cells of every input frame,
/// associates each current-frame cluster backwards by nearest centroid, fits
/// a minimum-area rectangle per frame and extrapolates the rectangle-center
/// velocity. Cells of unassociated clusters stay at zero motion.
class ConstantVelocityPredictor : public Predictor {
 public:
  /// Largest speed (m/s) accepted when chaining clusters between frames.
  explicit ConstantVelocityPredictor(double max_speed = 20.0) : max_speed_(max_speed) {}
  std::string name() const override { return "constant_velocity"; }
  Prediction predict(const Sequence& seq, const GridSpec& spec) override;

 private:
  double max_speed_;
};

std::unique_ptr<Predictor> make_baseline(const std::string& name);

PredictionSet predict_dataset(Predictor& predictor, const Dataset& data);

metrics::MetricReport evaluate(Predictor& predictor, const Dataset& data,
                               std::optional<Category> masked = std::nullopt);
metrics::MetricReport evaluate_predictions(const PredictionSet& preds, const Dataset& data,
                                           std::optional<Category> masked = std::nullopt);

/// Fills `full.generalization_index` from the masked-category fast errors of
/// the full-data and mask-trained evaluations.
void attach_generalization(metrics::MetricReport& full, const metrics::MetricReport& masked);

/// Minimum-area enclosing rectangle of a 2D point set.
struct Rectangle {
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;
};
std::optional<Rectangle> min_area_rectangle(std::span<const std::array<double, 2>> points);

}  // namespace bevmotion
