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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevmotion/dataset.hpp"
#include "bevmotion/grid_core.hpp"

namespace bevmotion::metrics {

/// static: speed <= 0.2 m/s, slow: speed <= 5 m/s, fast: speed > 5 m/s.
enum class SpeedGroup : std::uint8_t { kStatic = 0, kSlow = 1, kFast = 2 };
inline constexpr int kNumGroups = 3;
const char* group_name(SpeedGroup g);

SpeedGroup speed_group(double speed_mps);

/// Ground-truth speed of a cell: final-step displacement over the horizon.
double cell_speed(const SceneLabels& labels, std::size_t cell, double horizon_seconds);

/// Distance buckets [0,10), [10,20), [20,inf) meters from the grid origin.
inline constexpr int kNumBuckets = 3;
const char* bucket_name(int bucket);
int distance_bucket(double meters);

struct GroupStat {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

/// Empty groups stay nullopt; they are never reported as zero error.
using GroupErrors = std::array<std::optional<GroupStat>, kNumGroups>;

/// Collects per-cell errors and reduces them in insertion order.
class ErrorAccumulator {
 public:
  void add(SpeedGroup g, double error) { errors_[static_cast<int>(g)].push_back(error); }
  GroupErrors finish() const;

 private:
  std::array<std::vector<double>, kNumGroups> errors_;
};

/// Optional restriction to cells of one ground-truth category.
struct CellFilter {
  std::optional<Category> category;
  bool accepts(const SceneLabels& labels, std::size_t cell) const;
};

/// Final-step L2 displacement error of every valid cell, grouped by
/// ground-truth speed.
GroupErrors group_errors(const Prediction& pred, const SceneLabels& labels,
                         double horizon_seconds, CellFilter filter = {});
void accumulate_group_errors(ErrorAccumulator& acc, const Prediction& pred,
                             const SceneLabels& labels, double horizon_seconds,
                             CellFilter filter = {});

struct ClassCounts {
  std::array<std::size_t, kNumCategories> correct{};
  std::array<std::size_t, kNumCategories> total{};
};

struct ClassificationScores {
  double overall_accuracy = 0.0;
  double mean_category_accuracy = 0.0;
  /// Recall per class; nullopt when the class has no valid cells.
  std::array<std::optional<double>, kNumCategories> per_class{};
  std::size_t cells = 0;
};

void accumulate_classification(ClassCounts& counts, const Prediction& pred,
                               const SceneLabels& labels);
ClassificationScores finish_classification(const ClassCounts& counts);
/// OA = correct / valid cells; MCA = unweighted mean recall over present classes.
ClassificationScores classification_scores(const Prediction& pred, const SceneLabels& labels);

/// Generalization index in percent: fast-group mean error of the model trained
/// on all categories divided by that of the mask-trained model, both measured
/// on cells of the masked category.
double generalization_index(double full_fast_error, double masked_fast_error);
std::optional<double> generalization_index(const GroupErrors& full, const GroupErrors& masked);

/// Variance of the predicted final-step displacement vectors over each
/// instance's valid cells, one value per instance with at least one cell.
std::vector<double> instance_variances(const Prediction& pred, const SceneLabels& labels,
                                       CellFilter filter = {});
/// Unweighted mean of instance_variances; nullopt without instances.
std::optional<double> stability(const Prediction& pred, const SceneLabels& labels,
                                CellFilter filter = {});

using BucketErrors = std::array<GroupErrors, kNumBuckets>;

void accumulate_distance_buckets(std::array<ErrorAccumulator, kNumBuckets>& acc,
                                 const Prediction& pred, const SceneLabels& labels,
                                 const GridSpec& spec);
BucketErrors distance_buckets(const Prediction& pred, const SceneLabels& labels,
                              const GridSpec& spec);

struct MetricReport {
  GroupErrors groups{};
  std::vector<double> per_step_mean_error;
  ClassificationScores classification;
  std::optional<double> stability_all;
  std::optional<double> stability_masked;
  std::optional<Category> masked_category;
  GroupErrors masked_groups{};
  std::optional<double> generalization_index;
  BucketErrors buckets{};
  std::size_t sequences = 0;

  /// Keys follow the published table rows: "static.mean", "fast.median",
  /// "OA", "MCA", "class.car", "stability", "GI", "bucket.20m+.fast.mean", ...
  nlohmann::json to_json() const;
  /// Flat "key,value" rows used by the plot command.
  std::string to_csv() const;
};

/// Streaming evaluation over many sequences with a fixed reduction order.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(GridSpec spec, std::optional<Category> masked = std::nullopt);

  void add(const Prediction& pred, const SceneLabels& labels);
  MetricReport finish() const;

 private:
  GridSpec spec_;
  std::optional<Category> masked_;
  ErrorAccumulator groups_;
  ErrorAccumulator masked_groups_;
  std::array<ErrorAccumulator, kNumBuckets> buckets_;
  std::vector<double> step_error_sum_;
  std::size_t step_cells_ = 0;
  ClassCounts classes_;
  std::vector<double> variances_all_;
  std::vector<double> variances_masked_;
  std::size_t sequences_ = 0;
};

}  // namespace bevmotion::metrics
