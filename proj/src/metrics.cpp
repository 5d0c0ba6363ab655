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

#include "bevmotion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bevmotion/errors.hpp"

namespace bevmotion::metrics {

namespace {

void check_shapes(const Prediction& pred, const SceneLabels& labels) {
  if (pred.steps != labels.steps || pred.height != labels.height || pred.width != labels.width ||
      pred.motion.size() != labels.motion.size()) {
    throw ContractError("prediction and labels differ in shape");
  }
}

std::array<float, 2> predicted_final(const Prediction& pred, std::size_t cell) {
  const std::size_t m = (static_cast<std::size_t>(pred.steps - 1) * pred.height * pred.width +
                         cell) * 2;
  return {pred.motion[m], pred.motion[m + 1]};
}

double final_error(const Prediction& pred, const SceneLabels& labels, std::size_t cell) {
  const auto p = predicted_final(pred, cell);
  const auto g = labels.final_motion(cell);
  return std::hypot(static_cast<double>(p[0]) - g[0], static_cast<double>(p[1]) - g[1]);
}

double variance_of(const std::vector<std::array<double, 2>>& d) {
  double mx = 0.0;
  double my = 0.0;
  for (const auto& v : d) {
    mx += v[0];
    my += v[1];
  }
  mx /= static_cast<double>(d.size());
  my /= static_cast<double>(d.size());
  double acc = 0.0;
  for (const auto& v : d) {
    acc += (v[0] - mx) * (v[0] - mx) + (v[1] - my) * (v[1] - my);
  }
  return acc / static_cast<double>(d.size());
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) {
    return std::nullopt;
  }
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

void put_groups(nlohmann::json& j, const std::string& prefix, const GroupErrors& g) {
  for (int n = 0; n < kNumGroups; ++n) {
    const std::string name = prefix + group_name(static_cast<SpeedGroup>(n));
    if (g[n]) {
      j[name + ".mean"] = g[n]->mean;
      j[name + ".median"] = g[n]->median;
      j[name + ".count"] = g[n]->count;
    }
  }
}

}  // namespace

const char* group_name(SpeedGroup g) {
  switch (g) {
    case SpeedGroup::kStatic:
      return "static";
    case SpeedGroup::kSlow:
      return "slow";
    case SpeedGroup::kFast:
      return "fast";
  }
  return "?";
}

SpeedGroup speed_group(double speed_mps) {
  if (speed_mps <= kStaticSpeed) {
    return SpeedGroup::kStatic;
  }
  if (speed_mps <= kSlowSpeed) {
    return SpeedGroup::kSlow;
  }
  return SpeedGroup::kFast;
}

double cell_speed(const SceneLabels& labels, std::size_t cell, double horizon_seconds) {
  const auto g = labels.final_motion(cell);
  return std::hypot(static_cast<double>(g[0]), static_cast<double>(g[1])) / horizon_seconds;
}

const char* bucket_name(int bucket) {
  static constexpr const char* kNames[kNumBuckets] = {"0-10m", "10-20m", "20m+"};
  return kNames[bucket];
}

int distance_bucket(double meters) {
  if (meters < 10.0) {
    return 0;
  }
  if (meters < 20.0) {
    return 1;
  }
  return 2;
}

GroupErrors ErrorAccumulator::finish() const {
  GroupErrors out{};
  for (int g = 0; g < kNumGroups; ++g) {
    const auto& e = errors_[g];
    if (e.empty()) {
      continue;
    }
    GroupStat s;
    s.count = e.size();
    double sum = 0.0;
    for (double v : e) {
      sum += v;
    }
    s.mean = sum / static_cast<double>(e.size());
    std::vector<double> sorted = e;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    out[g] = s;
  }
  return out;
}

bool CellFilter::accepts(const SceneLabels& labels, std::size_t cell) const {
  return !category || labels.category[cell] == static_cast<std::uint8_t>(*category);
}

void accumulate_group_errors(ErrorAccumulator& acc, const Prediction& pred,
                             const SceneLabels& labels, double horizon_seconds,
                             CellFilter filter) {
  check_shapes(pred, labels);
  for (std::size_t c = 0; c < labels.cells(); ++c) {
    if (!labels.valid[c] || !filter.accepts(labels, c)) {
      continue;
    }
    acc.add(speed_group(cell_speed(labels, c, horizon_seconds)), final_error(pred, labels, c));
  }
}

GroupErrors group_errors(const Prediction& pred, const SceneLabels& labels,
                         double horizon_seconds, CellFilter filter) {
  ErrorAccumulator acc;
  accumulate_group_errors(acc, pred, labels, horizon_seconds, filter);
  return acc.finish();
}

void accumulate_classification(ClassCounts& counts, const Prediction& pred,
                               const SceneLabels& labels) {
  if (pred.class_logits.size() != labels.cells() * kNumCategories) {
    throw ContractError("class logits do not match the label grid");
  }
  for (std::size_t c = 0; c < labels.cells(); ++c) {
    if (!labels.valid[c]) {
      continue;
    }
    const float* row = pred.class_logits.data() + c * kNumCategories;
    const auto best = static_cast<std::size_t>(std::max_element(row, row + kNumCategories) - row);
    const std::size_t truth = labels.category[c];
    ++counts.total[truth];
    if (best == truth) {
      ++counts.correct[truth];
    }
  }
}

ClassificationScores finish_classification(const ClassCounts& counts) {
  ClassificationScores s;
  std::size_t correct = 0;
  double recall_sum = 0.0;
  int present = 0;
  for (int k = 0; k < kNumCategories; ++k) {
    correct += counts.correct[k];
    s.cells += counts.total[k];
    if (counts.total[k] > 0) {
      const double r =
          static_cast<double>(counts.correct[k]) / static_cast<double>(counts.total[k]);
      s.per_class[k] = r;
      recall_sum += r;
      ++present;
    }
  }
  if (s.cells > 0) {
    s.overall_accuracy = static_cast<double>(correct) / static_cast<double>(s.cells);
    s.mean_category_accuracy = recall_sum / present;
  }
  return s;
}

ClassificationScores classification_scores(const Prediction& pred, const SceneLabels& labels) {
  ClassCounts counts;
  accumulate_classification(counts, pred, labels);
  return finish_classification(counts);
}

double generalization_index(double full_fast_error, double masked_fast_error) {
  if (!(masked_fast_error > 0.0)) {
    if (full_fast_error == masked_fast_error) {
      return 100.0;
    }
    throw ContractError("generalization_index: mask-trained error must be positive");
  }
  return 100.0 * full_fast_error / masked_fast_error;
}

std::optional<double> generalization_index(const GroupErrors& full, const GroupErrors& masked) {
  const auto& f = full[static_cast<int>(SpeedGroup::kFast)];
  const auto& m = masked[static_cast<int>(SpeedGroup::kFast)];
  if (!f || !m) {
    return std::nullopt;
  }
  return generalization_index(f->mean, m->mean);
}

std::vector<double> instance_variances(const Prediction& pred, const SceneLabels& labels,
                                       CellFilter filter) {
  check_shapes(pred, labels);
  std::map<std::int32_t, std::vector<std::array<double, 2>>> per_instance;
  for (std::size_t c = 0; c < labels.cells(); ++c) {
    const std::int32_t id = labels.instance_id[c];
    if (id <= 0 || !labels.valid[c] || !filter.accepts(labels, c)) {
      continue;
    }
    const auto p = predicted_final(pred, c);
    per_instance[id].push_back({p[0], p[1]});
  }
  std::vector<double> out;
  out.reserve(per_instance.size());
  for (const auto& [id, d] : per_instance) {
    out.push_back(variance_of(d));
  }
  return out;
}

std::optional<double> stability(const Prediction& pred, const SceneLabels& labels,
                                CellFilter filter) {
  return mean_of(instance_variances(pred, labels, filter));
}

void accumulate_distance_buckets(std::array<ErrorAccumulator, kNumBuckets>& acc,
                                 const Prediction& pred, const SceneLabels& labels,
                                 const GridSpec& spec) {
  check_shapes(pred, labels);
  for (int i = 0; i < labels.height; ++i) {
    for (int j = 0; j < labels.width; ++j) {
      const std::size_t c = labels.cell(i, j);
      if (!labels.valid[c]) {
        continue;
      }
      const double d = std::hypot(spec.cell_center_x(i), spec.cell_center_y(j));
      acc[distance_bucket(d)].add(speed_group(cell_speed(labels, c, spec.horizon_seconds())),
                                  final_error(pred, labels, c));
    }
  }
}

BucketErrors distance_buckets(const Prediction& pred, const SceneLabels& labels,
                              const GridSpec& spec) {
  std::array<ErrorAccumulator, kNumBuckets> acc;
  accumulate_distance_buckets(acc, pred, labels, spec);
  BucketErrors out;
  for (int b = 0; b < kNumBuckets; ++b) {
    out[b] = acc[b].finish();
  }
  return out;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  j["sequences"] = sequences;
  put_groups(j, "", groups);
  j["per_step.mean"] = per_step_mean_error;
  j["OA"] = classification.overall_accuracy;
  j["MCA"] = classification.mean_category_accuracy;
  for (int k = 0; k < kNumCategories; ++k) {
    if (classification.per_class[k]) {
      j[std::string("class.") + std::string(category_name(static_cast<Category>(k)))] =
          *classification.per_class[k];
    }
  }
  if (stability_all) {
    j["stability"] = *stability_all;
  }
  if (masked_category) {
    j["masked.category"] = std::string(category_name(*masked_category));
    put_groups(j, "masked.", masked_groups);
    if (stability_masked) {
      j["masked.stability"] = *stability_masked;
    }
  }
  if (generalization_index) {
    j["GI"] = *generalization_index;
  }
  for (int b = 0; b < kNumBuckets; ++b) {
    put_groups(j, std::string("bucket.") + bucket_name(b) + ".", buckets[b]);
  }
  return j;
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "key,value\n";
  const nlohmann::json j = to_json();
  for (const auto& [k, v] : j.items()) {
    if (v.is_number()) {
      os << k << "," << v.get<double>() << "\n";
    } else if (v.is_array()) {
      for (std::size_t n = 0; n < v.size(); ++n) {
        os << k << "[" << n << "]," << v[n].get<double>() << "\n";
      }
    }
  }
  return os.str();
}

MetricAccumulator::MetricAccumulator(GridSpec spec, std::optional<Category> masked)
    : spec_(spec), masked_(masked), step_error_sum_(static_cast<std::size_t>(spec.output_steps)) {}

void MetricAccumulator::add(const Prediction& pred, const SceneLabels& labels) {
  check_shapes(pred, labels);
  const double horizon = spec_.horizon_seconds();
  accumulate_group_errors(groups_, pred, labels, horizon);
  if (masked_) {
    accumulate_group_errors(masked_groups_, pred, labels, horizon, CellFilter{masked_});
  }
  accumulate_distance_buckets(buckets_, pred, labels, spec_);
  accumulate_classification(classes_, pred, labels);
  for (std::size_t c = 0; c < labels.cells(); ++c) {
    if (!labels.valid[c]) {
      continue;
    }
    ++step_cells_;
    for (int t = 0; t < labels.steps; ++t) {
      const std::size_t m = labels.motion_index(t, c);
      step_error_sum_[t] += std::hypot(static_cast<double>(pred.motion[m]) - labels.motion[m],
                                       static_cast<double>(pred.motion[m + 1]) -
                                           labels.motion[m + 1]);
    }
  }
  const auto all = instance_variances(pred, labels);
  variances_all_.insert(variances_all_.end(), all.begin(), all.end());
  if (masked_) {
    const auto mv = instance_variances(pred, labels, CellFilter{masked_});
    variances_masked_.insert(variances_masked_.end(), mv.begin(), mv.end());
  }
  ++sequences_;
}

MetricReport MetricAccumulator::finish() const {
  MetricReport r;
  r.sequences = sequences_;
  r.groups = groups_.finish();
  for (double s : step_error_sum_) {
    r.per_step_mean_error.push_back(step_cells_ > 0 ? s / static_cast<double>(step_cells_) : 0.0);
  }
  r.classification = finish_classification(classes_);
  r.stability_all = mean_of(variances_all_);
  if (masked_) {
    r.masked_category = masked_;
    r.masked_groups = masked_groups_.finish();
    r.stability_masked = mean_of(variances_masked_);
  }
  for (int b = 0; b < kNumBuckets; ++b) {
    r.buckets[b] = buckets_[b].finish();
  }
  return r;
}

}  // namespace bevmotion::metrics
