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
#include <random>

#include "bevmotion/errors.hpp"
#include "bevmotion/metrics.hpp"
#include "oracles.hpp"

namespace bevmotion::metrics {
namespace {

GridSpec tiny_grid(double half, double res) {
  GridSpec g;
  g.x_min = g.y_min = -half;
  g.x_max = g.y_max = half;
  g.xy_resolution = res;
  return g;
}

Prediction zeros_like(const SceneLabels& l) {
  Prediction p;
  p.steps = l.steps;
  p.height = l.height;
  p.width = l.width;
  p.motion.assign(l.motion.size(), 0.0f);
  p.class_logits.assign(l.cells() * kNumCategories, 0.0f);
  p.state_logits.assign(l.cells(), 0.0f);
  return p;
}

TEST(GroupErrors, PerfectPredictionIsZero) {
  std::mt19937_64 rng(1);
  auto [l, p] = oracle::random_instance(tiny_grid(4, 0.5), rng);
  p.motion = l.motion;
  for (const auto& g : group_errors(p, l, 1.0)) {
    ASSERT_TRUE(g.has_value());
    EXPECT_EQ(g->mean, 0.0);
    EXPECT_EQ(g->median, 0.0);
  }
}

TEST(GroupErrors, ThreeFourFive) {
  SceneLabels l(5, 2, 2);
  l.valid[0] = 1;
  Prediction p = zeros_like(l);
  p.motion[l.motion_index(4, 0)] = 0.3f;
  p.motion[l.motion_index(4, 0) + 1] = 0.4f;
  auto g = group_errors(p, l, 1.0);
  ASSERT_TRUE(g[0].has_value());
  EXPECT_NEAR(g[0]->mean, 0.5, 1e-7);
  EXPECT_FALSE(g[1].has_value());
  EXPECT_FALSE(g[2].has_value());
}

TEST(GroupErrors, SpeedThresholdsAreUpperInclusive) {
  EXPECT_EQ(speed_group(0.2), SpeedGroup::kStatic);
  EXPECT_EQ(speed_group(0.2000001), SpeedGroup::kSlow);
  EXPECT_EQ(speed_group(5.0), SpeedGroup::kSlow);
  EXPECT_EQ(speed_group(5.0000001), SpeedGroup::kFast);
}

TEST(GroupErrors, MatchesOracle) {
  std::mt19937_64 rng(2);
  const GridSpec g = tiny_grid(5, 0.5);  // 20 x 20 = 400 cells
  for (int rep = 0; rep < 10; ++rep) {
    auto [l, p] = oracle::random_instance(g, rng);
    auto got = group_errors(p, l, g.horizon_seconds());
    auto want = oracle::group_errors(p, l, g.horizon_seconds());
    for (int k = 0; k < 3; ++k) {
      ASSERT_EQ(got[k].has_value(), want[k].has_value());
      if (got[k]) {
        EXPECT_EQ(got[k]->count, want[k]->count);
        EXPECT_NEAR(got[k]->mean, want[k]->mean, 1e-9);
        EXPECT_NEAR(got[k]->median, want[k]->median, 1e-9);
      }
    }
  }
}

TEST(Classification, PerfectAndHandArithmetic) {
  SceneLabels l(1, 10, 10);
  Prediction p = zeros_like(l);
  for (std::size_t c = 0; c < 100; ++c) {
    l.valid[c] = 1;
    l.category[c] = c < 90 ? 1 : 2;
    p.class_logits[c * 5 + l.category[c]] = 5.0f;
  }
  auto s = classification_scores(p, l);
  EXPECT_DOUBLE_EQ(s.overall_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_category_accuracy, 1.0);
  // Half of the 10 class-2 cells go wrong.
  for (std::size_t c = 90; c < 95; ++c) {
    p.class_logits[c * 5 + 2] = 0.0f;
    p.class_logits[c * 5 + 1] = 5.0f;
  }
  s = classification_scores(p, l);
  EXPECT_NEAR(s.overall_accuracy, 0.95, 1e-12);
  EXPECT_NEAR(s.mean_category_accuracy, 0.75, 1e-12);
  EXPECT_FALSE(s.per_class[3].has_value());
}

TEST(GeneralizationIndex, PublishedPairs) {
  EXPECT_NEAR(generalization_index(0.2579, 0.3159), 81.6, 0.1);
  EXPECT_NEAR(generalization_index(0.1969, 0.2278), 86.4, 0.1);
  EXPECT_DOUBLE_EQ(generalization_index(0.4, 0.4), 100.0);
}

TEST(Stability, HandCases) {
  SceneLabels l(1, 1, 3);
  Prediction p = zeros_like(l);
  l.valid = {1, 1, 1};
  l.instance_id = {1, 1, 2};
  p.motion = {1.0f, 0.0f, 0.0f, 1.0f, 7.0f, 7.0f};
  auto v = instance_variances(p, l);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
  EXPECT_DOUBLE_EQ(*stability(p, l), 0.25);
  p.motion = {2.0f, 3.0f, 2.0f, 3.0f, 2.0f, 3.0f};
  EXPECT_DOUBLE_EQ(*stability(p, l), 0.0);
}

TEST(DistanceBuckets, BoundaryIsLowerInclusive) {
  EXPECT_EQ(distance_bucket(std::hypot(6.0, 8.0)), 1);
  EXPECT_EQ(distance_bucket(9.999), 0);
  EXPECT_EQ(distance_bucket(20.0), 2);
}

TEST(DistanceBuckets, NearCellsOnlyAndPartition) {
  std::mt19937_64 rng(4);
  const GridSpec g = tiny_grid(6, 0.5);
  auto [l, p] = oracle::random_instance(g, rng);
  // Corner cells are ~8.2 m out; everything stays in the first bucket.
  auto b = distance_buckets(p, l, g);
  for (int k = 0; k < 3; ++k) {
    EXPECT_FALSE(b[1][k].has_value());
    EXPECT_FALSE(b[2][k].has_value());
  }
  const GridSpec big = tiny_grid(16, 1.0);
  auto [l2, p2] = oracle::random_instance(big, rng);
  auto b2 = distance_buckets(p2, l2, big);
  auto all = group_errors(p2, l2, big.horizon_seconds());
  for (int k = 0; k < 3; ++k) {
    std::size_t n = 0;
    for (int bk = 0; bk < 3; ++bk) {
      n += b2[bk][k] ? b2[bk][k]->count : 0;
    }
    EXPECT_EQ(n, all[k] ? all[k]->count : 0);
  }
}

TEST(MetricOracles, RandomInstances) {
  std::mt19937_64 rng(5);
  const GridSpec g = tiny_grid(11, 1.0);  // 22 x 22 = 484 cells
  for (int rep = 0; rep < 20; ++rep) {
    auto [l, p] = oracle::random_instance(g, rng);
    auto s = classification_scores(p, l);
    auto so = oracle::classification(p, l);
    EXPECT_EQ(s.cells, so.cells);
    EXPECT_NEAR(s.overall_accuracy, so.oa, 1e-12);
    EXPECT_NEAR(s.mean_category_accuracy, so.mca, 1e-12);
    EXPECT_NEAR(*stability(p, l), *oracle::stability(p, l), 1e-9);
    auto b = distance_buckets(p, l, g);
    auto bo = oracle::buckets(p, l, g);
    for (int bk = 0; bk < 3; ++bk) {
      for (int k = 0; k < 3; ++k) {
        ASSERT_EQ(b[bk][k].has_value(), bo[bk][k].has_value());
        if (b[bk][k]) {
          EXPECT_EQ(b[bk][k]->count, bo[bk][k]->count);
          EXPECT_NEAR(b[bk][k]->mean, bo[bk][k]->mean, 1e-9);
        }
      }
    }
  }
}

TEST(MetricReport, JsonKeysAndAbsentGroups) {
  SceneLabels l(5, 2, 2);
  l.valid[0] = 1;
  MetricAccumulator acc(tiny_grid(0.5, 0.5), Category::kCar);
  acc.add(zeros_like(l), l);
  auto j = acc.finish().to_json();
  EXPECT_TRUE(j.contains("static.mean"));
  EXPECT_FALSE(j.contains("fast.mean"));
  EXPECT_EQ(j["masked.category"], "car");
  EXPECT_FALSE(j.contains("masked.static.mean"));
}

TEST(MetricReport, ShapeMismatchIsContractError) {
  SceneLabels l(5, 2, 2);
  Prediction p = zeros_like(l);
  p.motion.pop_back();
  EXPECT_THROW(group_errors(p, l, 1.0), ContractError);
}

}  // namespace
}  // namespace bevmotion::metrics
