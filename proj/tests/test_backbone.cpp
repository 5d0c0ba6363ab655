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

#include <torch/torch.h>

#include "bevmotion/backbone.hpp"
#include "bevmotion/errors.hpp"
#include "bevmotion/tensors.hpp"

namespace bevmotion {
namespace {

class BackboneTest : public ::testing::Test {
 protected:
  void SetUp() override {
    torch::manual_seed(3);
    torch::set_num_threads(1);
  }
};

TEST_F(BackboneTest, ZeroInputIsFiniteAndShaped) {
  auto net = backbone_registry("stpn_toy")(BackboneOptions{});
  net->eval();
  auto out = net->forward(torch::zeros({2, 5, 13, 32, 32}));
  EXPECT_EQ(out.sizes(), (std::vector<int64_t>{2, 32, 32, 32}));
  EXPECT_TRUE(torch::isfinite(out).all().item<bool>());
}

TEST_F(BackboneTest, DefaultGridFeatureShape) {
  GridSpec g;
  auto net = backbone_registry("stpn_toy")(BackboneOptions{});
  net->eval();
  std::vector<OccupancyGrid> grids(5, OccupancyGrid(g.height(), g.width(), g.depth()));
  grids[4].cells[grids[4].index(100, 50, 3)] = 1;
  auto fm = extract_features(*net, grids);
  EXPECT_EQ(fm.values.sizes(), (std::vector<int64_t>{256, 256, 32}));
  EXPECT_EQ(fm.backbone_id, "stpn_toy");
  // Pure function of (parameters, input).
  auto again = extract_features(*net, grids);
  EXPECT_TRUE(torch::equal(fm.values, again.values));
  EXPECT_EQ(fm.input_hash, again.input_hash);
}

TEST_F(BackboneTest, Registry) {
  EXPECT_NO_THROW(backbone_registry("stpn_toy"));
  auto probe = backbone_registry("identity_probe")(BackboneOptions{});
  EXPECT_EQ(probe->forward(torch::zeros({1, 5, 13, 8, 8})).size(1), 32);
  EXPECT_THROW(backbone_registry("resnet_xl"), ConfigError);
  EXPECT_EQ(registered_backbones().size(), 2u);
}

TEST_F(BackboneTest, ParameterBudget) {
  auto net = backbone_registry("stpn_toy")(BackboneOptions{});
  EXPECT_LE(parameter_count(*net), 2'000'000);
  EXPECT_GT(parameter_count(*net), 0);
}

// Location of the strongest change in feature response caused by one
// occupied cell.
std::pair<int64_t, int64_t> response_peak(BackboneImpl& net, int i, int j) {
  auto base = torch::zeros({1, 5, 13, 64, 64});
  auto ref = net.forward(base);
  auto x = base.clone();
  x.index_put_({0, torch::indexing::Slice(), 4, i, j}, 1.0);
  auto diff = (net.forward(x) - ref).norm(2, 1)[0];
  const auto flat = diff.argmax().item<int64_t>();
  return {flat / 64, flat % 64};
}

TEST_F(BackboneTest, TranslationProbe) {
  auto net = backbone_registry("stpn_toy")(BackboneOptions{});
  net->eval();
  torch::NoGradGuard ng;
  auto [a_i, a_j] = response_peak(*net, 28, 30);
  auto [b_i, b_j] = response_peak(*net, 32, 30);
  EXPECT_LE(std::abs((b_i - a_i) - 4), 1);
  EXPECT_LE(std::abs(b_j - a_j), 1);
}

}  // namespace
}  // namespace bevmotion
