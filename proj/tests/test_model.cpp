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

#include "bevmotion/ablation.hpp"
#include "bevmotion/errors.hpp"
#include "bevmotion/model.hpp"
#include "bevmotion/trainer.hpp"
#include "fixtures.hpp"

namespace bevmotion {
namespace {

class ModelTest : public ::testing::Test {
 protected:
  void SetUp() override {
    torch::set_num_threads(1);
    torch::manual_seed(21);
    cfg = fixture::small_config();
    data = fixture::small_data(cfg, 4);
    tensors = std::make_unique<TensorDataset>(data, cfg.model.rvpe);
    const std::vector<std::size_t> idx{0, 1};
    batch = tensors->batch(idx, 3);
  }

  MotionModel build(ModuleSwitches sw) {
    auto opts = cfg.model;
    opts.switches = sw;
    MotionModel m(opts);
    m->eval();
    return m;
  }

  ExperimentConfig cfg;
  Dataset data;
  std::unique_ptr<TensorDataset> tensors;
  Batch batch;
};

TEST_F(ModelTest, AllOffHasNoLatentPath) {
  auto m = build(ModuleSwitches::all_off());
  auto out = m->forward(batch.grids, &batch.labels, ForwardOptions{});
  EXPECT_FALSE(out.posterior.has_value());
  EXPECT_FALSE(out.prior.has_value());
  EXPECT_FALSE(out.prior_outputs.has_value());
  auto loss = compute_loss(*m, batch, cfg, ForwardOptions{}, 1.0);
  EXPECT_EQ(loss.pattern, 0.0);
  ForwardOptions teacher;
  teacher.use_teacher = true;
  EXPECT_THROW(m->forward(batch.grids, &batch.labels, teacher), ContractError);
}

TEST_F(ModelTest, FullModelCarriesBothLatents) {
  auto m = build(ModuleSwitches::all_on());
  auto out = m->forward(batch.grids, &batch.labels, ForwardOptions{});
  ASSERT_TRUE(out.posterior.has_value());
  ASSERT_TRUE(out.prior.has_value());
  EXPECT_TRUE(out.prior_outputs.has_value());
  const auto& g = cfg.grid();
  EXPECT_EQ(out.motion.sizes(),
            (std::vector<int64_t>{2, g.output_steps, 2, g.height(), g.width()}));
  EXPECT_EQ(out.class_logits.sizes(),
            (std::vector<int64_t>{2, kNumCategories, g.height(), g.width()}));
  EXPECT_EQ(out.state_logits.sizes(), (std::vector<int64_t>{2, g.height(), g.width()}));
  auto loss = compute_loss(*m, batch, cfg, ForwardOptions{}, 1.0);
  EXPECT_GE(loss.pattern, 0.0);
  EXPECT_TRUE(std::isfinite(loss.total_value));
}

TEST_F(ModelTest, EveryAblationRowRuns) {
  for (const auto& row : ablation_rows()) {
    auto m = build(row.switches);
    m->train();
    ForwardOptions fwd;
    fwd.mode = row.switches.latent_modeling ? LatentMode::kSample : LatentMode::kDeterministic;
    auto loss = compute_loss(*m, batch, cfg, fwd, 1.0);
    EXPECT_TRUE(std::isfinite(loss.total_value)) << row.label;
    loss.total.backward();
    EXPECT_EQ(loss.pattern != 0.0, row.switches.pattern_extractor) << row.label;
    auto pred = m->predict(batch.grids);
    EXPECT_FALSE(pred.prior.has_value()) << row.label;
    EXPECT_TRUE(torch::isfinite(pred.motion).all().item<bool>()) << row.label;
  }
}

TEST_F(ModelTest, PredictionIgnoresLabels) {
  auto m = build(ModuleSwitches::all_on());
  torch::NoGradGuard ng;
  auto other = batch.labels;
  other.motion = torch::randn_like(other.motion) * 5.0;
  other.category = torch::randint_like(other.category, kNumCategories);
  other.state = 1.0 - other.state;
  auto a = m->forward(batch.grids, &batch.labels, ForwardOptions{});
  auto b = m->forward(batch.grids, &other, ForwardOptions{});
  auto p = m->predict(batch.grids);
  EXPECT_TRUE(torch::equal(a.motion, b.motion));
  EXPECT_TRUE(torch::equal(a.motion, p.motion));
  EXPECT_TRUE(torch::equal(a.class_logits, p.class_logits));
  EXPECT_FALSE(torch::equal(a.prior->mean, b.prior->mean));
}

TEST_F(ModelTest, PriorUnaffectedByDecoder) {
  auto m = build(ModuleSwitches::all_on());
  torch::NoGradGuard ng;
  auto before = m->forward(batch.grids, &batch.labels, ForwardOptions{});
  for (auto& p : m->fsd().parameters()) {
    p.add_(torch::randn_like(p));
  }
  for (auto& p : m->sgru().parameters()) {
    p.add_(torch::randn_like(p));
  }
  auto after = m->forward(batch.grids, &batch.labels, ForwardOptions{});
  EXPECT_TRUE(torch::equal(before.prior_outputs->prior_feature, after.prior_outputs->prior_feature));
  EXPECT_TRUE(torch::equal(before.prior->mean, after.prior->mean));
  EXPECT_FALSE(torch::equal(before.motion, after.motion));
}

TEST_F(ModelTest, TeacherPathDecodesPrior) {
  auto m = build(ModuleSwitches::all_on());
  torch::NoGradGuard ng;
  ForwardOptions teacher;
  teacher.use_teacher = true;
  auto a = m->forward(batch.grids, &batch.labels, ForwardOptions{});
  auto b = m->forward(batch.grids, &batch.labels, teacher);
  EXPECT_FALSE(torch::equal(a.motion, b.motion));
  EXPECT_TRUE(torch::equal(a.prior->mean, b.prior->mean));
}

TEST_F(ModelTest, DeterministicRepeatability) {
  auto m = build(ModuleSwitches::all_on());
  torch::NoGradGuard ng;
  auto a = m->predict(batch.grids);
  auto b = m->predict(batch.grids);
  EXPECT_TRUE(torch::equal(a.motion, b.motion));
  auto s1 = m->predict(batch.grids, LatentMode::kSample, at::detail::createCPUGenerator(4));
  auto s2 = m->predict(batch.grids, LatentMode::kSample, at::detail::createCPUGenerator(4));
  EXPECT_TRUE(torch::equal(s1.motion, s2.motion));
  EXPECT_FALSE(torch::equal(s1.motion, a.motion));
}

TEST_F(ModelTest, RolloutHookCausality) {
  auto m = build(ModuleSwitches::all_on());
  torch::NoGradGuard ng;
  auto reference = m->predict(batch.grids).motion;
  std::vector<torch::Tensor> saved;
  for (auto& p : m->fsd().parameters()) {
    saved.push_back(p.clone());
  }
  const int T = cfg.grid().output_steps;
  for (int k = 1; k < T; ++k) {
    auto params = m->fsd().parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i].copy_(saved[i]);
    }
    ForwardOptions fwd;
    fwd.before_step = [&](int tau) {
      if (tau == k) {
        for (auto& p : m->fsd().parameters()) {
          p.mul_(1.5);
        }
      }
    };
    auto out = m->forward(batch.grids, nullptr, fwd).motion;
    EXPECT_TRUE(torch::equal(out.slice(1, 0, k), reference.slice(1, 0, k))) << k;
    EXPECT_FALSE(torch::equal(out.slice(1, k), reference.slice(1, k))) << k;
  }
}

}  // namespace
}  // namespace bevmotion
