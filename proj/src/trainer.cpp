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

#include "bevmotion/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "bevmotion/errors.hpp"
#include "bevmotion/evaluator.hpp"
#include "bevmotion/rng.hpp"

namespace bevmotion {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Stream ids for derive_seed.
constexpr std::uint64_t kInitStream = 0x1000;
constexpr std::uint64_t kTorchStream = 0x2000;
constexpr std::uint64_t kShuffleStream = 0x3000;
constexpr std::uint64_t kRowStream = 0x4000;

}  // namespace

TensorDataset::TensorDataset(const Dataset& data, const RvpeOptions& rvpe)
    : spec_(data.spec), rvpe_(rvpe) {
  grids_.reserve(data.sequences.size());
  labels_.reserve(data.sequences.size());
  for (const auto& seq : data.sequences) {
    if (static_cast<int>(seq.points.frames.size()) != spec_.input_frames ||
        seq.labels.height != spec_.height() || seq.labels.width != spec_.width() ||
        seq.labels.steps != spec_.output_steps) {
      throw DataError("sequence does not match the dataset grid");
    }
    grids_.push_back(voxelize_sequence(seq.points, spec_).to(torch::kUInt8));
    labels_.push_back(labels_to_tensors(seq.labels));
    raw_labels_.push_back(&seq.labels);
  }
}

Batch TensorDataset::batch(std::span<const std::size_t> indices, std::uint64_t seed) const {
  std::vector<torch::Tensor> grids;
  std::vector<torch::Tensor> valid;
  std::vector<torch::Tensor> motion;
  std::vector<torch::Tensor> category;
  std::vector<torch::Tensor> state;
  std::vector<torch::Tensor> rows;
  std::vector<torch::Tensor> mask;
  for (auto i : indices) {
    grids.push_back(grids_.at(i));
    const auto& l = labels_[i];
    valid.push_back(l.valid);
    motion.push_back(l.motion);
    category.push_back(l.category);
    state.push_back(l.state);
    auto ins = build_instance_rows(*raw_labels_[i], rvpe_, derive_seed(seed, i));
    rows.push_back(ins.rows);
    mask.push_back(ins.mask);
  }
  Batch b;
  b.grids = torch::stack(grids).to(torch::kFloat);
  b.valid = torch::stack(valid);
  b.labels.motion = torch::stack(motion);
  b.labels.category = torch::stack(category);
  b.labels.state = torch::stack(state);
  b.labels.instance_rows = torch::stack(rows);
  b.labels.instance_mask = torch::stack(mask);
  return b;
}

LossReport compute_loss(MotionModelImpl& model, const Batch& batch, const ExperimentConfig& config,
                        const ForwardOptions& fwd, double pattern_scale) {
  const bool needs_labels = model.options().switches.pattern_extractor;
  auto out = model.forward(batch.grids, needs_labels ? &batch.labels : nullptr, fwd);
  LossParts parts;
  parts.move = motion_loss(out.motion, batch.labels.motion, batch.valid,
                           config.grid().horizon_seconds(), config.smooth_l1_delta);
  parts.state = state_loss(out.state_logits, batch.labels.state, batch.valid);
  parts.cls = cls_loss(out.class_logits, batch.labels.category, batch.valid);
  if (out.posterior && out.prior) {
    parts.pattern = pattern_loss(*out.posterior, *out.prior);
  }
  return total_loss(parts, config.loss, pattern_scale);
}

nlohmann::json StepRecord::to_json() const {
  return {{"epoch", epoch},   {"step", step},     {"lr", learning_rate},
          {"total", total},   {"move", move},     {"state", state},
          {"cls", cls},       {"pattern", pattern}, {"pattern_weight", pattern_weight},
          {"no_supervision", no_supervision},     {"teacher", teacher}};
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["config_hash"] = hex64(config_hash);
  j["wall_seconds"] = wall_seconds;
  j["steps"] = steps.size();
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json r{{"epoch", e.epoch},
                     {"mean_loss", e.mean_loss},
                     {"checkpoint", e.checkpoint},
                     {"wall_seconds", e.wall_seconds}};
    if (e.validation) {
      r["validation"] = e.validation->to_json();
    }
    j["epochs"].push_back(std::move(r));
  }
  return j;
}

Trainer::Trainer(ExperimentConfig config, const Dataset& train, const Dataset* val,
                 TrainerOptions options)
    : config_(std::move(config)), train_(train, config_.model.rvpe), val_(val),
      options_(std::move(options)) {
  config_.finalize();
  if (!(train.spec == config_.grid())) {
    throw ConfigError("training data grid does not match the config grid");
  }
  if (val_ != nullptr && !(val_->spec == config_.grid())) {
    throw ConfigError("validation data grid does not match the config grid");
  }
  if (train_.size() == 0) {
    throw DataError("training set is empty");
  }
  torch::manual_seed(derive_seed(config_.seed, kInitStream));
  model_ = MotionModel(config_.model);
  optimizer_ = std::make_unique<torch::optim::Adam>(
      model_->parameters(), torch::optim::AdamOptions(config_.train.learning_rate));
  const auto per_epoch = static_cast<std::int64_t>(
      (train_.size() + config_.train.batch_size - 1) / config_.train.batch_size);
  total_steps_ = per_epoch * config_.train.epochs;
  if (config_.train.max_steps > 0) {
    total_steps_ = std::min<std::int64_t>(total_steps_, config_.train.max_steps);
  }
}

void Trainer::resume(const Checkpoint& ckpt) {
  if (ckpt.config_hash != config_hash(config_)) {
    throw ConfigError("checkpoint config hash " + hex64(ckpt.config_hash) +
                      " does not match the run config " + hex64(config_hash(config_)));
  }
  if (!ckpt.train_state) {
    throw ConfigError("checkpoint carries no training state");
  }
  load_tensors(*model_, ckpt.tensors);
  restore_optimizer(*optimizer_, ckpt.train_state->optimizer);
  next_epoch_ = ckpt.train_state->next_epoch;
  step_ = ckpt.train_state->step;
}

void Trainer::save(const std::filesystem::path& path) const {
  TrainState st;
  st.next_epoch = next_epoch_;
  st.step = step_;
  st.optimizer = serialize_optimizer(*optimizer_);
  save_checkpoint(path, config_, *model_, &st);
}

double Trainer::pattern_scale_at(std::int64_t step) const {
  const double warm = config_.train.kl_warmup_fraction * static_cast<double>(total_steps_);
  if (warm <= 0.0) {
    return 1.0;
  }
  return std::min(1.0, static_cast<double>(step + 1) / warm);
}

double Trainer::teacher_probability_at(std::int64_t step) const {
  const double p0 = config_.train.teacher_probability;
  const double tail = config_.train.teacher_anneal_fraction * static_cast<double>(total_steps_);
  const double start = static_cast<double>(total_steps_) - tail;
  if (static_cast<double>(step) < start || tail <= 0.0) {
    return static_cast<double>(step) < start ? p0 : 0.0;
  }
  return p0 * std::max(0.0, (static_cast<double>(total_steps_) - step) / tail);
}

RunRecord Trainer::run(int until_epoch) {
  const auto t0 = Clock::now();
  const TrainConfig& tc = config_.train;
  const int last = until_epoch < 0 ? tc.epochs : std::min(until_epoch, tc.epochs);
  RunRecord record;
  record.config_hash = config_hash(config_);

  std::ofstream log;
  if (!options_.out_dir.empty()) {
    std::filesystem::create_directories(options_.out_dir / "checkpoints");
    log.open(options_.out_dir / "train_log.jsonl", std::ios::app);
    if (!log) {
      throw DataError("cannot write " + (options_.out_dir / "train_log.jsonl").string());
    }
  }

  const ModuleSwitches& sw = config_.model.switches;
  const LatentMode mode = sw.latent_modeling ? LatentMode::kSample : LatentMode::kDeterministic;

  while (next_epoch_ < last && step_ < total_steps_) {
    const int epoch = next_epoch_;
    const auto e0 = Clock::now();
    const double lr = tc.learning_rate_at(epoch);
    for (auto& group : optimizer_->param_groups()) {
      static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
    }
    torch::manual_seed(derive_seed(config_.seed, kTorchStream + epoch));
    Rng rng(derive_seed(config_.seed, kShuffleStream + epoch));
    std::vector<std::size_t> order(train_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }

    model_->train();
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t s = 0; s < order.size() && step_ < total_steps_;
         s += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t n = std::min<std::size_t>(tc.batch_size, order.size() - s);
      Batch batch = train_.batch(std::span(order).subspan(s, n),
                                 derive_seed(config_.seed, kRowStream + step_));
      ForwardOptions fwd;
      fwd.mode = mode;
      fwd.use_teacher = sw.pattern_extractor && rng.bernoulli(teacher_probability_at(step_));
      const double scale = pattern_scale_at(step_);
      LossReport rep = compute_loss(*model_, batch, config_, fwd, scale);
      if (!std::isfinite(rep.total_value)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << " step " << step_ << " (move " << rep.move
           << ", state " << rep.state << ", cls " << rep.cls << ", pattern " << rep.pattern
           << ")";
        throw NumericalError(os.str());
      }
      optimizer_->zero_grad();
      rep.total.backward();
      optimizer_->step();

      StepRecord sr;
      sr.epoch = epoch;
      sr.step = step_;
      sr.learning_rate = lr;
      sr.total = rep.total_value;
      sr.move = rep.move;
      sr.state = rep.state;
      sr.cls = rep.cls;
      sr.pattern = rep.pattern;
      sr.pattern_weight = rep.pattern_weight;
      sr.no_supervision = rep.no_supervision;
      sr.teacher = fwd.use_teacher;
      if (log.is_open()) {
        log << sr.to_json().dump() << '\n';
      }
      if (options_.on_step) {
        options_.on_step(sr);
      }
      record.steps.push_back(sr);
      loss_sum += rep.total_value;
      ++batches;
      ++step_;
    }
    ++next_epoch_;

    EpochRecord er;
    er.epoch = epoch;
    er.mean_loss = batches > 0 ? loss_sum / batches : 0.0;
    if (val_ != nullptr && !val_->sequences.empty() && tc.validate_each_epoch) {
      ModelPredictor pred(model_, config_.eval_mode, config_.seed);
      er.validation = evaluate(pred, *val_, config_.data.mask);
      model_->train();
    }
    if (!options_.out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.pmck", epoch);
      const auto path = options_.out_dir / "checkpoints" / name;
      save(path);
      std::filesystem::copy_file(path, options_.out_dir / "last.pmck",
                                 std::filesystem::copy_options::overwrite_existing);
      er.checkpoint = path.string();
      nlohmann::json ej{{"epoch", epoch}, {"mean_loss", er.mean_loss}, {"checkpoint", er.checkpoint}};
      if (er.validation) {
        ej["validation"] = er.validation->to_json();
      }
      log << ej.dump() << '\n';
      log.flush();
    }
    er.wall_seconds = seconds_since(e0);
    if (options_.verbose) {
      std::cerr << "epoch " << epoch << " lr " << lr << " loss " << er.mean_loss << " ("
                << er.wall_seconds << " s)\n";
    }
    record.epochs.push_back(std::move(er));
  }
  model_->eval();
  record.wall_seconds = seconds_since(t0);
  return record;
}

}  // namespace bevmotion
