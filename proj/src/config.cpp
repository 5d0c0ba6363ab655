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

#include "bevmotion/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bevmotion/errors.hpp"

namespace bevmotion {

using nlohmann::json;

namespace {

// Reads optional keys from one JSON object and rejects anything unread.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(path_ + ": expected an object");
    }
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) {
      return;
    }
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) {
        throw ConfigError(path_ + "." + k + ": unknown key");
      }
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      return;
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string path(const char* key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* kClassKeys[] = {"background", "car", "pedestrian", "bike", "others"};

json class_json(const sim::ClassConfig& c) {
  return {{"count", c.count},   {"speed_min", c.speed.min}, {"speed_max", c.speed.max},
          {"length", c.length}, {"width", c.width},         {"height", c.height}};
}

void read_class(Section& parent, const char* key, sim::ClassConfig& c) {
  if (const json* j = parent.child(key)) {
    Section s(*j, parent.path(key));
    s.get("count", c.count);
    s.get("speed_min", c.speed.min);
    s.get("speed_max", c.speed.max);
    s.get("length", c.length);
    s.get("width", c.width);
    s.get("height", c.height);
  }
}

const char* mode_name(LatentMode m) {
  return m == LatentMode::kDeterministic ? "deterministic" : "sample";
}

}  // namespace

TrainConfig TrainConfig::paper() { return {}; }

// Shorter runs left the toy models far from converged.
TrainConfig TrainConfig::toy() { return paper(); }

double TrainConfig::learning_rate_at(int epoch) const {
  double lr = learning_rate;
  for (int d : decay_epochs) {
    if (d <= epoch) {
      lr *= decay_factor;
    }
  }
  return lr;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be positive");
  }
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw ConfigError("train.decay_factor must be in (0, 1]");
  }
  if (batch_size < 1) {
    throw ConfigError("train.batch_size must be >= 1");
  }
  if (epochs < 1) {
    throw ConfigError("train.epochs must be >= 1");
  }
  for (int d : decay_epochs) {
    if (d < 0 || d >= epochs) {
      throw ConfigError("train.decay_epochs: " + std::to_string(d) +
                        " is outside [0, epochs)");
    }
  }
  if (teacher_probability < 0.0 || teacher_probability > 1.0) {
    throw ConfigError("train.teacher_probability must be in [0, 1]");
  }
  if (teacher_anneal_fraction < 0.0 || teacher_anneal_fraction > 1.0 ||
      kl_warmup_fraction < 0.0 || kl_warmup_fraction > 1.0) {
    throw ConfigError("train fractions must be in [0, 1]");
  }
  if (max_steps < 0) {
    throw ConfigError("train.max_steps must be >= 0");
  }
}

void ExperimentConfig::finalize() {
  scene.grid.validate();
  scene.validate();
  loss.validate();
  train.validate();
  if (!(smooth_l1_delta > 0.0)) {
    throw ConfigError("loss.delta must be positive");
  }
  if (data.train < 0 || data.val < 0 || data.test < 0) {
    throw ConfigError("data split sizes must be >= 0");
  }
  if (data.mask == Category::kBackground) {
    throw ConfigError("data.mask cannot be background");
  }
  if (model.backbone_options.channels < 1 || model.head_hidden < 1 ||
      model.dspg.latent_dim < 1 || model.dspg.hidden < 1) {
    throw ConfigError("model widths must be positive");
  }
  if (model.rvpe.downsample < 1 || model.rvpe.max_instances < 1 ||
      model.rvpe.cells_per_instance < 1) {
    throw ConfigError("model.rvpe sizes must be positive");
  }
  if (scene.grid.height() % 4 != 0 || scene.grid.width() % 4 != 0) {
    throw ConfigError("grid height and width must be multiples of 4");
  }
  model.sync(scene.grid.input_frames, scene.grid.depth(), scene.grid.output_steps);
  backbone_registry(model.backbone);  // throws on unknown names
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  scene.rng_seed = s;
}

json ExperimentConfig::to_json() const {
  const GridSpec& g = scene.grid;
  json j;
  j["seed"] = seed;
  j["grid"] = {{"x_min", g.x_min},
               {"x_max", g.x_max},
               {"y_min", g.y_min},
               {"y_max", g.y_max},
               {"z_min", g.z_min},
               {"z_max", g.z_max},
               {"xy_resolution", g.xy_resolution},
               {"z_resolution", g.z_resolution},
               {"frame_interval", g.frame_interval},
               {"input_frames", g.input_frames},
               {"output_steps", g.output_steps}};
  json s;
  for (int c = 1; c < kNumCategories; ++c) {
    s[kClassKeys[c]] = class_json(scene.class_config(static_cast<Category>(c)));
  }
  s["static_fraction"] = scene.static_fraction;
  s["point_density"] = scene.point_density;
  s["clutter_density"] = scene.clutter_density;
  s["sparsity_factor"] = scene.sparsity_factor;
  s["noise_sigma"] = scene.noise_sigma;
  s["motion_model_weights"] = scene.motion_model_weights;
  s["max_yaw_rate"] = scene.max_yaw_rate;
  s["max_accel"] = scene.max_accel;
  s["ground_z"] = scene.ground_z;
  s["placement_margin"] = scene.placement_margin;
  s["max_placement_attempts"] = scene.max_placement_attempts;
  j["scene"] = s;
  j["data"] = {{"train", data.train}, {"val", data.val}, {"test", data.test}};
  j["data"]["mask"] = data.mask ? json(std::string(category_name(*data.mask))) : json(nullptr);
  const ModuleSwitches& sw = model.switches;
  const RvpeOptions& r = model.rvpe;
  const DspgOptions& d = model.dspg;
  j["model"] = {
      {"backbone", model.backbone},
      {"channels", model.backbone_options.channels},
      {"stem_channels", model.backbone_options.stem_channels},
      {"head_hidden", model.head_hidden},
      {"switches",
       {{"pattern_extractor", sw.pattern_extractor},
        {"pattern_generator", sw.pattern_generator},
        {"latent_modeling", sw.latent_modeling},
        {"pattern_fusion", sw.pattern_fusion}}},
      {"rvpe",
       {{"prior_channels", r.prior_channels},
        {"motion_hidden", r.motion_hidden},
        {"attention_dim", r.attention_dim},
        {"downsample", r.downsample},
        {"max_instances", r.max_instances},
        {"cells_per_instance", r.cells_per_instance},
        {"token_dim", r.token_dim},
        {"position_encoding", r.position_encoding},
        {"motion_scale", r.motion_scale}}},
      {"dspg",
       {{"latent_dim", d.latent_dim},
        {"split_channels", d.split_channels},
        {"hidden", d.hidden},
        {"log_var_min", d.log_var_min},
        {"log_var_max", d.log_var_max}}}};
  j["loss"] = {{"move", loss.move},
               {"state", loss.state},
               {"cls", loss.cls},
               {"pattern", loss.pattern},
               {"delta", smooth_l1_delta}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"decay_epochs", train.decay_epochs},
                {"decay_factor", train.decay_factor},
                {"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"teacher_probability", train.teacher_probability},
                {"teacher_anneal_fraction", train.teacher_anneal_fraction},
                {"kl_warmup_fraction", train.kl_warmup_fraction},
                {"max_steps", train.max_steps},
                {"validate_each_epoch", train.validate_each_epoch}};
  j["eval"] = {{"latent", mode_name(eval_mode)}};
  j["plot"] = {{"pixels_per_meter", plot.pixels_per_meter},
               {"arrow_stride", plot.arrow_stride},
               {"chart_width", plot.chart_width},
               {"chart_height", plot.chart_height}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  Section root(j, "config");
  std::string preset = "default";
  root.get("preset", preset);
  ExperimentConfig c;
  if (preset == "toy") {
    c = toy();
  } else if (preset != "default") {
    throw ConfigError("config.preset: expected \"default\" or \"toy\", got \"" + preset + "\"");
  }
  std::uint64_t seed = c.seed;
  root.get("seed", seed);
  c.set_seed(seed);

  if (const json* g = root.child("grid")) {
    Section s(*g, "grid");
    GridSpec& spec = c.scene.grid;
    s.get("x_min", spec.x_min);
    s.get("x_max", spec.x_max);
    s.get("y_min", spec.y_min);
    s.get("y_max", spec.y_max);
    s.get("z_min", spec.z_min);
    s.get("z_max", spec.z_max);
    s.get("xy_resolution", spec.xy_resolution);
    s.get("z_resolution", spec.z_resolution);
    s.get("frame_interval", spec.frame_interval);
    s.get("input_frames", spec.input_frames);
    s.get("output_steps", spec.output_steps);
  }
  if (const json* sj = root.child("scene")) {
    Section s(*sj, "scene");
    for (int k = 1; k < kNumCategories; ++k) {
      read_class(s, kClassKeys[k], c.scene.class_config(static_cast<Category>(k)));
    }
    s.get("static_fraction", c.scene.static_fraction);
    s.get("point_density", c.scene.point_density);
    s.get("clutter_density", c.scene.clutter_density);
    s.get("sparsity_factor", c.scene.sparsity_factor);
    s.get("noise_sigma", c.scene.noise_sigma);
    s.get("motion_model_weights", c.scene.motion_model_weights);
    s.get("max_yaw_rate", c.scene.max_yaw_rate);
    s.get("max_accel", c.scene.max_accel);
    s.get("ground_z", c.scene.ground_z);
    s.get("placement_margin", c.scene.placement_margin);
    s.get("max_placement_attempts", c.scene.max_placement_attempts);
  }
  if (const json* dj = root.child("data")) {
    Section s(*dj, "data");
    s.get("train", c.data.train);
    s.get("val", c.data.val);
    s.get("test", c.data.test);
    if (const json* m = s.child("mask")) {
      if (m->is_null()) {
        c.data.mask.reset();
      } else if (m->is_string()) {
        c.data.mask = parse_category(m->get<std::string>());
      } else {
        throw ConfigError("data.mask: expected a category name or null");
      }
    }
  }
  if (const json* mj = root.child("model")) {
    Section s(*mj, "model");
    s.get("backbone", c.model.backbone);
    s.get("channels", c.model.backbone_options.channels);
    s.get("stem_channels", c.model.backbone_options.stem_channels);
    s.get("head_hidden", c.model.head_hidden);
    if (const json* sw = s.child("switches")) {
      Section ss(*sw, "model.switches");
      ss.get("pattern_extractor", c.model.switches.pattern_extractor);
      ss.get("pattern_generator", c.model.switches.pattern_generator);
      ss.get("latent_modeling", c.model.switches.latent_modeling);
      ss.get("pattern_fusion", c.model.switches.pattern_fusion);
    }
    if (const json* rj = s.child("rvpe")) {
      Section rs(*rj, "model.rvpe");
      RvpeOptions& r = c.model.rvpe;
      rs.get("prior_channels", r.prior_channels);
      rs.get("motion_hidden", r.motion_hidden);
      rs.get("attention_dim", r.attention_dim);
      rs.get("downsample", r.downsample);
      rs.get("max_instances", r.max_instances);
      rs.get("cells_per_instance", r.cells_per_instance);
      rs.get("token_dim", r.token_dim);
      rs.get("position_encoding", r.position_encoding);
      rs.get("motion_scale", r.motion_scale);
    }
    if (const json* dj = s.child("dspg")) {
      Section ds(*dj, "model.dspg");
      DspgOptions& d = c.model.dspg;
      ds.get("latent_dim", d.latent_dim);
      ds.get("split_channels", d.split_channels);
      ds.get("hidden", d.hidden);
      ds.get("log_var_min", d.log_var_min);
      ds.get("log_var_max", d.log_var_max);
    }
  }
  if (const json* lj = root.child("loss")) {
    Section s(*lj, "loss");
    s.get("move", c.loss.move);
    s.get("state", c.loss.state);
    s.get("cls", c.loss.cls);
    s.get("pattern", c.loss.pattern);
    s.get("delta", c.smooth_l1_delta);
  }
  if (const json* tj = root.child("train")) {
    Section s(*tj, "train");
    std::string schedule;
    s.get("schedule", schedule);
    if (schedule == "paper") {
      c.train = TrainConfig::paper();
    } else if (schedule == "toy") {
      c.train = TrainConfig::toy();
    } else if (!schedule.empty()) {
      throw ConfigError("train.schedule: expected \"paper\" or \"toy\", got \"" + schedule + "\"");
    }
    s.get("learning_rate", c.train.learning_rate);
    s.get("decay_epochs", c.train.decay_epochs);
    s.get("decay_factor", c.train.decay_factor);
    s.get("epochs", c.train.epochs);
    s.get("batch_size", c.train.batch_size);
    s.get("teacher_probability", c.train.teacher_probability);
    s.get("teacher_anneal_fraction", c.train.teacher_anneal_fraction);
    s.get("kl_warmup_fraction", c.train.kl_warmup_fraction);
    s.get("max_steps", c.train.max_steps);
    s.get("validate_each_epoch", c.train.validate_each_epoch);
  }
  if (const json* ej = root.child("eval")) {
    Section s(*ej, "eval");
    std::string mode = mode_name(c.eval_mode);
    s.get("latent", mode);
    if (mode == "deterministic") {
      c.eval_mode = LatentMode::kDeterministic;
    } else if (mode == "sample") {
      c.eval_mode = LatentMode::kSample;
    } else {
      throw ConfigError("eval.latent: expected \"deterministic\" or \"sample\"");
    }
  }
  if (const json* pj = root.child("plot")) {
    Section s(*pj, "plot");
    s.get("pixels_per_meter", c.plot.pixels_per_meter);
    s.get("arrow_stride", c.plot.arrow_stride);
    s.get("chart_width", c.plot.chart_width);
    s.get("chart_height", c.plot.chart_height);
    if (!(c.plot.pixels_per_meter > 0.0) || c.plot.arrow_stride < 1 || c.plot.chart_width < 64 ||
        c.plot.chart_height < 64) {
      throw ConfigError("plot: sizes out of range");
    }
  }
  c.finalize();
  return c;
}

ExperimentConfig ExperimentConfig::toy() {
  ExperimentConfig c;
  GridSpec& g = c.scene.grid;
  g.x_min = -24.0;
  g.x_max = 24.0;
  g.y_min = -24.0;
  g.y_max = 24.0;
  g.xy_resolution = 0.5;
  c.scene.car.count = 5;
  c.scene.pedestrian.count = 3;
  c.scene.bike = {3, {2.0, 9.0}, 1.8, 0.6, 1.5};
  c.scene.others.count = 2;
  c.train = TrainConfig::toy();
  c.finalize();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string text = config.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h = (h ^ ch) * 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace bevmotion
