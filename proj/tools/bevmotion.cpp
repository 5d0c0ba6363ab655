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

// Command-line driver: data generation, training, evaluation, ablation,
// prediction export and plotting.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "bevmotion/ablation.hpp"
#include "bevmotion/checkpoint.hpp"
#include "bevmotion/config.hpp"
#include "bevmotion/errors.hpp"
#include "bevmotion/evaluator.hpp"
#include "bevmotion/plot.hpp"
#include "bevmotion/scene_sim.hpp"
#include "bevmotion/trainer.hpp"

namespace fs = std::filesystem;
using namespace bevmotion;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "overrides the config seed");
  auto* out = cmd->add_option("--out-dir", c.out_dir, "output directory");
  if (out_required) {
    out->required();
  }
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) {
    cfg.set_seed(*c.seed);
  }
  cfg.finalize();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  out << text;
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string default_data(const std::string& data_dir, const std::string& out_dir,
                         const char* name) {
  return (fs::path(data_dir.empty() ? out_dir : data_dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BEV motion prediction toolkit"};
  app.require_subcommand(1);

  Common gen_c;
  auto* gen = app.add_subcommand("generate-data", "simulate train/val/test splits");
  add_common(gen, gen_c);

  Common train_c;
  std::string train_data;
  std::string resume;
  int until_epoch = -1;
  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, train_c);
  train->add_option("--data-dir", train_data, "directory with train.pmds/val.pmds");
  train->add_option("--resume", resume, "checkpoint to resume from")->check(CLI::ExistingFile);
  train->add_option("--until-epoch", until_epoch, "stop before this epoch");

  Common eval_c;
  std::string eval_ckpt;
  std::string eval_baseline;
  std::string eval_masked_ckpt;
  std::string eval_data;
  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint or a rule baseline");
  add_common(eval, eval_c);
  auto* ck_opt = eval->add_option("--checkpoint", eval_ckpt)->check(CLI::ExistingFile);
  eval->add_option("--baseline", eval_baseline, "static | constant_velocity")->excludes(ck_opt);
  eval->add_option("--masked-checkpoint", eval_masked_ckpt,
                   "mask-trained model; adds the generalization index")
      ->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "dataset (default <out-dir>/test.pmds)");

  Common abl_c;
  std::string abl_data;
  std::vector<std::string> abl_rows;
  auto* abl = app.add_subcommand("ablate", "train and evaluate the component grid");
  add_common(abl, abl_c);
  abl->add_option("--data-dir", abl_data, "directory with train.pmds/test.pmds");
  abl->add_option("--rows", abl_rows, "subset of rows, e.g. Baseline (f)");

  Common pred_c;
  std::string pred_ckpt;
  std::string pred_data;
  auto* pred = app.add_subcommand("predict", "write predictions for a dataset");
  add_common(pred, pred_c);
  pred->add_option("--checkpoint", pred_ckpt)->required()->check(CLI::ExistingFile);
  pred->add_option("--data", pred_data)->required()->check(CLI::ExistingFile);

  Common plot_c;
  std::vector<std::string> plot_inputs;
  auto* plot = app.add_subcommand("plot", "render reports and predictions to images");
  add_common(plot, plot_c);
  plot->add_option("--input", plot_inputs, "report .json or prediction .pmdp files")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ConfigError("").exit_code();
  }

  torch::set_num_threads(1);
  try {
    if (*gen) {
      const ExperimentConfig cfg = resolve(gen_c);
      const auto paths = sim::make_benchmark(cfg.scene, cfg.data.train, cfg.data.val,
                                             cfg.data.test, cfg.data.mask, gen_c.out_dir);
      write_json(fs::path(gen_c.out_dir) / "config.json", cfg.to_json());
      std::cout << "wrote " << paths.train.string() << ", " << paths.val.string() << ", "
                << paths.test.string() << "\n";
    } else if (*train) {
      const ExperimentConfig cfg = resolve(train_c);
      const Dataset tr = read_dataset(default_data(train_data, train_c.out_dir, "train.pmds"));
      std::optional<Dataset> val;
      const fs::path val_path = default_data(train_data, train_c.out_dir, "val.pmds");
      if (fs::exists(val_path)) {
        val = read_dataset(val_path);
      }
      TrainerOptions opts;
      opts.out_dir = train_c.out_dir;
      opts.verbose = true;
      Trainer trainer(cfg, tr, val ? &*val : nullptr, opts);
      if (!resume.empty()) {
        trainer.resume(read_checkpoint(resume));
      }
      write_json(fs::path(train_c.out_dir) / "config.json", cfg.to_json());
      const RunRecord run = trainer.run(until_epoch);
      trainer.save(fs::path(train_c.out_dir) / "final.pmck");
      write_json(fs::path(train_c.out_dir) / "run.json", run.to_json());
      std::cout << "trained " << run.steps.size() << " steps in " << run.wall_seconds
                << " s; config " << hex64(run.config_hash) << "\n";
    } else if (*eval) {
      ExperimentConfig cfg = resolve(eval_c);
      std::unique_ptr<Predictor> predictor;
      if (!eval_ckpt.empty()) {
        const Checkpoint ck = read_checkpoint(eval_ckpt);
        cfg = ck.config;
        predictor = std::make_unique<ModelPredictor>(load_model(ck), cfg.eval_mode, cfg.seed);
      } else if (!eval_baseline.empty()) {
        predictor = make_baseline(eval_baseline);
      } else {
        throw ConfigError("evaluate needs --checkpoint or --baseline");
      }
      const Dataset data =
          read_dataset(eval_data.empty() ? default_data("", eval_c.out_dir, "test.pmds") : eval_data);
      if (!eval_ckpt.empty() && !(data.spec == cfg.grid())) {
        throw ConfigError("dataset grid does not match the checkpoint grid");
      }
      metrics::MetricReport report = evaluate(*predictor, data, cfg.data.mask);
      if (!eval_masked_ckpt.empty()) {
        const Checkpoint mk = read_checkpoint(eval_masked_ckpt);
        if (!mk.config.data.mask) {
          throw ConfigError("--masked-checkpoint was not trained with a masked category");
        }
        if (report.masked_category != mk.config.data.mask) {
          report = evaluate(*predictor, data, mk.config.data.mask);
        }
        ModelPredictor masked(load_model(mk), mk.config.eval_mode, mk.config.seed);
        attach_generalization(report, evaluate(masked, data, mk.config.data.mask));
      }
      fs::create_directories(eval_c.out_dir);
      write_json(fs::path(eval_c.out_dir) / "report.json", report.to_json());
      write_text(fs::path(eval_c.out_dir) / "report.csv", report.to_csv());
      std::cout << report.to_json().dump(2) << "\n";
    } else if (*abl) {
      const ExperimentConfig cfg = resolve(abl_c);
      const Dataset tr = read_dataset(default_data(abl_data, abl_c.out_dir, "train.pmds"));
      const Dataset te = read_dataset(default_data(abl_data, abl_c.out_dir, "test.pmds"));
      const auto results = run_ablation(cfg, tr, te, abl_c.out_dir, abl_rows, true);
      write_json(fs::path(abl_c.out_dir) / "ablation.json", ablation_json(results));
      const std::string md = ablation_markdown(results);
      write_text(fs::path(abl_c.out_dir) / "ablation.md", md);
      std::cout << md;
    } else if (*pred) {
      const Checkpoint ck = read_checkpoint(pred_ckpt);
      const Dataset data = read_dataset(pred_data);
      if (!(data.spec == ck.config.grid())) {
        throw ConfigError("dataset grid does not match the checkpoint grid");
      }
      ModelPredictor predictor(load_model(ck), ck.config.eval_mode, ck.config.seed);
      fs::create_directories(pred_c.out_dir);
      const fs::path out = fs::path(pred_c.out_dir) / "predictions.pmdp";
      write_predictions(out, predict_dataset(predictor, data));
      std::cout << "wrote " << out.string() << "\n";
    } else if (*plot) {
      const ExperimentConfig cfg = resolve(plot_c);
      std::vector<NamedReport> reports;
      PlotResult total;
      for (const auto& in : plot_inputs) {
        if (fs::path(in).extension() == ".pmdp") {
          auto r = plot_predictions(read_predictions(in), cfg.plot,
                                    fs::path(plot_c.out_dir) / fs::path(in).stem());
          total.files.insert(total.files.end(), r.files.begin(), r.files.end());
          total.warnings.insert(total.warnings.end(), r.warnings.begin(), r.warnings.end());
        } else {
          auto r = load_reports(in);
          reports.insert(reports.end(), r.begin(), r.end());
        }
      }
      if (!reports.empty()) {
        auto r = plot_reports(reports, cfg.plot, plot_c.out_dir);
        total.files.insert(total.files.end(), r.files.begin(), r.files.end());
        total.warnings.insert(total.warnings.end(), r.warnings.begin(), r.warnings.end());
      }
      for (const auto& w : total.warnings) {
        std::cerr << "warning: " << w << "\n";
      }
      for (const auto& f : total.files) {
        std::cout << "wrote " << f.string() << "\n";
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const c10::Error& e) {
    std::cerr << "error: " << e.what_without_backtrace() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
