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

#include "bevmotion/ablation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "bevmotion/errors.hpp"
#include "bevmotion/evaluator.hpp"
#include "bevmotion/trainer.hpp"

namespace bevmotion {

const std::vector<AblationRow>& ablation_rows() {
  //                                         PE     PG     LM     PF
  static const std::vector<AblationRow> rows = {
      {"Baseline", {false, false, false, false}},
      {"(a)", {true, false, false, false}},
      {"(b)", {false, true, false, false}},
      {"(c)", {true, true, false, false}},
      {"(d)", {false, false, true, false}},
      {"(e)", {false, false, true, true}},
      {"(f)", {true, true, true, true}},
  };
  return rows;
}

namespace {

std::string row_dir(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return "row_" + out;
}

std::string cell(const std::optional<metrics::GroupStat>& g, bool mean) {
  if (!g) {
    return "-";
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", mean ? g->mean : g->median);
  return buf;
}

}  // namespace

std::vector<AblationResult> run_ablation(const ExperimentConfig& base, const Dataset& train,
                                         const Dataset& test, const std::filesystem::path& out_dir,
                                         const std::vector<std::string>& only, bool verbose) {
  for (const auto& name : only) {
    const auto& rows = ablation_rows();
    if (std::none_of(rows.begin(), rows.end(),
                     [&](const AblationRow& r) { return r.label == name; })) {
      throw ConfigError("unknown ablation row \"" + name + "\"");
    }
  }
  std::vector<AblationResult> results;
  for (const auto& row : ablation_rows()) {
    if (!only.empty() && std::find(only.begin(), only.end(), row.label) == only.end()) {
      continue;
    }
    ExperimentConfig cfg = base;
    cfg.model.switches = row.switches;
    cfg.train.validate_each_epoch = false;
    cfg.finalize();
    TrainerOptions opts;
    if (!out_dir.empty()) {
      opts.out_dir = out_dir / row_dir(row.label);
    }
    opts.verbose = verbose;
    if (verbose) {
      std::cerr << "ablation row " << row.label << " (" << row.switches.describe() << ")\n";
    }
    Trainer trainer(cfg, train, nullptr, opts);
    const RunRecord run = trainer.run();
    ModelPredictor pred(trainer.model(), cfg.eval_mode, cfg.seed);
    results.push_back({row, evaluate(pred, test, cfg.data.mask), run.wall_seconds});
  }
  return results;
}

std::string ablation_markdown(const std::vector<AblationResult>& results) {
  std::ostringstream os;
  os << "| Method | P.E. | P.G. | L.M. | P.F. | Static mean | Static median | Slow mean | "
        "Slow median | Fast mean | Fast median | Stability |\n";
  os << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  auto mark = [](bool on) { return on ? "x" : " "; };
  for (const auto& r : results) {
    const auto& g = r.report.groups;
    const auto& s = r.row.switches;
    os << "| " << r.row.label << " | " << mark(s.pattern_extractor) << " | "
       << mark(s.pattern_generator) << " | " << mark(s.latent_modeling) << " | "
       << mark(s.pattern_fusion);
    for (int k = 0; k < metrics::kNumGroups; ++k) {
      os << " | " << cell(g[k], true) << " | " << cell(g[k], false);
    }
    char buf[32];
    if (r.report.stability_all) {
      std::snprintf(buf, sizeof(buf), "%.4f", *r.report.stability_all);
    } else {
      std::snprintf(buf, sizeof(buf), "-");
    }
    os << " | " << buf << " |\n";
  }
  return os.str();
}

nlohmann::json ablation_json(const std::vector<AblationResult>& results) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : results) {
    const auto& s = r.row.switches;
    rows.push_back({{"label", r.row.label},
                    {"switches",
                     {{"pattern_extractor", s.pattern_extractor},
                      {"pattern_generator", s.pattern_generator},
                      {"latent_modeling", s.latent_modeling},
                      {"pattern_fusion", s.pattern_fusion}}},
                    {"train_seconds", r.train_seconds},
                    {"report", r.report.to_json()}});
  }
  return {{"rows", rows}};
}

}  // namespace bevmotion
