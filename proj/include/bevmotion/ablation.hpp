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

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevmotion/config.hpp"
#include "bevmotion/dataset.hpp"
#include "bevmotion/metrics.hpp"
#include "bevmotion/model.hpp"

namespace bevmotion {

struct AblationRow {
  std::string label;  // "Baseline", "(a)" ... "(f)"
  ModuleSwitches switches;
};

/// Baseline plus rows (a)-(f) of the component grid.
const std::vector<AblationRow>& ablation_rows();

struct AblationResult {
  AblationRow row;
  metrics::MetricReport report;
  double train_seconds = 0.0;
};

/// Trains and evaluates every row (or the subset named in `only`) with the
/// base config's schedule and seed. Each row's run goes under out_dir/<row>.
std::vector<AblationResult> run_ablation(const ExperimentConfig& base, const Dataset& train,
                                         const Dataset& test, const std::filesystem::path& out_dir,
                                         const std::vector<std::string>& only = {},
                                         bool verbose = false);

/// Markdown table: module check marks then mean/median per speed group.
std::string ablation_markdown(const std::vector<AblationResult>& results);
nlohmann::json ablation_json(const std::vector<AblationResult>& results);

}  // namespace bevmotion
