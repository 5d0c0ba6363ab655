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
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bevmotion/config.hpp"
#include "bevmotion/dataset.hpp"

namespace bevmotion {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
};

/// 8-bit RGB raster, row-major from the top-left corner.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image(int w, int h, Rgb fill = {});
  void set(int x, int y, Rgb c);
  Rgb get(int x, int y) const;
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  void line(int x0, int y0, int x1, int y1, Rgb c);
  /// Upper-case 5x7 bitmap text; unknown glyphs render as blanks.
  void text(int x, int y, const std::string& s, Rgb c, int scale = 1);
};

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Top-down view of one prediction: predicted foreground classes as cell
/// colors and final-step displacement arrows every `arrow_stride` cells.
/// Size is the grid extent times pixels_per_meter; +x points up.
Image render_quiver(const Prediction& pred, const GridSpec& spec, const PlotConfig& plot);

/// A named MetricReport (as serialized to JSON).
using NamedReport = std::pair<std::string, nlohmann::json>;

/// Mean error per speed group, one bar series per report.
Image render_group_bars(const std::vector<NamedReport>& reports, const PlotConfig& plot);

/// GI and stability in a markdown table.
std::string summary_table(const std::vector<NamedReport>& reports);

struct PlotResult {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// quiver_0000.png ... one per prediction.
PlotResult plot_predictions(const PredictionSet& preds, const PlotConfig& plot,
                            const std::filesystem::path& out_dir);

/// groups.png and tables.md. Reports without any group statistics are
/// skipped with a warning; nothing is written if none remain.
PlotResult plot_reports(const std::vector<NamedReport>& reports, const PlotConfig& plot,
                        const std::filesystem::path& out_dir);

/// Accepts a single report object or an ablation document ({"rows": [...]}).
std::vector<NamedReport> load_reports(const std::filesystem::path& path);

}  // namespace bevmotion
