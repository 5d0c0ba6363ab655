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

#include "bevmotion/plot.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "bevmotion/errors.hpp"

namespace bevmotion {

namespace {

// 5x7 glyphs, one byte per row, bit 4 is the leftmost column.
const std::map<char, std::array<std::uint8_t, 7>>& font() {
  static const std::map<char, std::array<std::uint8_t, 7>> f = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
      {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
      {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
      {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
      {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
      {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
      {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
      {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
      {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
      {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
      {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
  };
  return f;
}

constexpr Rgb kBackground{24, 24, 28};
constexpr Rgb kWhite{240, 240, 240};
constexpr Rgb kGrey{120, 120, 120};

Rgb category_color(int c) {
  static const Rgb colors[kNumCategories] = {
      {40, 40, 46}, {70, 130, 220}, {220, 80, 70}, {80, 190, 90}, {200, 170, 60}};
  return colors[std::clamp(c, 0, kNumCategories - 1)];
}

Rgb series_color(std::size_t k) {
  static const Rgb colors[] = {{70, 130, 220}, {220, 120, 60}, {80, 190, 90}, {180, 90, 200},
                               {200, 170, 60}, {60, 190, 190}, {220, 80, 120}};
  return colors[k % (sizeof(colors) / sizeof(colors[0]))];
}

std::string fmt(double v, const char* f = "%.4f") {
  char buf[32];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

const char* kGroups[] = {"static", "slow", "fast"};

bool has_groups(const nlohmann::json& report) {
  if (!report.is_object()) {
    return false;
  }
  for (const char* g : kGroups) {
    if (report.contains(std::string(g) + ".mean")) {
      return true;
    }
  }
  return false;
}

}  // namespace

Image::Image(int w, int h, Rgb fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) {
    throw ContractError("image size must be positive");
  }
  pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) {
    return;
  }
  const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
  pixels[i] = c.r;
  pixels[i + 1] = c.g;
  pixels[i + 2] = c.b;
}

Rgb Image::get(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Image::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = std::max(0, y0); y < std::min(height, y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(width, x1); ++x) {
      set(x, y, c);
    }
  }
}

void Image::line(int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) {
      break;
    }
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Image::text(int x, int y, const std::string& s, Rgb c, int scale) {
  const auto& f = font();
  for (char ch : s) {
    auto it = f.find(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (it != f.end()) {
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (it->second[row] & (0x10 >> col)) {
            fill_rect(x + col * scale, y + row * scale, x + (col + 1) * scale,
                      y + (row + 1) * scale, c);
          }
        }
      }
    }
    x += 6 * scale;
  }
}

void write_png(const std::filesystem::path& path, const Image& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw DataError("cannot write " + path.string() + ": " + img.message);
  }
}

Image read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError("cannot read " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    throw FormatError("cannot decode " + path.string() + ": " + img.message);
  }
  return out;
}

Image render_quiver(const Prediction& pred, const GridSpec& spec, const PlotConfig& plot) {
  if (pred.height != spec.height() || pred.width != spec.width() || pred.steps < 1) {
    throw DataError("prediction does not match the plot grid");
  }
  const double ppm = plot.pixels_per_meter;
  const int img_w = static_cast<int>(std::lround((spec.y_max - spec.y_min) * ppm));
  const int img_h = static_cast<int>(std::lround((spec.x_max - spec.x_min) * ppm));
  Image img(img_w, img_h, kBackground);
  const double cell_px = spec.xy_resolution * ppm;
  const std::size_t cells = static_cast<std::size_t>(pred.height) * pred.width;
  // Pixel of world point (x, y): +x up, +y right.
  auto px = [&](double y) { return static_cast<int>(std::floor((y - spec.y_min) * ppm)); };
  auto py = [&](double x) { return static_cast<int>(std::floor((spec.x_max - x) * ppm)); };

  for (int i = 0; i < pred.height; ++i) {
    for (int j = 0; j < pred.width; ++j) {
      const std::size_t c = static_cast<std::size_t>(i) * pred.width + j;
      const float* logits = &pred.class_logits[c * kNumCategories];
      const int cls = static_cast<int>(std::max_element(logits, logits + kNumCategories) - logits);
      if (cls == 0 || logits[cls] == logits[0]) {
        continue;
      }
      const int x0 = px(spec.y_min + j * spec.xy_resolution);
      const int y0 = py(spec.x_min + (i + 1) * spec.xy_resolution);
      img.fill_rect(x0, y0, x0 + std::max(1, static_cast<int>(std::ceil(cell_px))),
                    y0 + std::max(1, static_cast<int>(std::ceil(cell_px))), category_color(cls));
    }
  }
  const int last = pred.steps - 1;
  const double min_len = kStaticSpeed * spec.horizon_seconds();
  for (int i = plot.arrow_stride / 2; i < pred.height; i += plot.arrow_stride) {
    for (int j = plot.arrow_stride / 2; j < pred.width; j += plot.arrow_stride) {
      const std::size_t c = static_cast<std::size_t>(i) * pred.width + j;
      const std::size_t m = (static_cast<std::size_t>(last) * cells + c) * 2;
      const double dx = pred.motion[m];
      const double dy = pred.motion[m + 1];
      const double len = std::hypot(dx, dy);
      if (len <= min_len) {
        continue;
      }
      const double x = spec.cell_center_x(i);
      const double y = spec.cell_center_y(j);
      const int ax = px(y);
      const int ay = py(x);
      const int bx = px(y + dy);
      const int by = py(x + dx);
      img.line(ax, ay, bx, by, kWhite);
      // Arrow head: two short strokes at +-25 degrees.
      const double head = std::min(0.35 * len, 1.0);
      for (double s : {-1.0, 1.0}) {
        const double a = std::atan2(dy, dx) + std::numbers::pi + s * 0.44;
        img.line(bx, by, px(y + dy + head * std::sin(a)), py(x + dx + head * std::cos(a)),
                 kWhite);
      }
    }
  }
  return img;
}

Image render_group_bars(const std::vector<NamedReport>& reports, const PlotConfig& plot) {
  Image img(plot.chart_width, plot.chart_height, kBackground);
  const int left = 50;
  const int right = plot.chart_width - 10;
  const int top = 30;
  const int bottom = plot.chart_height - 40;
  double vmax = 0.0;
  for (const auto& [name, r] : reports) {
    for (const char* g : kGroups) {
      const std::string key = std::string(g) + ".mean";
      if (r.contains(key)) {
        vmax = std::max(vmax, r.at(key).get<double>());
      }
    }
  }
  vmax = vmax > 0.0 ? vmax * 1.1 : 1.0;
  img.text(left, 8, "MEAN ERROR (M) BY SPEED GROUP", kWhite);
  img.line(left, top, left, bottom, kGrey);
  img.line(left, bottom, right, bottom, kGrey);
  img.text(4, top, fmt(vmax, "%.2f"), kGrey);
  img.text(4, bottom - 7, "0", kGrey);

  const int groups = 3;
  const int slot = (right - left) / groups;
  const int n = static_cast<int>(reports.size());
  const int bar = std::max(1, (slot - 16) / std::max(1, n));
  for (int g = 0; g < groups; ++g) {
    const int x0 = left + g * slot + 8;
    img.text(x0, bottom + 6, kGroups[g], kWhite);
    for (int k = 0; k < n; ++k) {
      const auto& r = reports[static_cast<std::size_t>(k)].second;
      const std::string key = std::string(kGroups[g]) + ".mean";
      if (!r.contains(key)) {
        continue;
      }
      const double v = r.at(key).get<double>();
      const int h = static_cast<int>(std::lround((bottom - top) * v / vmax));
      img.fill_rect(x0 + k * bar, bottom - h, x0 + (k + 1) * bar - 1, bottom,
                    series_color(static_cast<std::size_t>(k)));
    }
  }
  for (int k = 0; k < n; ++k) {
    const int y = bottom + 20;
    const int x = left + k * 70;
    img.fill_rect(x, y, x + 7, y + 7, series_color(static_cast<std::size_t>(k)));
    img.text(x + 10, y, reports[static_cast<std::size_t>(k)].first.substr(0, 9), kWhite);
  }
  return img;
}

std::string summary_table(const std::vector<NamedReport>& reports) {
  std::ostringstream os;
  os << "| Report | GI (%) | Stability | Masked stability | OA | MCA |\n";
  os << "|---|---|---|---|---|---|\n";
  auto val = [](const nlohmann::json& r, const char* key, const char* f) {
    return r.contains(key) ? fmt(r.at(key).get<double>(), f) : std::string("-");
  };
  for (const auto& [name, r] : reports) {
    os << "| " << name << " | " << val(r, "GI", "%.1f") << " | " << val(r, "stability", "%.4f")
       << " | " << val(r, "masked.stability", "%.4f") << " | " << val(r, "OA", "%.4f") << " | "
       << val(r, "MCA", "%.4f") << " |\n";
  }
  return os.str();
}

PlotResult plot_predictions(const PredictionSet& preds, const PlotConfig& plot,
                            const std::filesystem::path& out_dir) {
  PlotResult res;
  if (preds.predictions.empty()) {
    res.warnings.push_back("prediction file holds no sequences; nothing plotted");
    return res;
  }
  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < preds.predictions.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "quiver_%04zu.png", i);
    const auto path = out_dir / name;
    write_png(path, render_quiver(preds.predictions[i], preds.spec, plot));
    res.files.push_back(path);
  }
  return res;
}

PlotResult plot_reports(const std::vector<NamedReport>& reports, const PlotConfig& plot,
                        const std::filesystem::path& out_dir) {
  PlotResult res;
  std::vector<NamedReport> usable;
  for (const auto& r : reports) {
    if (has_groups(r.second)) {
      usable.push_back(r);
    } else {
      res.warnings.push_back("report \"" + r.first + "\" has no group errors; skipped");
    }
  }
  if (usable.empty()) {
    res.warnings.push_back("no usable reports; nothing plotted");
    return res;
  }
  std::filesystem::create_directories(out_dir);
  const auto bars = out_dir / "groups.png";
  write_png(bars, render_group_bars(usable, plot));
  res.files.push_back(bars);
  const auto table = out_dir / "tables.md";
  std::ofstream(table) << summary_table(usable);
  res.files.push_back(table);
  return res;
}

std::vector<NamedReport> load_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open report " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("report " + path.string() + ": " + e.what());
  }
  std::vector<NamedReport> out;
  if (j.is_object() && j.contains("rows") && j.at("rows").is_array()) {
    for (const auto& row : j.at("rows")) {
      out.emplace_back(row.value("label", std::string("?")),
                       row.value("report", nlohmann::json::object()));
    }
  } else if (j.is_object()) {
    // report.json files are named after their directory.
    const auto parent = path.parent_path().filename().string();
    out.emplace_back(path.stem() == "report" && !parent.empty() ? parent : path.stem().string(), j);
  } else {
    throw FormatError("report " + path.string() + ": expected a JSON object");
  }
  return out;
}

}  // namespace bevmotion
