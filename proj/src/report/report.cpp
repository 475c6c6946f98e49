/*
 * Copyright 2026 The TumorBench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tumorbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <fmt/format.h>
#include <png.h>

#include "report/font.hpp"
#include "tumorbench/error.hpp"

namespace tumorbench::report {

namespace {

struct Color {
  std::uint8_t r, g, b;
};

constexpr Color kWhite{255, 255, 255};
constexpr Color kBlack{0, 0, 0};
constexpr Color kGrid{225, 225, 225};
constexpr Color kTrain{31, 119, 180};
constexpr Color kVal{255, 127, 14};

class Canvas {
 public:
  Canvas(int width, int height) : w_(width), h_(height), rgb_(static_cast<std::size_t>(width * height * 3), 255) {}

  void set(int x, int y, Color c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    const auto i = static_cast<std::size_t>((y * w_ + x) * 3);
    rgb_[i] = c.r;
    rgb_[i + 1] = c.g;
    rgb_[i + 2] = c.b;
  }

  void fill(int x0, int y0, int x1, int y1, Color c) {
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) set(x, y, c);
  }

  void line(int x0, int y0, int x1, int y1, Color c, int thickness = 1) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    const int r = thickness / 2;
    while (true) {
      fill(x0 - r, y0 - r, x0 - r + thickness, y0 - r + thickness, c);
      if (x0 == x1 && y0 == y1) break;
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

  static int text_width(const std::string& s, int scale) {
    return s.empty() ? 0 : static_cast<int>(s.size()) * (font::kGlyphWidth + 1) * scale - scale;
  }
  static int text_height(int scale) { return font::kGlyphHeight * scale; }

  void text(int x, int y, const std::string& s, Color c, int scale = 1) {
    for (const char ch : s) {
      if (const font::Glyph* g = font::find(ch)) {
        for (int row = 0; row < font::kGlyphHeight; ++row)
          for (int col = 0; col < font::kGlyphWidth; ++col)
            if (g->rows[static_cast<std::size_t>(row)] & (1u << (font::kGlyphWidth - 1 - col)))
              fill(x + col * scale, y + row * scale, x + (col + 1) * scale, y + (row + 1) * scale, c);
      }
      x += (font::kGlyphWidth + 1) * scale;
    }
  }

  void text_centered(int cx, int cy, const std::string& s, Color c, int scale = 1) {
    text(cx - text_width(s, scale) / 2, cy - text_height(scale) / 2, s, c, scale);
  }

  Figure finish(std::string title) && {
    Figure f;
    f.width = w_;
    f.height = h_;
    f.rgb = std::move(rgb_);
    f.title = std::move(title);
    return f;
  }

 private:
  int w_, h_;
  std::vector<std::uint8_t> rgb_;
};

std::string format_tick(double v) {
  std::string s = fmt::format("{:.2f}", v);
  return s;
}

Figure line_chart(const std::string& title, const std::string& y_label,
                  const std::vector<std::pair<std::string, std::vector<double>>>& series, double y_min, double y_max) {
  constexpr int kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
  Canvas cv(kW, kH);
  const int pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  const std::size_t n = series.front().second.size();
  if (y_max <= y_min) y_max = y_min + 1.0;

  const auto px = [&](std::size_t i) {
    return n == 1 ? kLeft + pw / 2 : kLeft + static_cast<int>(std::lround(static_cast<double>(i) * pw / static_cast<double>(n - 1)));
  };
  const auto py = [&](double v) {
    return kTop + static_cast<int>(std::lround((y_max - v) / (y_max - y_min) * ph));
  };

  std::vector<std::string> y_ticks;
  for (int t = 0; t <= 4; ++t) {
    const double v = y_min + (y_max - y_min) * t / 4.0;
    const int y = py(v);
    cv.line(kLeft, y, kLeft + pw, y, kGrid);
    const std::string label = format_tick(v);
    y_ticks.push_back(label);
    cv.text(kLeft - 8 - Canvas::text_width(label, 1), y - 3, label, kBlack);
  }
  std::vector<std::string> x_ticks;
  const std::size_t step = std::max<std::size_t>(1, (n + 9) / 10);
  for (std::size_t i = 0; i < n; i += step) {
    const std::string label = std::to_string(i + 1);
    x_ticks.push_back(label);
    cv.line(px(i), kTop + ph, px(i), kTop + ph + 4, kBlack);
    cv.text_centered(px(i), kTop + ph + 12, label, kBlack);
  }
  cv.line(kLeft, kTop, kLeft, kTop + ph, kBlack);
  cv.line(kLeft, kTop + ph, kLeft + pw, kTop + ph, kBlack);
  cv.text_centered(kW / 2, 18, title, kBlack, 2);
  cv.text_centered(kLeft + pw / 2, kH - 18, "Epoch", kBlack);
  cv.text(6, kTop - 18, y_label, kBlack);

  std::vector<Figure::Series> drawn;
  const Color colors[] = {kTrain, kVal};
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color c = colors[s % 2];
    Figure::Series out{series[s].first, series[s].second, {}};
    for (std::size_t i = 0; i < n; ++i) out.points.emplace_back(px(i), py(series[s].second[i]));
    for (std::size_t i = 0; i + 1 < n; ++i)
      cv.line(out.points[i].first, out.points[i].second, out.points[i + 1].first, out.points[i + 1].second, c, 2);
    for (const auto& [x, y] : out.points) cv.fill(x - 2, y - 2, x + 3, y + 3, c);
    // Legend entry, top right.
    const int ly = kTop + 8 + static_cast<int>(s) * 14;
    cv.fill(kLeft + pw - 110, ly, kLeft + pw - 96, ly + 4, c);
    cv.text(kLeft + pw - 90, ly - 2, out.name, kBlack);
    drawn.push_back(std::move(out));
  }

  Figure f = std::move(cv).finish(title);
  f.x_ticks = std::move(x_ticks);
  f.y_ticks = std::move(y_ticks);
  f.series = std::move(drawn);
  return f;
}

// Sequential white-to-blue ramp.
Color blues(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto mix = [t](double a, double b) { return static_cast<std::uint8_t>(std::lround(a + (b - a) * t)); };
  return {mix(247, 8), mix(251, 48), mix(255, 107)};
}

std::optional<double> read_predict_seconds(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(std::ifstream(path));
    if (j.contains("benchmark") && j["benchmark"].contains("median")) return j["benchmark"]["median"].get<double>();
    if (j.contains("evaluate") && j["evaluate"].contains("wall_seconds"))
      return j["evaluate"]["wall_seconds"].get<double>();
  } catch (const nlohmann::json::exception&) {
  }
  return std::nullopt;
}

}  // namespace

std::string percent(double fraction, int decimals) {
  if (!std::isfinite(fraction)) return "-";
  return fmt::format("{:.{}f}", 100.0 * fraction, decimals);
}

std::string percent_label(double fraction, int decimals) {
  std::string s = percent(fraction, decimals);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s + "%";
}

RunArtifacts load_run(const std::filesystem::path& run_dir) {
  const auto metrics_path = run_dir / "metrics.json";
  if (!std::filesystem::exists(metrics_path))
    throw Error(ErrorKind::kMissingMetrics, fmt::format("{} has no metrics.json", run_dir.string()));
  RunArtifacts run;
  run.name = run_dir.filename().string();
  if (run.name.empty()) run.name = run_dir.parent_path().filename().string();
  try {
    run.metrics = metrics::MetricReport::from_json(nlohmann::json::parse(std::ifstream(metrics_path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMissingMetrics, fmt::format("{}: {}", metrics_path.string(), e.what()));
  }
  run.backbone = run.name;
  if (const auto cfg = run_dir / "config.json"; std::filesystem::exists(cfg)) {
    try {
      const auto j = nlohmann::json::parse(std::ifstream(cfg));
      if (j.contains("backbone") && j["backbone"].is_string()) run.backbone = j["backbone"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
    }
  }
  run.predict_seconds = read_predict_seconds(run_dir / "timing.json");
  return run;
}

const std::vector<std::string>& ComparisonTable::columns() {
  static const std::vector<std::string> cols = {"Model", "Accuracy", "Precision", "Recall", "F1-score", "MAE",
                                                "MSE",   "RMSE",     "MCC",       "Kappa",  "CSI",      "Prediction time (s)"};
  return cols;
}

ComparisonTable render_table(std::vector<RunArtifacts> runs, int decimals) {
  std::stable_sort(runs.begin(), runs.end(), [](const RunArtifacts& a, const RunArtifacts& b) {
    return a.backbone != b.backbone ? a.backbone < b.backbone : a.name < b.name;
  });
  ComparisonTable t;
  for (const auto& r : runs) {
    const auto& m = r.metrics;
    ComparisonRow row{r.backbone, {}};
    row.cells = {r.backbone,
                 percent(m.accuracy, decimals),
                 percent(m.macro_precision, decimals),
                 percent(m.macro_recall, decimals),
                 percent(m.macro_f1, decimals),
                 percent(m.mae, decimals),
                 percent(m.mse, decimals),
                 percent(m.rmse, decimals),
                 percent(m.mcc(), decimals),
                 percent(m.kappa(), decimals),
                 percent(m.csi_macro, decimals),
                 r.predict_seconds ? fmt::format("{:.{}f}", *r.predict_seconds, decimals) : "-"};
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string ComparisonTable::to_csv() const {
  std::string out = fmt::format("{}\n", fmt::join(columns(), ","));
  for (const auto& r : rows) out += fmt::format("{}\n", fmt::join(r.cells, ","));
  return out;
}

std::string ComparisonTable::to_markdown() const {
  std::string out = fmt::format("| {} |\n", fmt::join(columns(), " | "));
  out += "|";
  for (std::size_t i = 0; i < columns().size(); ++i) out += i == 0 ? " --- |" : " ---: |";
  out += "\n";
  for (const auto& r : rows) out += fmt::format("| {} |\n", fmt::join(r.cells, " | "));
  return out;
}

nlohmann::json Figure::describe() const {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& ser : series) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [x, y] : ser.points) pts.push_back({x, y});
    s.push_back({{"name", ser.name}, {"values", ser.values}, {"points", pts}});
  }
  return {{"width", width},     {"height", height},           {"title", title}, {"x_ticks", x_ticks},
          {"y_ticks", y_ticks}, {"annotations", annotations}, {"series", s}};
}

void write_png(const Figure& figure, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (fp == nullptr) throw Error(ErrorKind::kIo, fmt::format("cannot write {}", path.string()));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(ErrorKind::kIo, fmt::format("PNG encoding failed for {}", path.string()));
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(figure.width), static_cast<png_uint_32>(figure.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < figure.height; ++y)
    png_write_row(png, figure.rgb.data() + static_cast<std::size_t>(y * figure.width * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

HistoryFigures plot_history(const train::TrainingHistory& history) {
  if (history.records.empty()) throw Error(ErrorKind::kEmptyHistory, "history has no epochs");
  std::vector<double> ta, va, tl, vl;
  for (const auto& r : history.records) {
    ta.push_back(r.train_accuracy);
    va.push_back(r.val_accuracy);
    tl.push_back(r.train_loss);
    vl.push_back(r.val_loss);
  }
  double loss_max = 0.0;
  for (const double v : tl) loss_max = std::max(loss_max, v);
  for (const double v : vl) loss_max = std::max(loss_max, v);
  loss_max = loss_max > 0.0 ? loss_max * 1.05 : 1.0;
  HistoryFigures out;
  out.accuracy = line_chart("Model accuracy", "Accuracy", {{"train", ta}, {"val", va}}, 0.0, 1.0);
  out.loss = line_chart("Model loss", "Loss", {{"train", tl}, {"val", vl}}, 0.0, loss_max);
  return out;
}

const std::vector<int>& confusion_display_order() {
  static const std::vector<int> order = {1, 0, 2};
  return order;
}

Figure plot_confusion(const metrics::ConfusionMatrix& cm, const std::vector<int>& display_order) {
  std::vector<int> order = display_order;
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  bool valid = static_cast<int>(order.size()) == cm.k;
  for (int i = 0; valid && i < cm.k; ++i) valid = sorted[static_cast<std::size_t>(i)] == i;
  if (!valid) {
    order.resize(static_cast<std::size_t>(cm.k));
    for (int i = 0; i < cm.k; ++i) order[static_cast<std::size_t>(i)] = i;
  }

  constexpr int kCell = 110, kLeft = 130, kTop = 60, kBottom = 90, kRight = 30;
  const int width = kLeft + cm.k * kCell + kRight, height = kTop + cm.k * kCell + kBottom;
  Canvas cv(width, height);
  const std::int64_t total = cm.total();
  std::int64_t peak = 0;
  for (const auto c : cm.counts) peak = std::max(peak, c);

  std::vector<std::string> annotations;
  for (int r = 0; r < cm.k; ++r) {
    for (int c = 0; c < cm.k; ++c) {
      const std::int64_t count = cm.at(order[static_cast<std::size_t>(r)], order[static_cast<std::size_t>(c)]);
      const double t = peak > 0 ? static_cast<double>(count) / static_cast<double>(peak) : 0.0;
      const int x0 = kLeft + c * kCell, y0 = kTop + r * kCell;
      cv.fill(x0, y0, x0 + kCell, y0 + kCell, blues(t));
      const double share = total > 0 ? static_cast<double>(count) / static_cast<double>(total) : 0.0;
      const std::string label = percent_label(share);
      annotations.push_back(label);
      cv.text_centered(x0 + kCell / 2, y0 + kCell / 2, label, t > 0.5 ? kWhite : kBlack, 2);
    }
  }
  for (int i = 0; i <= cm.k; ++i) {
    cv.line(kLeft, kTop + i * kCell, kLeft + cm.k * kCell, kTop + i * kCell, kBlack);
    cv.line(kLeft + i * kCell, kTop, kLeft + i * kCell, kTop + cm.k * kCell, kBlack);
  }
  for (int i = 0; i < cm.k; ++i) {
    const std::string& name = cm.class_order.at(static_cast<std::size_t>(order[static_cast<std::size_t>(i)]));
    cv.text(kLeft - 10 - Canvas::text_width(name, 1), kTop + i * kCell + kCell / 2 - 3, name, kBlack);
    cv.text_centered(kLeft + i * kCell + kCell / 2, kTop + cm.k * kCell + 14, name, kBlack);
  }
  cv.text_centered(kLeft + cm.k * kCell / 2, height - 30, "Predicted", kBlack, 2);
  cv.text(8, kTop - 20, "Actual", kBlack, 2);
  cv.text_centered(width / 2, 20, "Confusion matrix", kBlack, 2);

  Figure f = std::move(cv).finish("Confusion matrix");
  f.annotations = std::move(annotations);
  for (const int i : order) f.x_ticks.push_back(cm.class_order.at(static_cast<std::size_t>(i)));
  f.y_ticks = f.x_ticks;
  return f;
}

}  // namespace tumorbench::report
