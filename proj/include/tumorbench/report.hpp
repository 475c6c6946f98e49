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

#ifndef TUMORBENCH_REPORT_HPP_
#define TUMORBENCH_REPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorbench/metrics.hpp"
#include "tumorbench/train.hpp"

namespace tumorbench::report {

// Fixed-point percentage, e.g. 0.996795 -> "99.68".
std::string percent(double fraction, int decimals = 2);
// Percentage with trailing zeros dropped, e.g. 0.483974 -> "48.4%".
std::string percent_label(double fraction, int decimals = 2);

// The artifacts of one run directory that the tables need.
struct RunArtifacts {
  std::string name;
  std::string backbone;
  metrics::MetricReport metrics;
  std::optional<double> predict_seconds;
};

// Reads metrics.json (required, else kMissingMetrics), config.json and
// timing.json (both optional) from `run_dir`.
RunArtifacts load_run(const std::filesystem::path& run_dir);

struct ComparisonRow {
  std::string backbone;
  std::vector<std::string> cells;  // formatted, in column order
};

struct ComparisonTable {
  static const std::vector<std::string>& columns();
  std::vector<ComparisonRow> rows;

  std::string to_csv() const;
  std::string to_markdown() const;
};

// One row per run, sorted by backbone name. Missing timing renders as "-".
ComparisonTable render_table(std::vector<RunArtifacts> runs, int decimals = 2);

// RGB raster plus a description of what was drawn, so tests can compare
// structure independently of pixels.
struct Figure {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;
  std::string title;
  std::vector<std::string> x_ticks;
  std::vector<std::string> y_ticks;
  std::vector<std::string> annotations;
  // Per series: name and rendered pixel coordinates of each point.
  struct Series {
    std::string name;
    std::vector<double> values;
    std::vector<std::pair<int, int>> points;
  };
  std::vector<Series> series;

  nlohmann::json describe() const;
};

void write_png(const Figure& figure, const std::filesystem::path& path);

struct HistoryFigures {
  Figure accuracy;
  Figure loss;
};

// Throws kEmptyHistory.
HistoryFigures plot_history(const train::TrainingHistory& history);

// Display order for the confusion figure (glioma, meningioma, pituitary)
// as indices into the model's class order.
const std::vector<int>& confusion_display_order();

// Heatmap annotated with each cell's share of all samples.
Figure plot_confusion(const metrics::ConfusionMatrix& cm, const std::vector<int>& display_order = confusion_display_order());

}  // namespace tumorbench::report

#endif  // TUMORBENCH_REPORT_HPP_
