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

#ifndef TUMORBENCH_PIPELINE_HPP_
#define TUMORBENCH_PIPELINE_HPP_

#include <filesystem>
#include <functional>
#include <string>

#include "tumorbench/experiment.hpp"
#include "tumorbench/metrics.hpp"
#include "tumorbench/train.hpp"

// End-to-end steps shared by the command-line tool and the tests. Every
// file written lives under the run directory (or the configured cache).
namespace tumorbench::pipeline {

using Log = std::function<void(const std::string&)>;

// Parses the data directory. Throws kConfig when it is missing.
DatasetManifest ingest(const ExperimentConfig& config);

// Builds (or reuses) the preprocessed tensor cache for `manifest`.
std::filesystem::path ensure_cache(const ExperimentConfig& config, const DatasetManifest& manifest, const Log& log = {});

DatasetSplit make_split(const ExperimentConfig& config, const DatasetManifest& manifest);

// Backbone + head, compiled, with the configured seed and weights.
model::ModelHandle build_model(const ExperimentConfig& config);

// Reads a single MAT slice and returns the model-ready eval input.
Tensor prepare_slice(const std::filesystem::path& mat_file, const PreprocessConfig& preprocess);

struct RunSummary {
  train::TrainResult training;
  metrics::MetricReport test_metrics;
  double evaluate_seconds = 0.0;
};

// train subcommand: config.json, splits.json, history.csv, best.ckpt,
// predictions.csv, metrics.json, timing.json and figures under run_dir.
RunSummary run_training(const ExperimentConfig& config, const Log& log = {});

// evaluate subcommand: reloads best.ckpt and rewrites the test artifacts.
metrics::MetricReport evaluate_run(const std::filesystem::path& run_dir, int batch_size = 32, const Log& log = {});

// benchmark subcommand: adds benchmark statistics to timing.json.
train::TimingStats benchmark_run(const std::filesystem::path& run_dir, int repeats, int batch_size = 32,
                                 const Log& log = {});

// Renders history and confusion figures from stored artifacts only.
void render_run_figures(const std::filesystem::path& run_dir);

// Standalone metrics from a predictions CSV (index,true,pred or
// index,true,p0..pK-1).
metrics::MetricReport metrics_from_predictions(const std::filesystem::path& csv);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace tumorbench::pipeline

#endif  // TUMORBENCH_PIPELINE_HPP_
