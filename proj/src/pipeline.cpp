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

#include "tumorbench/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "tumorbench/error.hpp"
#include "tumorbench/report.hpp"

namespace tumorbench::pipeline {

namespace {

void say(const Log& log, const std::string& message) {
  if (log) log(message);
}

std::string dataset_fingerprint(const DatasetManifest& manifest) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto mix = [&h](const std::string& s) {
    for (const unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& r : manifest.records) {
    mix(std::filesystem::absolute(r.source).string());
    mix(r.key);
    if (std::filesystem::exists(r.source)) mix(std::to_string(std::filesystem::file_size(r.source)));
  }
  return fmt::format("{:016x}", h);
}

ExperimentConfig load_run_config(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "config.json";
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::kConfig, fmt::format("{} has no config.json", run_dir.string()));
  nlohmann::json j = read_json(path);
  j.erase("config_hash");
  ExperimentConfig config = ExperimentConfig::from_json(j);
  config.run_dir = run_dir;
  return config;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

// Writes predictions.csv, metrics.json and the evaluate timing.
metrics::MetricReport write_test_artifacts(const ExperimentConfig& config, const train::PredictionSet& predictions) {
  train::write_predictions_csv(predictions, config.run_dir / "predictions.csv");
  metrics::MetricReport report = metrics::full_report(predictions.y_true, predictions.y_prob);
  nlohmann::json mj = report.to_json();
  mj["config_hash"] = config.hash();
  write_json(config.run_dir / "metrics.json", mj);

  const auto timing_path = config.run_dir / "timing.json";
  nlohmann::json timing = std::filesystem::exists(timing_path) ? read_json(timing_path) : nlohmann::json::object();
  timing["evaluate"] = {{"wall_seconds", predictions.wall_seconds},
                        {"images", static_cast<std::int64_t>(predictions.indices.size())}};
  timing["config_hash"] = config.hash();
  write_json(timing_path, timing);
  report::write_png(report::plot_confusion(report.confusion), config.run_dir / "confusion.png");
  return report;
}

}  // namespace

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot read {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kIo, fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
  }
}

DatasetManifest ingest(const ExperimentConfig& config) {
  config.require_data_dir();
  return load_dataset(config.data_dir);
}

std::filesystem::path ensure_cache(const ExperimentConfig& config, const DatasetManifest& manifest, const Log& log) {
  const auto dir = config.resolved_cache_dir();
  std::filesystem::create_directories(dir);
  const auto path =
      dir / fmt::format("preprocessed_{}_{}.h5", config.preprocess.hash(), dataset_fingerprint(manifest));
  if (std::filesystem::exists(path)) {
    try {
      const PreprocessedCache cache = PreprocessedCache::open(path, config.preprocess);
      if (cache.size() == manifest.total) {
        say(log, fmt::format("reusing preprocessed cache {}", path.string()));
        return path;
      }
    } catch (const Error&) {
      // Stale or partial cache; rebuild below.
    }
  }
  say(log, fmt::format("preprocessing {} slices into {}", manifest.total, path.string()));
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  PreprocessedCache::build(tmp, manifest, config.preprocess);
  std::filesystem::rename(tmp, path);
  return path;
}

DatasetSplit make_split(const ExperimentConfig& config, const DatasetManifest& manifest) {
  return split_dataset(manifest, config.split);
}

model::ModelHandle build_model(const ExperimentConfig& config) {
  model::BackboneOptions options;
  options.weights_source = config.weights_source;
  options.seed = config.seed;
  options.input_shape = {config.preprocess.side, config.preprocess.side, 3};
  options.trainable = config.backbone_trainable;
  model::ModelHandle handle =
      model::attach_head(model::build_backbone(config.backbone, options), config.head, config.augmentation);
  handle.input_prescaled = config.preprocess.scale_at == ScaleAt::kPreprocess;
  model::compile_model(handle, config.compile);
  return handle;
}

Tensor prepare_slice(const std::filesystem::path& mat_file, const PreprocessConfig& preprocess) {
  return preprocess_pipeline(raw_image_from(parse_record(mat_file)), preprocess);
}

RunSummary run_training(const ExperimentConfig& config, const Log& log) {
  if (config.run_dir.empty()) throw Error(ErrorKind::kConfig, "run_dir is not set");
  std::filesystem::create_directories(config.run_dir);
  nlohmann::json cj = config.to_json();
  cj["config_hash"] = config.hash();
  write_json(config.run_dir / "config.json", cj);

  const DatasetManifest manifest = ingest(config);
  say(log, fmt::format("ingested {} slices ({} meningioma, {} glioma, {} pituitary)", manifest.total,
                       manifest.class_counts[0], manifest.class_counts[1], manifest.class_counts[2]));
  const DatasetSplit split = make_split(config, manifest);
  nlohmann::json sj = split_to_json(split, config.split);
  sj["config_hash"] = config.hash();
  write_json(config.run_dir / "splits.json", sj);
  say(log, fmt::format("split train {} / val {} / test {}", split.train.size(), split.val.size(), split.test.size()));

  const auto cache_path = ensure_cache(config, manifest, log);
  const PreprocessedCache cache = PreprocessedCache::open(cache_path, config.preprocess);
  const train::CacheSource source(cache);

  say(log, fmt::format("building {} (weights: {})", model::backbone_info(config.backbone).display_name,
                       config.weights_source));
  model::ModelHandle handle = build_model(config);

  const auto checkpoint = config.run_dir / "best.ckpt";
  train::TrainingHistory partial;
  RunSummary summary;
  summary.training = train::train(handle, split, source, config.train, checkpoint, [&](const train::EpochRecord& r) {
    partial.records.push_back(r);
    train::write_history_csv(partial, config.run_dir / "history.csv");
    say(log, fmt::format("epoch {}/{}: loss {:.4f} acc {:.4f} val_loss {:.4f} val_acc {:.4f}", r.epoch,
                         config.train.epochs, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy));
    return true;
  });
  train::write_history_csv(summary.training.history, config.run_dir / "history.csv");
  const auto figures = report::plot_history(summary.training.history);
  report::write_png(figures.accuracy, config.run_dir / "accuracy.png");
  report::write_png(figures.loss, config.run_dir / "loss.png");

  say(log, fmt::format("best validation accuracy {:.4f} at epoch {}", summary.training.best_val_accuracy,
                       summary.training.best_epoch));
  model::ModelHandle best = model::load_model(checkpoint);
  const train::PredictionSet predictions = train::evaluate(best, split.test, source, config.train.batch_size);
  summary.test_metrics = write_test_artifacts(config, predictions);
  summary.evaluate_seconds = predictions.wall_seconds;
  say(log, fmt::format("test accuracy {:.4f} over {} images ({:.2f} s)", summary.test_metrics.accuracy,
                       predictions.indices.size(), predictions.wall_seconds));
  return summary;
}

metrics::MetricReport evaluate_run(const std::filesystem::path& run_dir, int batch_size, const Log& log) {
  const ExperimentConfig config = load_run_config(run_dir);
  const DatasetSplit split = split_from_json(read_json(run_dir / "splits.json"));
  const DatasetManifest manifest = ingest(config);
  const PreprocessedCache cache = PreprocessedCache::open(ensure_cache(config, manifest, log), config.preprocess);
  const train::CacheSource source(cache);
  model::ModelHandle handle = model::load_model(run_dir / "best.ckpt");
  const train::PredictionSet predictions = train::evaluate(handle, split.test, source, batch_size);
  say(log, fmt::format("evaluated {} test images in {:.2f} s", predictions.indices.size(), predictions.wall_seconds));
  return write_test_artifacts(config, predictions);
}

train::TimingStats benchmark_run(const std::filesystem::path& run_dir, int repeats, int batch_size, const Log& log) {
  const ExperimentConfig config = load_run_config(run_dir);
  const DatasetSplit split = split_from_json(read_json(run_dir / "splits.json"));
  const DatasetManifest manifest = ingest(config);
  const PreprocessedCache cache = PreprocessedCache::open(ensure_cache(config, manifest, log), config.preprocess);
  const train::CacheSource source(cache);
  model::ModelHandle handle = model::load_model(run_dir / "best.ckpt");
  train::TimingStats stats = train::benchmark_predict(handle, split.test, source, repeats, batch_size);
  const auto timing_path = run_dir / "timing.json";
  nlohmann::json timing = std::filesystem::exists(timing_path) ? read_json(timing_path) : nlohmann::json::object();
  timing["benchmark"] = stats.to_json();
  timing["benchmark"]["backbone"] = model::backbone_name(config.backbone);
  timing["config_hash"] = config.hash();
  write_json(timing_path, timing);
  say(log, fmt::format("{} repeats over {} images: min {:.3f} s, median {:.3f} s, mean {:.3f} s", repeats,
                       stats.images, stats.min, stats.median, stats.mean));
  return stats;
}

void render_run_figures(const std::filesystem::path& run_dir) {
  if (std::filesystem::exists(run_dir / "history.csv")) {
    const auto figures = report::plot_history(train::read_history_csv(run_dir / "history.csv"));
    report::write_png(figures.accuracy, run_dir / "accuracy.png");
    report::write_png(figures.loss, run_dir / "loss.png");
  }
  const report::RunArtifacts run = report::load_run(run_dir);
  report::write_png(report::plot_confusion(run.metrics.confusion), run_dir / "confusion.png");
}

metrics::MetricReport metrics_from_predictions(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot read {}", csv.string()));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kEmptyInput, fmt::format("{} is empty", csv.string()));
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "index" || header[1] != "true")
    throw Error(ErrorKind::kUsage, fmt::format("{}: expected columns index,true,pred or index,true,p0..pK", csv.string()));
  std::vector<int> prob_cols;
  int pred_col = -1;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c] == "pred") {
      pred_col = static_cast<int>(c);
    } else if (header[c] == fmt::format("p{}", prob_cols.size())) {
      prob_cols.push_back(static_cast<int>(c));
    } else {
      throw Error(ErrorKind::kUsage, fmt::format("{}: unexpected column '{}'", csv.string(), header[c]));
    }
  }
  std::vector<int> y_true, y_pred;
  std::vector<float> probs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::kLengthMismatch, fmt::format("{}: row '{}' has {} cells", csv.string(), line, cells.size()));
    y_true.push_back(std::stoi(cells[1]));
    if (pred_col >= 0) y_pred.push_back(std::stoi(cells[static_cast<std::size_t>(pred_col)]));
    for (const int c : prob_cols) probs.push_back(std::stof(cells[static_cast<std::size_t>(c)]));
  }
  if (!prob_cols.empty()) {
    // Probabilities, when present, define the prediction (argmax rule).
    Tensor p({static_cast<std::int64_t>(y_true.size()), static_cast<std::int64_t>(prob_cols.size())});
    std::copy(probs.begin(), probs.end(), p.data());
    return metrics::full_report(y_true, p);
  }
  if (pred_col < 0) throw Error(ErrorKind::kUsage, fmt::format("{}: no pred or probability columns", csv.string()));
  int k = kNumClasses;
  for (const int v : y_true) k = std::max(k, v + 1);
  for (const int v : y_pred) k = std::max(k, v + 1);
  return metrics::report_from_labels(y_true, y_pred, k);
}

}  // namespace tumorbench::pipeline
