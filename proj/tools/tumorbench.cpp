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

// Command-line front end: ingest, preprocess, split, train, evaluate,
// predict, benchmark, report, compare, metrics and synthesize.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 config error.
// Failures print one JSON object {"error": kind, "message": text} to stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tumorbench/error.hpp"
#include "tumorbench/experiment.hpp"
#include "tumorbench/pipeline.hpp"
#include "tumorbench/report.hpp"
#include "tumorbench/synthetic.hpp"

namespace {

using namespace tumorbench;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;

void progress(const std::string& message) { std::fprintf(stderr, "[tumorbench] %s\n", message.c_str()); }

int fail(std::string_view kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

// Flags shared by the subcommands that take an experiment config.
struct ConfigFlags {
  std::string config;
  std::string data_dir;
  std::string run_dir;
  std::string backbone;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> batch_size;

  void add_to(CLI::App* app, bool config_required) {
    auto* opt = app->add_option("--config", config, "Experiment config (JSON)");
    if (config_required) opt->required();
    app->add_option("--data-dir", data_dir, "Directory of .mat slices");
    app->add_option("--run-dir", run_dir, "Run directory for all outputs");
    app->add_option("--backbone", backbone, "xception | resnet50v2 | inception_resnet_v2 | densenet201");
    app->add_option("--seed", seed, "Seed for every stochastic component");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--batch-size", batch_size, "Batch size");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : ExperimentConfig::load(config);
    if (!data_dir.empty()) c.data_dir = data_dir;
    if (!run_dir.empty()) c.run_dir = run_dir;
    if (!backbone.empty()) {
      try {
        c.backbone = model::parse_backbone(backbone);
      } catch (const Error& e) {
        throw Error(ErrorKind::kConfig, e.what());
      }
    }
    if (seed) c.apply_seed(*seed);
    if (epochs) c.train.epochs = *epochs;
    if (batch_size) c.train.batch_size = *batch_size;
    try {
      c.train.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::kConfig, e.what());
    }
    return c;
  }
};

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error(ErrorKind::kIo, fmt::format("cannot write {}", out));
  f << text;
}

std::string render(const report::ComparisonTable& table, const std::string& format) {
  return format == "csv" ? table.to_csv() : table.to_markdown();
}

int run(int argc, char** argv) {
  CLI::App app{"Brain-MRI tumor classification: data, training, evaluation and reports"};
  app.require_subcommand(1);

  ConfigFlags ingest_flags, preprocess_flags, split_flags, train_flags;
  std::string out, format = "md", model_path, image_path, predictions_path, run_dir;
  std::vector<std::string> run_dirs;
  int repeats = 3, batch_size = 32;
  std::int64_t per_class = 20, side = 512, patients = 0;
  std::uint64_t synth_seed = 0;

  auto* ingest = app.add_subcommand("ingest", "Parse the data directory and print a manifest summary");
  ingest_flags.add_to(ingest, false);
  ingest->add_option("--out", out, "Also write a single-file manifest cache (HDF5)");

  auto* preprocess = app.add_subcommand("preprocess", "Build the preprocessed tensor cache");
  preprocess_flags.add_to(preprocess, true);

  auto* split = app.add_subcommand("split", "Write splits.json for the configured split");
  split_flags.add_to(split, true);
  split->add_option("--out", out, "Output path (default <run-dir>/splits.json)");

  auto* train = app.add_subcommand("train", "Fine-tune a backbone and evaluate the best checkpoint");
  train_flags.add_to(train, true);

  auto* evaluate = app.add_subcommand("evaluate", "Re-evaluate a run's best checkpoint on its test split");
  evaluate->add_option("--run-dir", run_dir, "Run directory")->required();
  evaluate->add_option("--batch-size", batch_size, "Batch size");

  auto* predict = app.add_subcommand("predict", "Classify one .mat slice");
  predict->add_option("--model", model_path, "Saved model (best.ckpt)")->required();
  predict->add_option("--image", image_path, "MAT slice")->required();
  predict->add_option("--config", out, "Config for preprocessing (default: config.json next to the model)");

  auto* benchmark = app.add_subcommand("benchmark", "Time inference over a run's test split");
  benchmark->add_option("--run-dir", run_dir, "Run directory")->required();
  benchmark->add_option("--repeats", repeats, "Timed passes")->check(CLI::PositiveNumber);
  benchmark->add_option("--batch-size", batch_size, "Batch size");

  auto* report_cmd = app.add_subcommand("report", "Render tables and figures for one run");
  report_cmd->add_option("--run-dir", run_dir, "Run directory")->required();
  report_cmd->add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "md"}));
  report_cmd->add_option("--out", out, "Table output file (default stdout)");

  auto* compare = app.add_subcommand("compare", "Table of several runs, one row per backbone");
  compare->add_option("runs", run_dirs, "Run directories")->required();
  compare->add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "md"}));
  compare->add_option("--out", out, "Output file (default stdout)");

  auto* metrics_cmd = app.add_subcommand("metrics", "Metrics from an external predictions CSV");
  metrics_cmd->add_option("--predictions", predictions_path, "CSV: index,true,pred or index,true,p0..pK")->required();
  metrics_cmd->add_option("--out", out, "metrics.json output (default stdout)");

  auto* synth = app.add_subcommand("synthesize", "Write a synthetic phantom dataset in the MAT layout");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--per-class", per_class, "Slices per class")->check(CLI::PositiveNumber);
  synth->add_option("--side", side, "Slice side in pixels")->check(CLI::Range(16, 4096));
  synth->add_option("--patients", patients, "Distinct patient ids (0: one per slice)");
  synth->add_option("--seed", synth_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    const auto parsed = app.get_subcommands();
    std::cerr << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitUsage;
  }

  try {
    if (*ingest) {
      const ExperimentConfig c = ingest_flags.resolve();
      const DatasetManifest m = pipeline::ingest(c);
      if (!out.empty()) write_manifest_cache(out, m);
      nlohmann::json j = {{"total", m.total},
                          {"class_counts",
                           {{"meningioma", m.class_counts[0]}, {"glioma", m.class_counts[1]}, {"pituitary", m.class_counts[2]}}}};
      std::cout << j.dump(2) << '\n';
    } else if (*preprocess) {
      const ExperimentConfig c = preprocess_flags.resolve();
      if (c.run_dir.empty() && c.cache_dir.empty() && std::getenv("TUMORBENCH_CACHE_DIR") == nullptr)
        throw Error(ErrorKind::kConfig, "set run_dir, cache_dir or TUMORBENCH_CACHE_DIR");
      const auto path = pipeline::ensure_cache(c, pipeline::ingest(c), progress);
      std::cout << path.string() << '\n';
    } else if (*split) {
      const ExperimentConfig c = split_flags.resolve();
      const DatasetManifest m = pipeline::ingest(c);
      const DatasetSplit s = pipeline::make_split(c, m);
      nlohmann::json j = split_to_json(s, c.split);
      j["config_hash"] = c.hash();
      std::filesystem::path dest = out;
      if (dest.empty()) {
        if (c.run_dir.empty()) throw Error(ErrorKind::kConfig, "set --out or run_dir");
        dest = c.run_dir / "splits.json";
      }
      pipeline::write_json(dest, j);
      progress(fmt::format("train {} / val {} / test {} -> {}", s.train.size(), s.val.size(), s.test.size(),
                           dest.string()));
    } else if (*train) {
      const ExperimentConfig c = train_flags.resolve();
      pipeline::run_training(c, progress);
    } else if (*evaluate) {
      const auto r = pipeline::evaluate_run(run_dir, batch_size, progress);
      progress(fmt::format("accuracy {}%", report::percent(r.accuracy)));
    } else if (*predict) {
      model::ModelHandle handle = model::load_model(model_path);
      std::filesystem::path cfg_path = out.empty() ? std::filesystem::path(model_path).parent_path() / "config.json"
                                                   : std::filesystem::path(out);
      PreprocessConfig pre;
      if (std::filesystem::exists(cfg_path)) {
        nlohmann::json j = pipeline::read_json(cfg_path);
        j.erase("config_hash");
        pre = ExperimentConfig::from_json(j).preprocess;
      } else {
        pre.side = static_cast<int>(handle.backbone.input_shape.at(0));
        pre.scale_at = handle.input_prescaled ? ScaleAt::kPreprocess : ScaleAt::kModel;
      }
      const Tensor img = pipeline::prepare_slice(image_path, pre);
      Rng unused(0, 0);
      Tensor x = model::model_input(handle, img, unused, false);
      Shape s = x.shape();
      s.insert(s.begin(), 1);
      x.reshape(s);
      const Tensor p = model::predict(handle, x);
      const int cls = metrics::argmax_rows(p).front();
      nlohmann::json probs = nlohmann::json::object();
      for (int k = 0; k < handle.num_classes(); ++k)
        probs[std::string(class_name(class_from_index(k)))] = p[k];
      std::cout << nlohmann::json{{"label", class_name(class_from_index(cls))}, {"class_index", cls},
                                  {"probabilities", probs}}
                       .dump(2)
                << '\n';
    } else if (*benchmark) {
      const auto t = pipeline::benchmark_run(run_dir, repeats, batch_size, progress);
      std::cout << t.to_json().dump(2) << '\n';
    } else if (*report_cmd) {
      pipeline::render_run_figures(run_dir);
      emit(render(report::render_table({report::load_run(run_dir)}), format), out);
    } else if (*compare) {
      std::vector<report::RunArtifacts> runs;
      for (const auto& d : run_dirs) runs.push_back(report::load_run(d));
      emit(render(report::render_table(std::move(runs)), format), out);
    } else if (*metrics_cmd) {
      const auto r = pipeline::metrics_from_predictions(predictions_path);
      emit(r.to_json().dump(2) + "\n", out);
    } else if (*synth) {
      const auto paths = synthetic::write_dataset(out, {per_class, side, synth_seed, patients});
      progress(fmt::format("wrote {} slices to {}", paths.size(), out));
    }
  } catch (const Error& e) {
    const ErrorKind k = e.kind();
    const int code = k == ErrorKind::kUsage ? kExitUsage : k == ErrorKind::kConfig ? kExitConfig : kExitRuntime;
    return fail(error_kind_name(k), e.what(), code);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), kExitRuntime);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
