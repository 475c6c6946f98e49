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

#include "tumorbench/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tumorbench/error.hpp"

namespace tumorbench {

namespace {

void check_keys(const nlohmann::json& j, const std::string& section) {
  const std::string where = section.empty() ? "top level" : fmt::format("section '{}'", section);
  if (!j.is_object()) throw Error(ErrorKind::kConfig, fmt::format("{} must be a JSON object", where));
  const auto& allowed = experiment_config_keys().at(section);
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::kConfig, fmt::format("unknown key '{}' in {} (allowed: {})", key, where,
                                                  fmt::join(allowed.get<std::vector<std::string>>(), ", ")));
    }
  }
}

nlohmann::json without(nlohmann::json j, const char* key) {
  j.erase(key);
  return j;
}

}  // namespace

const nlohmann::json& experiment_config_keys() {
  static const nlohmann::json keys = {
      {"",
       {"name", "data_dir", "run_dir", "cache_dir", "seed", "split", "preprocess", "augmentation", "backbone",
        "weights_source", "backbone_trainable", "head", "compile", "train", "report"}},
      {"split", {"train_frac", "val_frac", "test_frac", "shuffle_buffer", "exact_counts", "stratified", "patient_grouped"}},
      {"preprocess", {"side", "interpolation", "sharpen_kernel", "scale_at"}},
      {"augmentation",
       {"flip_horizontal", "rotation1_max_deg", "zoom_frac", "contrast_frac", "rescale", "rotation2_max_deg",
        "translation", "enabled", "rotation_units"}},
      {"augmentation.translation", {"height_frac", "width_frac", "fill", "interpolation"}},
      {"head", {"dense_units", "dense1_seed", "dense_out_range", "bn_momentum", "bn_epsilon", "num_classes"}},
      {"compile", {"optimizer", "learning_rate", "beta_1", "beta_2", "epsilon", "loss", "metric"}},
      {"train", {"epochs", "batch_size", "early_stop_patience", "checkpoint_policy"}},
      {"report", {"formats", "percent_decimals"}},
  };
  return keys;
}

void ExperimentConfig::apply_seed(std::uint64_t value) {
  seed = value;
  split.seed = value;
  train.seed = value;
  head.dense_out_seed = value;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  try {
    check_keys(j, "");
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    if (j.contains("data_dir")) c.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("run_dir")) c.run_dir = j["run_dir"].get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
    if (j.contains("split")) {
      check_keys(j["split"], "split");
      c.split = SplitSpec::from_json(j["split"]);
      // The manifest size is unknown here, so exact counts are only checked for sign.
      const auto& counts = c.split.exact_counts;
      c.split.validate(counts ? (*counts)[0] + (*counts)[1] + (*counts)[2] : 0);
    }
    if (j.contains("preprocess")) {
      check_keys(j["preprocess"], "preprocess");
      c.preprocess = PreprocessConfig::from_json(j["preprocess"]);
    }
    if (j.contains("augmentation")) {
      check_keys(j["augmentation"], "augmentation");
      if (j["augmentation"].contains("translation"))
        check_keys(j["augmentation"]["translation"], "augmentation.translation");
      c.augmentation = AugmentationConfig::from_json(j["augmentation"]);
    }
    if (j.contains("backbone")) c.backbone = model::parse_backbone(j["backbone"].get<std::string>());
    c.weights_source = j.value("weights_source", c.weights_source);
    c.backbone_trainable = j.value("backbone_trainable", c.backbone_trainable);
    if (j.contains("head")) {
      check_keys(j["head"], "head");
      c.head = model::HeadConfig::from_json(j["head"]);
    }
    if (j.contains("compile")) {
      check_keys(j["compile"], "compile");
      c.compile = model::CompileConfig::from_json(j["compile"]);
      c.compile.validate();
    }
    if (j.contains("train")) {
      check_keys(j["train"], "train");
      c.train = train::TrainConfig::from_json(j["train"]);
    }
    if (j.contains("report")) {
      check_keys(j["report"], "report");
      c.report.formats = j["report"].value("formats", c.report.formats);
      c.report.percent_decimals = j["report"].value("percent_decimals", c.report.percent_decimals);
      for (const auto& f : c.report.formats)
        if (f != "csv" && f != "md") throw Error(ErrorKind::kConfig, fmt::format("unknown report format '{}'", f));
      if (c.report.percent_decimals < 0 || c.report.percent_decimals > 10)
        throw Error(ErrorKind::kConfig, "report.percent_decimals must lie in [0, 10]");
    }
    c.apply_seed(j.value("seed", std::uint64_t{0}));
    if (c.head.num_classes != kNumClasses)
      throw Error(ErrorKind::kConfig, fmt::format("head.num_classes must be {}", kNumClasses));
    if (c.weights_source.empty()) throw Error(ErrorKind::kConfig, "weights_source must not be empty");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, fmt::format("invalid config value: {}", e.what()));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw Error(ErrorKind::kConfig, e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, fmt::format("cannot read config {}", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
  }
  return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"name", name},
          {"data_dir", data_dir.string()},
          {"run_dir", run_dir.string()},
          {"cache_dir", cache_dir.string()},
          {"seed", seed},
          {"split", without(split.to_json(), "seed")},
          {"preprocess", preprocess.to_json()},
          {"augmentation", augmentation.to_json()},
          {"backbone", model::backbone_name(backbone)},
          {"weights_source", weights_source},
          {"backbone_trainable", backbone_trainable},
          {"head", without(head.to_json(), "dense_out_seed")},
          {"compile", compile.to_json()},
          {"train", without(train.to_json(), "seed")},
          {"report", {{"formats", report.formats}, {"percent_decimals", report.percent_decimals}}}};
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

void ExperimentConfig::require_data_dir() const {
  if (data_dir.empty()) throw Error(ErrorKind::kConfig, "data_dir is not set");
  if (!std::filesystem::is_directory(data_dir))
    throw Error(ErrorKind::kConfig, fmt::format("data_dir {} does not exist", data_dir.string()));
}

std::filesystem::path ExperimentConfig::resolved_cache_dir() const {
  if (!cache_dir.empty()) return cache_dir;
  if (const char* env = std::getenv("TUMORBENCH_CACHE_DIR"); env != nullptr && *env != '\0') return env;
  return run_dir / "cache";
}

}  // namespace tumorbench
