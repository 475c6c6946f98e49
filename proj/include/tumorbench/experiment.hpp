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

#ifndef TUMORBENCH_EXPERIMENT_HPP_
#define TUMORBENCH_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tumorbench/augment.hpp"
#include "tumorbench/data_ingest.hpp"
#include "tumorbench/model.hpp"
#include "tumorbench/preprocess.hpp"
#include "tumorbench/train.hpp"

namespace tumorbench {

struct ReportOptions {
  std::vector<std::string> formats = {"csv", "md"};
  int percent_decimals = 2;
};

// One experiment, fully specified. `seed` is the single source of every
// stochastic choice: it becomes the split seed, the training seed (batch
// order and augmentation draws), the output-layer initializer seed and the
// backbone initializer seed.
struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path data_dir;
  std::filesystem::path run_dir;
  std::filesystem::path cache_dir;  // empty: $TUMORBENCH_CACHE_DIR, else <run_dir>/cache
  std::uint64_t seed = 0;
  SplitSpec split;
  PreprocessConfig preprocess;
  AugmentationConfig augmentation;
  model::BackboneKind backbone = model::BackboneKind::kResNet50V2;
  std::string weights_source = "imagenet";
  bool backbone_trainable = true;
  model::HeadConfig head;
  model::CompileConfig compile;
  train::TrainConfig train;
  ReportOptions report;

  // Pushes `seed` into every component.
  void apply_seed(std::uint64_t value);

  // Rejects unknown keys and invalid values with kConfig.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // 16 hex digits over the canonical JSON form.
  std::string hash() const;

  // Throws kConfig when a path the command needs does not exist.
  void require_data_dir() const;

  std::filesystem::path resolved_cache_dir() const;
};

// Allowed keys per section, mirrored by configs/experiment.schema.json.
const nlohmann::json& experiment_config_keys();

}  // namespace tumorbench

#endif  // TUMORBENCH_EXPERIMENT_HPP_
