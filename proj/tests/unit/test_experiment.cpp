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

#include <array>
#include <filesystem>
#include <functional>
#include <set>

#include <gtest/gtest.h>

#include "test_utils.hpp"
#include "tumorbench/error.hpp"
#include "tumorbench/experiment.hpp"

namespace tumorbench {
namespace {

using testing::TempDir;

const std::filesystem::path kConfigs = std::filesystem::path(TUMORBENCH_SOURCE_DIR) / "configs";

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kIo;
}

std::set<std::string> keys_of(const nlohmann::json& object) {
  std::set<std::string> out;
  for (const auto& [k, v] : object.items()) out.insert(k);
  return out;
}

std::set<std::string> allowed(const std::string& section) {
  const auto v = experiment_config_keys().at(section).get<std::vector<std::string>>();
  return {v.begin(), v.end()};
}

TEST(ExperimentConfig, UnknownKeysAreRejectedInEverySection) {
  EXPECT_EQ(kind_of([] { ExperimentConfig::from_json({{"epochs", 3}}); }), ErrorKind::kConfig);
  for (const auto& [section, keys] : experiment_config_keys().items()) {
    if (section.empty()) continue;
    nlohmann::json j = nlohmann::json::object();
    nlohmann::json* node = &j;
    std::string rest = section;
    for (std::size_t dot; (dot = rest.find('.')) != std::string::npos; rest = rest.substr(dot + 1))
      node = &(*node)[rest.substr(0, dot)];
    (*node)[rest] = {{"bogus_key", 1}};
    try {
      ExperimentConfig::from_json(j);
      ADD_FAILURE() << section << " accepted an unknown key";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfig);
      EXPECT_NE(std::string(e.what()).find("bogus_key"), std::string::npos) << e.what();
    }
  }
}

TEST(ExperimentConfig, InvalidValuesAreConfigErrors) {
  for (const char* text : {R"({"seed": "x"})", R"({"backbone": "vgg16"})", R"({"head": {"num_classes": 4}})",
                           R"({"train": {"epochs": 0}})", R"({"report": {"formats": ["pdf"]}})",
                           R"({"split": {"train_frac": 0.9, "val_frac": 0.9, "test_frac": 0.1}})",
                           R"({"compile": {"optimizer": "sgd"}})", R"({"weights_source": ""})"}) {
    EXPECT_EQ(kind_of([&] { ExperimentConfig::from_json(nlohmann::json::parse(text)); }), ErrorKind::kConfig) << text;
  }
  TempDir dir("experiment");
  testing::write_file(dir / "bad.json", "{oops");
  EXPECT_EQ(kind_of([&] { ExperimentConfig::load(dir / "bad.json"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([&] { ExperimentConfig::load(dir / "absent.json"); }), ErrorKind::kConfig);
}

TEST(ExperimentConfig, SeedReachesEveryComponent) {
  const ExperimentConfig c = ExperimentConfig::from_json({{"seed", 4242}});
  EXPECT_EQ(c.seed, 4242u);
  EXPECT_EQ(c.split.seed, 4242u);
  EXPECT_EQ(c.train.seed, 4242u);
  EXPECT_EQ(c.head.dense_out_seed, 4242u);
  EXPECT_EQ(c.head.dense1_seed, 1377u);
}

TEST(ExperimentConfig, HashIsStableAndSensitive) {
  const ExperimentConfig a = ExperimentConfig::load(kConfigs / "reproduction_resnet50v2.json");
  const ExperimentConfig b = ExperimentConfig::from_json(a.to_json());
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  ExperimentConfig c = a;
  c.train.epochs = 29;
  EXPECT_NE(c.hash(), a.hash());
  c = a;
  c.apply_seed(1);
  EXPECT_NE(c.hash(), a.hash());
}

TEST(ExperimentConfig, SchemaMirrorsAllowedKeys) {
  const auto schema = nlohmann::json::parse(testing::read_file(kConfigs / "experiment.schema.json"));
  EXPECT_EQ(keys_of(schema["properties"]), allowed(""));
  EXPECT_FALSE(schema["additionalProperties"].get<bool>());
  for (const char* section : {"split", "preprocess", "augmentation", "head", "compile", "train", "report"}) {
    const auto& node = schema["properties"][section];
    EXPECT_EQ(keys_of(node["properties"]), allowed(section)) << section;
    EXPECT_FALSE(node["additionalProperties"].get<bool>()) << section;
  }
  EXPECT_EQ(keys_of(schema["properties"]["augmentation"]["properties"]["translation"]["properties"]),
            allowed("augmentation.translation"));
}

TEST(ExperimentConfig, ShippedConfigsLoad) {
  const ExperimentConfig r = ExperimentConfig::load(kConfigs / "reproduction_resnet50v2.json");
  EXPECT_EQ(r.backbone, model::BackboneKind::kResNet50V2);
  ASSERT_TRUE(r.split.exact_counts.has_value());
  EXPECT_EQ(*r.split.exact_counts, (std::array<std::int64_t, 3>{2452, 300, 312}));
  EXPECT_EQ(r.preprocess.side, 256);
  EXPECT_EQ(r.train.epochs, 30);
  EXPECT_EQ(r.train.batch_size, 32);
  EXPECT_EQ(r.compile.optimizer, "adamax");
  EXPECT_DOUBLE_EQ(r.compile.learning_rate, 1e-4);
  EXPECT_EQ(r.seed, 1377u);
  const ExperimentConfig s = ExperimentConfig::load(kConfigs / "smoke.json");
  EXPECT_EQ(s.weights_source, "random");
  EXPECT_EQ(s.train.epochs, 2);
}

TEST(ExperimentConfig, PathsAndCacheResolution) {
  ExperimentConfig c;
  EXPECT_EQ(kind_of([&] { c.require_data_dir(); }), ErrorKind::kConfig);
  c.data_dir = "/definitely/not/here";
  EXPECT_EQ(kind_of([&] { c.require_data_dir(); }), ErrorKind::kConfig);
  TempDir dir("experiment");
  c.data_dir = dir.path();
  EXPECT_NO_THROW(c.require_data_dir());
  c.run_dir = dir / "run";
  c.cache_dir = dir / "explicit";
  EXPECT_EQ(c.resolved_cache_dir(), dir / "explicit");
}

}  // namespace
}  // namespace tumorbench
