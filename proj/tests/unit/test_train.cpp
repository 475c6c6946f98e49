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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "test_utils.hpp"
#include "tumorbench/error.hpp"
#include "tumorbench/metrics.hpp"
#include "tumorbench/preprocess.hpp"
#include "tumorbench/synthetic.hpp"
#include "tumorbench/train.hpp"

namespace tumorbench::train {
namespace {

using testing::TempDir;

constexpr std::int64_t kSide = 32;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kIo;
}

// Preprocessed synthetic phantoms, classes interleaved.
MemorySource phantoms(int n, std::uint64_t seed = 1) {
  PreprocessConfig config;
  config.side = static_cast<int>(kSide);
  std::vector<Tensor> images;
  std::vector<int> labels;
  for (int i = 0; i < n; ++i) {
    const TumorClass label = class_from_index(i % kNumClasses);
    const TumorRecord rec = synthetic::make_record(label, std::to_string(i), 64, seed * 1000 + static_cast<std::uint64_t>(i));
    images.push_back(preprocess_pipeline(raw_image_from(rec), config));
    labels.push_back(static_cast<int>(label));
  }
  return MemorySource(std::move(images), std::move(labels));
}

model::ModelHandle fresh_model(std::uint64_t seed) {
  model::BackboneOptions o;
  o.weights_source = "random";
  o.seed = seed;
  o.input_shape = {kSide, kSide, 3};
  model::HeadConfig head;
  head.dense_out_seed = seed;
  model::ModelHandle h = model::attach_head(model::build_backbone(model::BackboneKind::kResNet50V2, o), head);
  model::compile_model(h);
  return h;
}

DatasetSplit simple_split() {
  DatasetSplit s;
  s.train = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  s.val = {9, 10, 11};
  s.test = {12, 13, 14};
  return s;
}

TrainConfig small_config(int epochs, std::uint64_t seed = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 4;
  c.seed = seed;
  return c;
}

TEST(Train, OneRecordPerEpochWithValidRanges) {
  TempDir dir("train");
  const MemorySource src = phantoms(15);
  model::ModelHandle h = fresh_model(1);
  const TrainResult r = train(h, simple_split(), src, small_config(5), dir / "best.ckpt");
  ASSERT_EQ(r.history.records.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& e = r.history.records[i];
    EXPECT_EQ(e.epoch, static_cast<int>(i) + 1);
    for (double acc : {e.train_accuracy, e.val_accuracy}) {
      EXPECT_GE(acc, 0.0);
      EXPECT_LE(acc, 1.0);
    }
    EXPECT_GE(e.train_loss, 0.0);
    EXPECT_GE(e.val_loss, 0.0);
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "best.ckpt"));
  EXPECT_TRUE(std::isfinite(r.first_batch_loss));
  EXPECT_GT(r.first_batch_loss, 0.0);
}

TEST(Train, SameSeedGivesIdenticalRuns) {
  TempDir dir("train");
  const MemorySource src = phantoms(15);
  model::ModelHandle a = fresh_model(2), b = fresh_model(2);
  const TrainResult ra = train(a, simple_split(), src, small_config(2), dir / "a.ckpt");
  const TrainResult rb = train(b, simple_split(), src, small_config(2), dir / "b.ckpt");
  for (std::size_t i = 0; i < ra.history.records.size(); ++i) {
    EXPECT_EQ(ra.history.records[i].train_loss, rb.history.records[i].train_loss);
    EXPECT_EQ(ra.history.records[i].val_loss, rb.history.records[i].val_loss);
  }
  const auto pa = a.graph.parameters(), pb = b.graph.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) ASSERT_EQ(pa[i]->value.values(), pb[i]->value.values()) << pa[i]->name;
}

TEST(Train, BestCheckpointReproducesItsValidationAccuracy) {
  TempDir dir("train");
  const MemorySource src = phantoms(15);
  model::ModelHandle h = fresh_model(4);
  const TrainResult r = train(h, simple_split(), src, small_config(3), dir / "best.ckpt");
  ASSERT_GE(r.best_epoch, 1);
  // Ties keep the earliest epoch: no earlier epoch reached the best value.
  for (int e = 0; e + 1 < r.best_epoch; ++e)
    EXPECT_LT(r.history.records[static_cast<std::size_t>(e)].val_accuracy, r.best_val_accuracy);
  EXPECT_EQ(r.history.records[static_cast<std::size_t>(r.best_epoch - 1)].val_accuracy, r.best_val_accuracy);
  model::ModelHandle best = model::load_model(r.best_checkpoint);
  const PredictionSet val = evaluate(best, simple_split().val, src, 4);
  const auto report = metrics::report_from_labels(val.y_true, val.y_pred, 3);
  EXPECT_DOUBLE_EQ(report.accuracy, r.best_val_accuracy);
}

TEST(Train, CallbackAndEarlyStopping) {
  TempDir dir("train");
  const MemorySource src = phantoms(15);
  model::ModelHandle h = fresh_model(5);
  int calls = 0;
  const TrainResult r = train(h, simple_split(), src, small_config(6), dir / "c.ckpt", [&](const EpochRecord&) {
    return ++calls < 2;
  });
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(r.history.records.size(), 2u);
  TrainConfig patient = small_config(8);
  patient.early_stop_patience = 1;
  model::ModelHandle h2 = fresh_model(5);
  const TrainResult r2 = train(h2, simple_split(), src, patient, dir / "d.ckpt");
  const auto n = static_cast<int>(r2.history.records.size());
  EXPECT_LE(n, 8);
  if (n < 8) {
    EXPECT_EQ(n - r2.best_epoch, 1);
  }
}

TEST(Train, EmptySplitsAndDivergence) {
  TempDir dir("train");
  const MemorySource src = phantoms(6);
  model::ModelHandle h = fresh_model(6);
  DatasetSplit no_train;
  no_train.val = {0};
  EXPECT_EQ(kind_of([&] { train(h, no_train, src, small_config(1), dir / "x.ckpt"); }), ErrorKind::kEmptySplit);
  DatasetSplit no_val;
  no_val.train = {0};
  EXPECT_EQ(kind_of([&] { train(h, no_val, src, small_config(1), dir / "x.ckpt"); }), ErrorKind::kEmptySplit);
  EXPECT_EQ(kind_of([&] { evaluate(h, {}, src); }), ErrorKind::kEmptySplit);

  model::ModelHandle poisoned = fresh_model(6);
  poisoned.graph.parameters().back()->value.fill(std::nanf(""));
  DatasetSplit s;
  s.train = {0, 1};
  s.val = {2};
  EXPECT_EQ(kind_of([&] { train(poisoned, s, src, small_config(1), dir / "p.ckpt"); }), ErrorKind::kDivergedLoss);
  EXPECT_TRUE(std::filesystem::exists(dir / "p.ckpt.diverged.json"));

  // A corrupt (NaN) input image surfaces as a diverged loss too.
  std::vector<Tensor> images = {Tensor({kSide, kSide, 3}, std::nanf("")), Tensor({kSide, kSide, 3}, 10.0f)};
  const MemorySource corrupt(std::move(images), {0, 1});
  DatasetSplit one;
  one.train = {0};
  one.val = {1};
  model::ModelHandle h2 = fresh_model(6);
  EXPECT_EQ(kind_of([&] { train(h2, one, corrupt, small_config(1), dir / "q.ckpt"); }), ErrorKind::kDivergedLoss);
}

TEST(EpochOrder, SeededPermutationPerEpoch) {
  std::vector<std::int64_t> idx(40);
  std::iota(idx.begin(), idx.end(), 100);
  const auto e0 = epoch_order(idx, 9, 0), e1 = epoch_order(idx, 9, 1);
  EXPECT_EQ(e0, epoch_order(idx, 9, 0));
  EXPECT_NE(e0, e1);
  EXPECT_NE(e0, epoch_order(idx, 10, 0));
  auto sorted = e1;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, idx);
}

TEST(History, CsvRoundTripIsExact) {
  TempDir dir("train");
  TrainingHistory h;
  h.records.push_back({1, 1.0986122886681098, 0.3333333333333333, 1.2, 0.1});
  h.records.push_back({2, 0.123456789012345678, 0.9, 1e-17, 1.0});
  write_history_csv(h, dir / "history.csv");
  const std::string text = testing::read_file(dir / "history.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,train_loss,train_acc,val_loss,val_acc");
  const TrainingHistory back = read_history_csv(dir / "history.csv");
  ASSERT_EQ(back.records.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.records[i].epoch, h.records[i].epoch);
    EXPECT_EQ(back.records[i].train_loss, h.records[i].train_loss);
    EXPECT_EQ(back.records[i].train_accuracy, h.records[i].train_accuracy);
    EXPECT_EQ(back.records[i].val_loss, h.records[i].val_loss);
    EXPECT_EQ(back.records[i].val_accuracy, h.records[i].val_accuracy);
  }
}

TEST(Evaluate, PredictionsFollowTheProbabilities) {
  TempDir dir("train");
  const MemorySource src = phantoms(7);
  model::ModelHandle h = fresh_model(7);
  const std::vector<std::int64_t> idx = {6, 0, 3, 2, 5};
  const PredictionSet p = evaluate(h, idx, src, 2);
  ASSERT_EQ(p.y_prob.shape(), (Shape{5, 3}));
  EXPECT_EQ(p.y_pred, metrics::argmax_rows(p.y_prob));
  EXPECT_EQ(p.indices, idx);
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(p.y_true[i], src.label(idx[i]));
  EXPECT_GT(p.wall_seconds, 0.0);
  const PredictionSet q = evaluate(h, idx, src, 5);
  for (std::int64_t i = 0; i < p.y_prob.size(); ++i) EXPECT_NEAR(p.y_prob[i], q.y_prob[i], 1e-6);
  write_predictions_csv(p, dir / "pred.csv");
  const std::string text = testing::read_file(dir / "pred.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "index,true,pred,p0,p1,p2");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

TEST(Timing, OrderStatistics) {
  const TimingStats odd = summarize_timings({3.0, 1.0, 2.0});
  EXPECT_EQ(odd.min, 1.0);
  EXPECT_EQ(odd.median, 2.0);
  EXPECT_EQ(odd.mean, 2.0);
  const TimingStats even = summarize_timings({4.0, 1.0, 3.0, 2.0});
  EXPECT_EQ(even.median, 2.5);
  EXPECT_EQ(kind_of([] { summarize_timings({}); }), ErrorKind::kEmptyInput);
}

TEST(Timing, BenchmarkRepeatsAndIdenticalOutputs) {
  const MemorySource src = phantoms(4);
  model::ModelHandle h = fresh_model(8);
  const TimingStats t = benchmark_predict(h, {0, 1, 2, 3}, src, 3, 2);
  EXPECT_EQ(t.samples.size(), 3u);
  EXPECT_EQ(t.images, 4);
  EXPECT_TRUE(t.outputs_identical);
  EXPECT_LE(t.min, t.median);
  const auto j = t.to_json();
  EXPECT_EQ(j["samples"].size(), 3u);
}

TEST(TrainConfig, ValidationAndJson) {
  TrainConfig c;
  EXPECT_EQ(c.epochs, 30);
  EXPECT_EQ(c.batch_size, 32);
  c.epochs = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kConfig);
  c.epochs = 3;
  c.batch_size = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kConfig);
  c.batch_size = 2;
  c.checkpoint_policy = "last";
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kConfig);
  c.checkpoint_policy = "best_val_accuracy";
  c.early_stop_patience = 4;
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.epochs, 3);
  EXPECT_EQ(back.early_stop_patience, 4);
}

}  // namespace
}  // namespace tumorbench::train
