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
#include <array>
#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tumorbench/error.hpp"
#include "tumorbench/metrics.hpp"
#include "tumorbench/rng.hpp"

namespace tumorbench::metrics {
namespace {

using testing::labels_from_counts;
using testing::oracle_metrics;

// Test-set confusion matrices recovered from the published heatmaps (rows
// actual meningioma, glioma, pituitary; n = 312).
const std::vector<std::int64_t> kResNet50V2 = {65, 0, 0, 1, 151, 0, 0, 0, 95};
const std::vector<std::int64_t> kXception = {62, 0, 3, 2, 150, 0, 0, 0, 95};

MetricReport report_for(const std::vector<std::int64_t>& counts, int k = 3) {
  std::vector<int> t, p;
  labels_from_counts(counts, k, t, p);
  return full_report(t, testing::one_hot_probs(p, k));
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kIo;
}

TEST(PublishedTable, ResNet50V2Row) {
  const MetricReport r = report_for(kResNet50V2);
  EXPECT_EQ(r.n, 312);
  EXPECT_NEAR(100 * r.accuracy, 99.68, 0.01);
  EXPECT_NEAR(100 * r.macro_precision, 99.49, 0.01);
  EXPECT_NEAR(100 * r.macro_recall, 99.78, 0.01);
  EXPECT_NEAR(100 * r.macro_f1, 99.64, 0.01);
  EXPECT_NEAR(100 * r.mae, 0.32, 0.01);
  EXPECT_NEAR(100 * r.mse, 0.32, 0.01);
  EXPECT_NEAR(100 * r.rmse, 5.66, 0.01);
}

TEST(PublishedTable, XceptionRow) {
  const MetricReport r = report_for(kXception);
  EXPECT_NEAR(100 * r.accuracy, 98.40, 0.01);
  EXPECT_NEAR(100 * r.macro_precision, 97.94, 0.01);
  EXPECT_NEAR(100 * r.macro_recall, 98.02, 0.01);
  EXPECT_NEAR(100 * r.macro_f1, 97.97, 0.01);
  EXPECT_NEAR(100 * r.mae, 1.60, 0.01);
  EXPECT_NEAR(100 * r.mse, 1.60, 0.01);
  EXPECT_NEAR(100 * r.rmse, 12.66, 0.01);
}

TEST(PublishedTable, CorrelationMetricsDivergeFromThePublishedValues) {
  const MetricReport r = report_for(kResNet50V2);
  EXPECT_NEAR(r.mcc_multiclass, 0.9949, 1e-4);
  EXPECT_NEAR(r.kappa_multiclass, 0.9949, 1e-4);
  EXPECT_NEAR(r.csi_macro, 0.9928, 1e-4);
  const auto j = r.to_json();
  EXPECT_EQ(j["published_divergence"]["not_reproduced"], true);
  EXPECT_DOUBLE_EQ(j["published_divergence"]["published"]["mcc"].get<double>(), 0.9969);
  EXPECT_DOUBLE_EQ(j["published_divergence"]["standard_formulas_on_published_confusion"]["mcc_multiclass"].get<double>(),
                   r.mcc_multiclass);
}

TEST(BruteForce, MatchesDirectCountingOracle) {
  Rng rng(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = std::array{2, 3, 5}[trial % 3];
    const auto n = static_cast<std::size_t>(1 + rng.uniform_int(200));
    std::vector<int> t(n), p(n);
    // Skewed predictions so some instances have empty classes and 0/0 terms.
    const double agree = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
      p[i] = rng.uniform() < agree ? t[i] : static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
    }
    const auto o = oracle_metrics(t, p, k);
    const MetricReport r = report_from_labels(t, p, k);
    ASSERT_NEAR(r.accuracy, o.accuracy, 1e-12);
    ASSERT_NEAR(r.macro_precision, o.precision, 1e-12);
    ASSERT_NEAR(r.macro_recall, o.recall, 1e-12);
    ASSERT_NEAR(r.macro_f1, o.f1, 1e-12);
    ASSERT_NEAR(r.csi_macro, o.csi, 1e-12);
    ASSERT_NEAR(r.mae, o.mae, 1e-12);
    ASSERT_NEAR(r.mse, o.mse, 1e-12);
    ASSERT_NEAR(r.rmse, o.rmse, 1e-12);
    ASSERT_NEAR(r.mcc_multiclass, o.mcc_multiclass, 1e-12);
    ASSERT_NEAR(r.mcc_macro_binary, o.mcc_macro_binary, 1e-12);
    ASSERT_NEAR(r.kappa_macro_binary, o.kappa_macro_binary, 1e-12);
    if (o.kappa_defined) {
      ASSERT_NEAR(r.kappa_multiclass, o.kappa_multiclass, 1e-12);
    } else {
      ASSERT_TRUE(std::isnan(r.kappa_multiclass));
    }
  }
}

TEST(Properties, InvariantUnderClassRelabelling) {
  Rng rng(7);
  const std::vector<int> perm = {2, 0, 4, 1, 3};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> t(150), p(150), tp(150), pp(150);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<int>(rng.uniform_int(5));
      p[i] = rng.uniform() < 0.6 ? t[i] : static_cast<int>(rng.uniform_int(5));
      tp[i] = perm[static_cast<std::size_t>(t[i])];
      pp[i] = perm[static_cast<std::size_t>(p[i])];
    }
    const auto a = report_from_labels(t, p, 5), b = report_from_labels(tp, pp, 5);
    EXPECT_NEAR(a.accuracy, b.accuracy, 1e-12);
    EXPECT_NEAR(a.macro_precision, b.macro_precision, 1e-12);
    EXPECT_NEAR(a.macro_recall, b.macro_recall, 1e-12);
    EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-12);
    EXPECT_NEAR(a.mcc_multiclass, b.mcc_multiclass, 1e-12);
    EXPECT_NEAR(a.kappa_multiclass, b.kappa_multiclass, 1e-12);
    EXPECT_NEAR(a.csi_macro, b.csi_macro, 1e-12);
  }
}

TEST(Properties, SampleOrderDoesNotMatter) {
  Rng rng(8);
  std::vector<int> t(90), p(90);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<int>(rng.uniform_int(3));
    p[i] = static_cast<int>(rng.uniform_int(3));
  }
  const auto a = report_from_labels(t, p, 3);
  std::reverse(t.begin(), t.end());
  std::reverse(p.begin(), p.end());
  const auto b = report_from_labels(t, p, 3);
  EXPECT_EQ(a.confusion.counts, b.confusion.counts);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Properties, IndependentRandomPredictionsHaveNearZeroCorrelation) {
  Rng rng(9);
  std::vector<int> t(30000), p(30000);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<int>(rng.uniform_int(3));
    p[i] = static_cast<int>(rng.uniform_int(3));
  }
  const auto r = report_from_labels(t, p, 3);
  EXPECT_LT(std::abs(r.mcc_multiclass), 0.03);
  EXPECT_LT(std::abs(r.kappa_multiclass), 0.03);
  EXPECT_NEAR(r.accuracy, 1.0 / 3.0, 0.02);
}

TEST(Properties, PerfectPredictionsScoreOne) {
  std::vector<int> t = {0, 1, 2, 2, 1, 0, 1};
  const auto r = report_from_labels(t, t, 3);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.mcc_multiclass, 1.0);
  EXPECT_EQ(r.kappa_multiclass, 1.0);
  EXPECT_EQ(r.csi_macro, 1.0);
  EXPECT_EQ(r.rmse, 0.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(ConfusionMatrix, CountsAndMarginals) {
  const std::vector<int> t = {0, 0, 1, 2, 2, 2}, p = {0, 1, 1, 2, 0, 2};
  const auto cm = confusion_matrix(t, p, 3);
  EXPECT_EQ(cm.counts, (std::vector<std::int64_t>{1, 1, 0, 0, 1, 0, 1, 0, 2}));
  EXPECT_EQ(cm.total(), 6);
  EXPECT_EQ(cm.trace(), 4);
  EXPECT_EQ(cm.row_sum(2), 3);
  EXPECT_EQ(cm.col_sum(0), 2);
  EXPECT_EQ(cm.class_order, (std::vector<std::string>{"meningioma", "glioma", "pituitary"}));
  const auto stats = class_stats(cm);
  EXPECT_EQ(stats[0].tp, 1);
  EXPECT_EQ(stats[0].fp, 1);
  EXPECT_EQ(stats[0].fn, 1);
  EXPECT_EQ(stats[0].tn, 3);
}

TEST(Errors, InputValidation) {
  const std::vector<int> a = {0, 1}, b = {0}, c = {0, 3};
  EXPECT_EQ(kind_of([&] { confusion_matrix(a, b, 3); }), ErrorKind::kLengthMismatch);
  EXPECT_EQ(kind_of([&] { confusion_matrix(a, c, 3); }), ErrorKind::kLabelOutOfRange);
  EXPECT_EQ(kind_of([&] { confusion_matrix(c, a, 3); }), ErrorKind::kLabelOutOfRange);
  const auto empty = confusion_matrix(std::vector<int>{}, std::vector<int>{}, 3);
  EXPECT_EQ(kind_of([&] { accuracy(empty); }), ErrorKind::kEmptyMatrix);
  EXPECT_EQ(kind_of([&] { error_metrics(std::vector<int>{}, std::vector<int>{}); }), ErrorKind::kEmptyInput);
  EXPECT_EQ(kind_of([&] { confusion_from_counts(3, {1, 2}); }), ErrorKind::kShapeError);
}

TEST(Errors, DegenerateMarginalsForKappa) {
  const std::vector<int> all_one(10, 1);
  const auto cm = confusion_matrix(all_one, all_one, 3);
  EXPECT_EQ(kind_of([&] { kappa(cm, Variant::kMulticlass); }), ErrorKind::kDegenerateMarginals);
  const auto r = report_from_labels(all_one, all_one, 3);
  EXPECT_TRUE(std::isnan(r.kappa_multiclass));
  bool noted = false;
  for (const auto& w : r.warnings) noted = noted || (w.metric == "kappa" && w.class_index == -1);
  EXPECT_TRUE(noted);
  const auto stored = nlohmann::json::parse(r.to_json().dump());
  EXPECT_TRUE(stored["kappa"]["multiclass"].is_null());
  EXPECT_TRUE(std::isnan(MetricReport::from_json(stored).kappa_multiclass));
}

TEST(Warnings, UndefinedPerClassTermsBecomeZero) {
  // Class 2 never occurs and is never predicted.
  const std::vector<int> t = {0, 1, 0, 1}, p = {0, 0, 0, 1};
  Warnings w;
  const auto prec = precision_per_class(confusion_matrix(t, p, 3), &w);
  EXPECT_EQ(prec[2], 0.0);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].metric, "precision");
  EXPECT_EQ(w[0].class_index, 2);
}

TEST(ErrorMetrics, MisclassificationIndicator) {
  const std::vector<int> t = {0, 1, 2, 2}, p = {2, 1, 2, 0};
  const auto e = error_metrics(t, p);
  EXPECT_DOUBLE_EQ(e.mae, 0.5);
  EXPECT_DOUBLE_EQ(e.mse, 0.5);
  EXPECT_DOUBLE_EQ(e.rmse, std::sqrt(0.5));
  const auto from_cm = error_metrics(confusion_matrix(t, p, 3));
  EXPECT_DOUBLE_EQ(from_cm.mae, e.mae);
}

TEST(Argmax, LowestIndexWinsTies) {
  Tensor probs({3, 3}, std::vector<float>{0.2f, 0.4f, 0.4f, 0.5f, 0.5f, 0.0f, 0.1f, 0.1f, 0.8f});
  EXPECT_EQ(argmax_rows(probs), (std::vector<int>{1, 0, 2}));
}

TEST(MetricReport, JsonRoundTripIsLossless) {
  const MetricReport r = report_for(kXception);
  const auto j = r.to_json();
  const MetricReport back = MetricReport::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.to_json().dump(), j.dump());
  EXPECT_EQ(back.confusion.counts, kXception);
  EXPECT_EQ(j["variants"]["mcc"], "multiclass");
  EXPECT_EQ(j["per_class"]["glioma"]["fn"], 2);
}

}  // namespace
}  // namespace tumorbench::metrics
