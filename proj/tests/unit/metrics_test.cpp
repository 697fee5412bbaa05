#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "supertc/error.hpp"
#include "supertc/metrics.hpp"

namespace supertc {
namespace {

TEST(ConfusionTest, Examples) {
  const std::vector<int> a{1, 0, 1};
  EXPECT_EQ(confusion(a, a), (ConfusionCounts{2, 0, 1, 0}));
  const std::vector<int> p{1, 1}, l{0, 0};
  EXPECT_EQ(confusion(p, l).fp, 2u);
}

TEST(ConfusionTest, Errors) {
  const std::vector<int> one{1}, two{1, 0}, none;
  try {
    confusion(one, two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
  try {
    confusion(none, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmpty);
  }
}

TEST(ConfusionTest, AllOnesPredictorOnSeventySixPercentSet) {
  std::vector<int> labels(100, 0);
  std::fill(labels.begin(), labels.begin() + 76, 1);
  const std::vector<int> preds(100, 1);
  const auto m = classification_metrics(confusion(preds, labels));
  EXPECT_EQ(*m.recall, 1.0);
  EXPECT_DOUBLE_EQ(*m.precision, 0.76);
}

TEST(ClassificationMetricsTest, F1FromPrecisionRecall) {
  EXPECT_NEAR(*f1_score(0.85, 0.94), 0.8927374301675978, 1e-12);
  EXPECT_NEAR(*f1_score(0.85, 0.95), 0.8972222222222223, 1e-12);
  EXPECT_NEAR(*f1_score(0.88, 0.92), 0.8995555555555556, 1e-12);
  EXPECT_FALSE(f1_score(std::nullopt, 0.5).has_value());
  EXPECT_FALSE(f1_score(0.0, 0.0).has_value());
}

TEST(ClassificationMetricsTest, UndefinedPrecision) {
  const auto m = classification_metrics(ConfusionCounts{0, 0, 3, 2});
  EXPECT_FALSE(m.precision.has_value());
  EXPECT_EQ(*m.recall, 0.0);
  EXPECT_FALSE(m.f1.has_value());
  EXPECT_DOUBLE_EQ(m.accuracy, 0.6);
}

TEST(ClassificationMetricsTest, UndefinedRecall) {
  const auto m = classification_metrics(ConfusionCounts{0, 2, 3, 0});
  EXPECT_EQ(*m.precision, 0.0);
  EXPECT_FALSE(m.recall.has_value());
}

TEST(MajorityBaselineTest, FullDatasetCounts) {
  std::vector<int> labels(16414, 0);
  std::fill(labels.begin(), labels.begin() + 12499, 1);
  const MajorityBaseline b = majority_baseline(labels);
  EXPECT_EQ(b.predicted_class, 1);
  EXPECT_EQ(b.metrics.accuracy, 12499.0 / 16414.0);
  EXPECT_EQ(*b.metrics.precision, 12499.0 / 16414.0);
  EXPECT_EQ(*b.metrics.recall, 1.0);
  EXPECT_NEAR(b.metrics.accuracy, 0.7615, 5e-5);
}

TEST(MajorityBaselineTest, SmallCases) {
  const std::vector<int> l1{0, 0, 1};
  const MajorityBaseline b = majority_baseline(l1);
  EXPECT_EQ(b.predicted_class, 0);
  EXPECT_DOUBLE_EQ(b.metrics.accuracy, 2.0 / 3.0);
  EXPECT_EQ(*b.metrics.recall, 0.0);
  const std::vector<int> l2{1};
  EXPECT_EQ(majority_baseline(l2).metrics.accuracy, 1.0);
  const std::vector<int> tie{0, 1};
  EXPECT_EQ(majority_baseline(tie).predicted_class, 1);
  EXPECT_THROW(majority_baseline(std::vector<int>{}), Error);
}

// Property: accuracy equals max(share, 1 - share).
TEST(MajorityBaselineProperty, AccuracyIsMajorityShare) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<int> labels(n);
    std::size_t ones = 0;
    for (auto& l : labels) ones += static_cast<std::size_t>(l = static_cast<int>(rng() % 2));
    const double share = static_cast<double>(ones) / static_cast<double>(n);
    EXPECT_DOUBLE_EQ(majority_baseline(labels).metrics.accuracy, std::max(share, 1.0 - share));
  }
}

TEST(RegressionMaeTest, Examples) {
  const std::vector<double> a{1.5, 2.5};
  EXPECT_EQ(regression_mae(a, a), 0.0);
  EXPECT_EQ(regression_mae(std::vector<double>{2, 4}, std::vector<double>{0, 0}), 3.0);
  EXPECT_THROW(regression_mae(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(regression_mae(std::vector<double>{}, std::vector<double>{}), Error);
}

// Properties: shift detection and permutation invariance.
TEST(MetricsProperty, ShiftAndPermutation) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> tc_dist(0.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    std::vector<double> truth(n);
    std::vector<int> labels(n), preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = tc_dist(rng);
      labels[i] = static_cast<int>(rng() % 2);
      preds[i] = static_cast<int>(rng() % 2);
    }
    std::vector<double> shifted = truth;
    for (double& v : shifted) v += 0.25;
    EXPECT_NEAR(regression_mae(shifted, truth), 0.25, 1e-12);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> p2(n), l2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p2[i] = preds[perm[i]];
      l2[i] = labels[perm[i]];
    }
    EXPECT_EQ(confusion(preds, labels), confusion(p2, l2));
  }
}

// Property: F1 is the harmonic mean whenever both inputs are defined.
TEST(MetricsProperty, F1HarmonicIdentity) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const ConfusionCounts c{rng() % 20, rng() % 20, rng() % 20, rng() % 20};
    if (c.total() == 0) continue;
    const auto m = classification_metrics(c);
    EXPECT_GE(m.accuracy, 0.0);
    EXPECT_LE(m.accuracy, 1.0);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0) {
      ASSERT_TRUE(m.f1.has_value());
      EXPECT_NEAR(*m.f1, 2 * *m.precision * *m.recall / (*m.precision + *m.recall), 1e-12);
    }
  }
}

TEST(AggregateTest, MeanAndSampleSd) {
  const MeanSd s = mean_sd(std::vector<double>{4.0, 5.0});
  EXPECT_EQ(*s.mean, 4.5);
  EXPECT_NEAR(*s.sd, 0.7071067811865476, 1e-15);
  const MeanSd same = mean_sd(std::vector<double>{3.0, 3.0, 3.0});
  EXPECT_EQ(*same.sd, 0.0);
  const MeanSd one = mean_sd(std::vector<double>{3.0});
  EXPECT_EQ(*one.mean, 3.0);
  EXPECT_FALSE(one.sd.has_value());
  EXPECT_FALSE(mean_sd(std::vector<double>{}).mean.has_value());
}

TEST(AggregateTest, SkipsUndefinedFieldsAndRejectsEmpty) {
  MetricsReport a, b;
  a.accuracy = 0.8;
  b.accuracy = 0.9;
  a.precision = 0.5;
  const std::vector<MetricsReport> reports{a, b};
  const AggregateReport agg = aggregate(reports);
  EXPECT_NEAR(*agg.at("accuracy").mean, 0.85, 1e-15);
  EXPECT_EQ(agg.at("class_accuracy").mean, agg.at("accuracy").mean);
  EXPECT_EQ(agg.at("precision").n, 1u);
  EXPECT_FALSE(agg.at("precision").sd.has_value());
  EXPECT_FALSE(agg.at("recall").mean.has_value());
  EXPECT_THROW(aggregate(std::vector<MetricsReport>{}), Error);
}

TEST(FormatMeanSdTest, Rendering) {
  EXPECT_EQ(format_mean_sd(MeanSd{4.4974, 0.32811, 6}, 3), "4.497 ± 0.328");
  EXPECT_EQ(format_mean_sd(MeanSd{0.8304, 0.006, 6}, 2, 100.0), "83.04 ± 0.60");
  EXPECT_EQ(format_mean_sd(MeanSd{4.5, std::nullopt, 1}, 3), "4.500");
  EXPECT_EQ(format_mean_sd(MeanSd{}, 3), "NA");
}

TEST(EvaluatePredictionsTest, CombinesFields) {
  const std::vector<int> pl{1, 0, 1, 1}, l{1, 0, 0, 1};
  const std::vector<double> pt{10, 0, 3, 20}, t{12, 0, 0, 20};
  const MetricsReport r = evaluate_predictions(pl, pt, l, t);
  EXPECT_EQ(r.count, 4u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(*r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.reg_mae_kelvin, 5.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.mean_tc, 8.0);
}

}  // namespace
}  // namespace supertc
