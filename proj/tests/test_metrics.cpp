#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "mmcyto/error.hpp"
#include "mmcyto/metrics.hpp"
#include "oracles.hpp"

using namespace mmcyto;

TEST(Confusion, Basics) {
  const std::vector<int> t{1, 0, 1, 1, 0, 0, 0, 1, 0, 0};
  const auto same = confusion(t, t);
  EXPECT_EQ(same.fp, 0);
  EXPECT_EQ(same.fn, 0);
  EXPECT_EQ(same.tp, 4);
  const std::vector<int> all(10, 1), three{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(confusion(all, three), (ConfusionCounts{0, 7, 0, 3}));
}

TEST(Confusion, Errors) {
  const std::vector<int> a{0, 1}, b{0}, c{0, 2};
  try {
    (void)confusion(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  EXPECT_THROW((void)confusion(a, c), Error);
}

TEST(Metrics, CafNetRow) {
  const ConfusionCounts c{415040, 34331, 12483, 114151};
  const auto m = compute_metrics(c);
  EXPECT_NEAR(m.accuracy, 0.91873, 1e-5);
  EXPECT_NEAR(m.f1, 0.82984, 1e-5);
  EXPECT_FALSE(m.roc_auc.has_value());
  EXPECT_TRUE(m.undefined.empty());
}

TEST(Metrics, MatchesRationalOracle) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> u(0, 60);
  for (int i = 0; i < 1000; ++i) {
    ConfusionCounts c{u(rng), u(rng), u(rng), u(rng)};
    if (c.total() == 0) continue;
    const auto m = compute_metrics(c);
    const auto o = oracle::rates(c.tn, c.fp, c.fn, c.tp);
    EXPECT_NEAR(m.accuracy, o.accuracy.value(), 1e-15);
    EXPECT_NEAR(m.f1, o.f1.value(), 1e-15);
    EXPECT_NEAR(m.recall, o.recall.value(), 1e-15);
    EXPECT_NEAR(m.precision, o.precision.value(), 1e-15);
  }
}

TEST(Metrics, ZeroDenominatorsFlagged) {
  const auto m = compute_metrics({10, 0, 0, 0});
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.undefined.size(), 3U);
  try {
    (void)compute_metrics({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCounts);
  }
}

TEST(Auc, SimpleCases) {
  const std::vector<int> t{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, t), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, t), 0.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, t), 0.5);
  try {
    (void)roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClass);
  }
}

TEST(Auc, MatchesPairwiseWithTies) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> lvl(0, 9), lab(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(50);
    std::vector<int> t(50);
    for (int i = 0; i < 50; ++i) {
      s[i] = lvl(rng) / 10.0;
      t[i] = i < 2 ? i : lab(rng);
    }
    EXPECT_NEAR(roc_auc(s, t), oracle::pairwise_auc(s, t), 1e-12);
  }
}

TEST(Auc, InvariantUnderMonotoneMap) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> s(80), e(80);
  std::vector<int> t(80);
  for (int i = 0; i < 80; ++i) {
    t[i] = i % 3 == 0;
    s[i] = n(rng) + t[i];
    e[i] = std::exp(3.0 * s[i]);
  }
  EXPECT_DOUBLE_EQ(roc_auc(s, t), roc_auc(e, t));
}

TEST(Summary, MeanStdAndPooled) {
  const std::vector<ConfusionCounts> f{{10, 2, 3, 5}, {8, 4, 1, 7}, {12, 0, 2, 6}};
  const auto s = summarize_folds(f, {0.8, 0.9, 0.85});
  EXPECT_EQ(s.folds, 3);
  EXPECT_EQ(s.pooled_counts, (ConfusionCounts{30, 6, 6, 18}));
  double mean = 0.0, sq = 0.0;
  for (const auto& c : f) mean += compute_metrics(c).f1 / 3.0;
  for (const auto& c : f) sq += std::pow(compute_metrics(c).f1 - mean, 2) / 3.0;
  EXPECT_NEAR(s.mean.f1, mean, 1e-15);
  EXPECT_NEAR(s.stddev.f1, std::sqrt(sq), 1e-15);
  EXPECT_NEAR(s.pooled.accuracy, 48.0 / 60.0, 1e-15);
  ASSERT_TRUE(s.mean.roc_auc.has_value());
  EXPECT_NEAR(*s.mean.roc_auc, 0.85, 1e-15);
  EXPECT_FALSE(summarize_folds(f, {0.8, std::nullopt, 0.85}).mean.roc_auc.has_value());
}

TEST(Aggregate, MirrorSet) {
  std::map<std::string, int> truth;
  const auto scores = fixture::patient_mirror_scores(truth);
  const auto preds = aggregate_patient(scores, 0.5, 0.6);
  ASSERT_EQ(preds.size(), 14U);
  std::vector<int> p, t;
  for (const auto& pr : preds) {
    p.push_back(pr.positive);
    t.push_back(truth[pr.patient_id]);
  }
  const auto c = confusion(p, t);
  EXPECT_EQ(c, (ConfusionCounts{7, 1, 0, 6}));
  const auto m = compute_metrics(c);
  EXPECT_EQ(std::round(m.f1 * 100) / 100, 0.92);
  EXPECT_EQ(std::round(m.accuracy * 100) / 100, 0.93);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(std::round(m.precision * 100) / 100, 0.86);
}

TEST(Aggregate, ThresholdIsInclusiveAndSorted) {
  std::map<std::string, std::vector<double>> s{{"b", {0.9, 0.9, 0.9, 0.1, 0.1}}, {"a", {0.51, 0.5}}};
  const auto p = aggregate_patient(s, 0.5, 0.6);
  ASSERT_EQ(p.size(), 2U);
  EXPECT_EQ(p[0].patient_id, "a");
  EXPECT_EQ(p[0].positive_cells, 1);
  EXPECT_FALSE(p[0].positive);
  EXPECT_TRUE(p[1].positive);
  EXPECT_DOUBLE_EQ(p[1].ratio, 0.6);
  EXPECT_THROW((void)aggregate_patient({{"x", {}}}), Error);
}
