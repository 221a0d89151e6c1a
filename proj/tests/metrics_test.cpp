// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "magnorm/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace magnorm {
namespace {

using testing::brute_mrr;
using testing::doc;
using testing::brute_ndcg;
using testing::brute_recall;
using testing::judgments;
using testing::ranking;

TEST(RankedListTest, ValidatesAndSorts) {
  EXPECT_THROW(RankedList("q", {{"a", 1.0}, {"a", 0.5}}), Error);
  EXPECT_THROW(RankedList("q", {{"a", 1.0}, {"b", 2.0}}), Error);
  const auto r = RankedList::from_scores("q", {{"c", 1.0}, {"b", 2.0}, {"a", 1.0}});
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r.entries()[0].doc_id, "b");
  EXPECT_EQ(r.entries()[1].doc_id, "a");
  EXPECT_EQ(r.entries()[2].doc_id, "c");
}

TEST(NdcgTest, Examples) {
  EXPECT_EQ(ndcg_at_k(ranking({0, 1, 2}), judgments({1, 0, 0}), 10), 1.0);
  EXPECT_NEAR(ndcg_at_k(ranking({1, 0, 2}), judgments({1, 0, 0}), 10), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_NEAR(1.0 / std::log2(3.0), 0.63093, 1e-5);
  EXPECT_EQ(ndcg_at_k(ranking({0, 1}), judgments({0, 0}), 10), 0.0);
}

TEST(NdcgTest, UsesExponentialGain) {
  // grades (1, 2) in that order: DCG = 1 + 3/log2(3); ideal = 3 + 1/log2(3).
  const double want = (1.0 + 3.0 / std::log2(3.0)) / (3.0 + 1.0 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(ranking({0, 1}), judgments({1, 2}), 10), want, 1e-15);
}

TEST(NdcgTest, IdealCountsRelevantDocumentsMissingFromTheRun) {
  Qrels q = judgments({1, 0});
  q["q"]["unretrieved"] = 1;
  const double want = 1.0 / (1.0 + 1.0 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(ranking({0, 1}), q, 10), want, 1e-15);
}

TEST(MetricErrorsTest, UnknownQueryAndBadK) {
  const Qrels other{{"x", {{"d0", 1}}}};
  for (auto fn : {&ndcg_at_k, &recall_at_k, &mrr_at_k}) {
    try {
      fn(ranking({0}), other, 10);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kUnknownQuery);
    }
    EXPECT_THROW(fn(ranking({0}), judgments({1}), 0), Error);
  }
}

TEST(RecallTest, Examples) {
  EXPECT_EQ(recall_at_k(ranking({0, 1, 2, 3}), judgments({1, 2, 0, 0}), 2), 1.0);
  EXPECT_EQ(recall_at_k(ranking({2, 3, 0, 1}), judgments({1, 2, 0, 0}), 2), 0.0);
  EXPECT_EQ(recall_at_k(ranking({0, 2, 1, 3}), judgments({1, 2, 0, 0}), 2), 0.5);
}

TEST(MrrTest, Examples) {
  EXPECT_EQ(mrr_at_k(ranking({0, 1, 2}), judgments({1, 0, 0}), 10), 1.0);
  EXPECT_EQ(mrr_at_k(ranking({1, 2, 0}), judgments({1, 0, 0}), 10), 1.0 / 3.0);
  EXPECT_EQ(mrr_at_k(ranking({1, 2, 0}), judgments({1, 0, 0}), 2), 0.0);
}

TEST(MetricOracleTest, AllPermutationsUpToSixDocuments) {
  testing::Rng rng(21);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 6; ++trial) {
      std::vector<int> grades(static_cast<std::size_t>(n));
      for (int& g : grades) g = rng.integer(0, 2);
      const Qrels qrels = judgments(grades);
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      do {
        const RankedList run = ranking(order);
        for (int k = 1; k <= n + 1; ++k) {
          ASSERT_EQ(ndcg_at_k(run, qrels, k), brute_ndcg(order, grades, k));
          ASSERT_EQ(recall_at_k(run, qrels, k), brute_recall(order, grades, k));
          ASSERT_EQ(mrr_at_k(run, qrels, k), brute_mrr(order, grades, k));
        }
      } while (std::next_permutation(order.begin(), order.end()));
    }
  }
}

TEST(MetricPropertyTest, PromotingARelevantDocumentNeverHurts) {
  testing::Rng rng(22);
  for (int t = 0; t < 2000; ++t) {
    const int n = rng.integer(2, 12);
    std::vector<int> grades(static_cast<std::size_t>(n));
    for (int& g : grades) g = rng.integer(0, 2);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    const int pos = rng.integer(1, n - 1);
    if (grades[order[pos]] == 0) continue;
    auto up = order;
    std::swap(up[pos], up[pos - 1]);
    if (grades[up[pos]] > grades[up[pos - 1]]) continue;  // only move a more relevant doc upward
    const Qrels q = judgments(grades);
    const int k = rng.integer(1, n);
    EXPECT_GE(ndcg_at_k(ranking(up), q, k), ndcg_at_k(ranking(order), q, k));
    EXPECT_GE(mrr_at_k(ranking(up), q, k), mrr_at_k(ranking(order), q, k));
    for (double v : {ndcg_at_k(ranking(order), q, k), recall_at_k(ranking(order), q, k),
                     mrr_at_k(ranking(order), q, k)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(CorrelationTest, PearsonExamples) {
  const std::vector<double> xs{1, 2, 3, 4};
  std::vector<double> lin, neg;
  for (double x : xs) {
    lin.push_back(2 * x + 1);
    neg.push_back(-x);
  }
  EXPECT_NEAR(pearson(xs, lin), 1.0, 1e-15);
  EXPECT_NEAR(pearson(xs, neg), -1.0, 1e-15);
  EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-15);
  EXPECT_THROW(pearson(xs, std::vector<double>{5, 5, 5, 5}), Error);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{2}), Error);
  EXPECT_THROW(pearson(xs, std::vector<double>{1, 2}), Error);
}

TEST(CorrelationTest, SpearmanExamples) {
  const std::vector<double> xs{0.1, 0.5, 2.0, 7.0};
  EXPECT_NEAR(spearman(xs, std::vector<double>{1, 10, 100, 1000}), 1.0, 1e-15);
  EXPECT_NEAR(spearman(xs, std::vector<double>{4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_EQ(average_ranks(std::vector<double>{1, 1, 2}), (std::vector<double>{1.5, 1.5, 3.0}));
  EXPECT_EQ(average_ranks(std::vector<double>{3, 1, 3, 2}), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(TrecIoTest, QrelsRoundTrip) {
  const Qrels q{{"q1", {{"a", 1}, {"b", 2}}}, {"q2", {{"c", 0}}}};
  std::stringstream ss;
  write_qrels(ss, q);
  EXPECT_EQ(read_qrels(ss), q);
  std::istringstream bad("q1 0 a\n");
  EXPECT_THROW(read_qrels(bad), Error);
}

TEST(TrecIoTest, RunRoundTripAndFormat) {
  const std::vector<RankedList> runs{RankedList::from_scores("q1", {{"a", 0.5}, {"b", 1.25}}),
                                     RankedList::from_scores("q2", {{"c", -1.0}})};
  std::stringstream ss;
  write_run(ss, runs, "tag");
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "q1 Q0 b 1 1.25 tag");
  const auto back = read_run(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].query_id(), "q1");
  EXPECT_EQ(back[0].entries()[0].doc_id, "b");
  EXPECT_EQ(back[0].entries()[1].score, 0.5);
  EXPECT_EQ(back[1].entries()[0].doc_id, "c");
}

TEST(EvaluateRunsTest, PerQueryRowsThenAll) {
  const Qrels q{{"q1", {{"a", 1}}}, {"q2", {{"z", 2}}}};
  const std::vector<RankedList> runs{RankedList::from_scores("q1", {{"a", 1.0}, {"b", 0.0}}),
                                     RankedList::from_scores("q2", {{"a", 1.0}, {"z", 0.0}})};
  const auto rows = evaluate_runs(runs, q, {{Metric::kNdcg, 10}, {Metric::kMrr, 10}});
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[4].query_id, "ALL");
  EXPECT_EQ(rows[4].metric, Metric::kNdcg);
  EXPECT_NEAR(rows[4].value, (1.0 + 1.0 / std::log2(3.0)) / 2.0, 1e-15);
  EXPECT_EQ(rows[5].value, 0.75);
  std::ostringstream csv;
  write_metrics_csv(csv, rows);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "query_id,metric,k,value");
}

}  // namespace
}  // namespace magnorm
