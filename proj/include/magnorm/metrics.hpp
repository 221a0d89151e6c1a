// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#ifndef MAGNORM_METRICS_HPP_
#define MAGNORM_METRICS_HPP_

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace magnorm {

// query_id -> (doc_id -> grade). Grades >= 1 count as relevant.
using Qrels = std::map<std::string, std::map<std::string, int>>;

// Documents for one query in rank order. Scores are non-increasing and equal
// scores are ordered by doc_id so that metrics are reproducible.
class RankedList {
 public:
  struct Entry {
    std::string doc_id;
    double score;
  };

  RankedList() = default;
  RankedList(std::string query_id, std::vector<Entry> entries);

  // Sorts by (score desc, doc_id asc).
  static RankedList from_scores(std::string query_id, std::vector<Entry> entries);

  const std::string& query_id() const noexcept { return query_id_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::string query_id_;
  std::vector<Entry> entries_;
};

// Gain 2^grade - 1, discount 1 / log2(rank + 1). Zero when the query has no
// relevant documents.
double ndcg_at_k(const RankedList& run, const Qrels& qrels, int k);
double recall_at_k(const RankedList& run, const Qrels& qrels, int k);
double mrr_at_k(const RankedList& run, const Qrels& qrels, int k);

double pearson(std::span<const double> xs, std::span<const double> ys);
// Pearson correlation of average-tied ranks.
double spearman(std::span<const double> xs, std::span<const double> ys);
// 1-based ranks, ties share the average rank.
std::vector<double> average_ranks(std::span<const double> xs);

enum class Metric { kNdcg, kRecall, kMrr };

std::string metric_name(Metric metric);

struct MetricRow {
  std::string query_id;  // "ALL" for the macro average
  Metric metric;
  int k;
  double value;
};

// Per-query rows followed by one macro-average "ALL" row for each
// (metric, k). Queries with no relevant documents contribute 0.
std::vector<MetricRow> evaluate_runs(const std::vector<RankedList>& runs, const Qrels& qrels,
                                     const std::vector<std::pair<Metric, int>>& requests);

double macro_average(const std::vector<RankedList>& runs, const Qrels& qrels, Metric metric, int k);

// TREC formats. Qrels: "qid 0 did grade". Run: "qid Q0 did rank score tag".
Qrels read_qrels(std::istream& in);
void write_qrels(std::ostream& out, const Qrels& qrels);
std::vector<RankedList> read_run(std::istream& in);
void write_run(std::ostream& out, const std::vector<RankedList>& runs, const std::string& tag);
void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);

}  // namespace magnorm

#endif  // MAGNORM_METRICS_HPP_
