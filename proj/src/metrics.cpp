// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "magnorm/error.hpp"

namespace magnorm {

RankedList::RankedList(std::string query_id, std::vector<Entry> entries)
    : query_id_(std::move(query_id)), entries_(std::move(entries)) {
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!seen.insert(entries_[i].doc_id).second) {
      fail(ErrorKind::kInvalidArgument, "duplicate doc_id '" + entries_[i].doc_id +
                                            "' in ranking for query '" + query_id_ + "'");
    }
    if (i > 0 && entries_[i].score > entries_[i - 1].score) {
      fail(ErrorKind::kInvalidArgument, "ranking for query '" + query_id_ + "' is not sorted");
    }
  }
}

RankedList RankedList::from_scores(std::string query_id, std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  return RankedList(std::move(query_id), std::move(entries));
}

namespace {

const std::map<std::string, int>& judgments(const RankedList& run, const Qrels& qrels) {
  auto it = qrels.find(run.query_id());
  if (it == qrels.end()) fail(ErrorKind::kUnknownQuery, "query '" + run.query_id() + "' not in qrels");
  return it->second;
}

int grade_of(const std::map<std::string, int>& judged, const std::string& doc) {
  auto it = judged.find(doc);
  return it == judged.end() ? 0 : it->second;
}

void check_k(int k) {
  if (k < 1) fail(ErrorKind::kInvalidArgument, "cutoff k must be >= 1");
}

double gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }

}  // namespace

double ndcg_at_k(const RankedList& run, const Qrels& qrels, int k) {
  check_k(k);
  const auto& judged = judgments(run, qrels);
  const std::size_t cutoff = static_cast<std::size_t>(k);
  double dcg = 0.0;
  for (std::size_t r = 0; r < std::min(cutoff, run.size()); ++r) {
    dcg += gain(grade_of(judged, run.entries()[r].doc_id)) / std::log2(static_cast<double>(r) + 2.0);
  }
  std::vector<int> grades;
  for (const auto& [doc, grade] : judged) {
    if (grade > 0) grades.push_back(grade);
  }
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (std::size_t r = 0; r < std::min(cutoff, grades.size()); ++r) {
    ideal += gain(grades[r]) / std::log2(static_cast<double>(r) + 2.0);
  }
  return ideal > 0.0 ? dcg / ideal : 0.0;
}

double recall_at_k(const RankedList& run, const Qrels& qrels, int k) {
  check_k(k);
  const auto& judged = judgments(run, qrels);
  std::size_t relevant = 0;
  for (const auto& [doc, grade] : judged) relevant += grade > 0 ? 1 : 0;
  if (relevant == 0) return 0.0;
  std::size_t hits = 0;
  const std::size_t cutoff = std::min(static_cast<std::size_t>(k), run.size());
  for (std::size_t r = 0; r < cutoff; ++r) hits += grade_of(judged, run.entries()[r].doc_id) > 0;
  return static_cast<double>(hits) / static_cast<double>(relevant);
}

double mrr_at_k(const RankedList& run, const Qrels& qrels, int k) {
  check_k(k);
  const auto& judged = judgments(run, qrels);
  const std::size_t cutoff = std::min(static_cast<std::size_t>(k), run.size());
  for (std::size_t r = 0; r < cutoff; ++r) {
    if (grade_of(judged, run.entries()[r].doc_id) > 0) return 1.0 / static_cast<double>(r + 1);
  }
  return 0.0;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) fail(ErrorKind::kDegenerateInput, "pearson: length mismatch");
  if (xs.size() < 2) fail(ErrorKind::kDegenerateInput, "pearson: need at least 2 points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorKind::kDegenerateInput, "pearson: constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) fail(ErrorKind::kDegenerateInput, "spearman: length mismatch");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

std::string metric_name(Metric metric) {
  switch (metric) {
    case Metric::kNdcg: return "ndcg";
    case Metric::kRecall: return "recall";
    case Metric::kMrr: return "mrr";
  }
  return "unknown";
}

namespace {

double compute(Metric metric, const RankedList& run, const Qrels& qrels, int k) {
  switch (metric) {
    case Metric::kNdcg: return ndcg_at_k(run, qrels, k);
    case Metric::kRecall: return recall_at_k(run, qrels, k);
    case Metric::kMrr: return mrr_at_k(run, qrels, k);
  }
  return 0.0;
}

}  // namespace

double macro_average(const std::vector<RankedList>& runs, const Qrels& qrels, Metric metric, int k) {
  if (runs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& run : runs) total += compute(metric, run, qrels, k);
  return total / static_cast<double>(runs.size());
}

std::vector<MetricRow> evaluate_runs(const std::vector<RankedList>& runs, const Qrels& qrels,
                                     const std::vector<std::pair<Metric, int>>& requests) {
  std::vector<MetricRow> rows;
  for (const auto& run : runs) {
    for (const auto& [metric, k] : requests) {
      rows.push_back({run.query_id(), metric, k, compute(metric, run, qrels, k)});
    }
  }
  for (const auto& [metric, k] : requests) {
    rows.push_back({"ALL", metric, k, macro_average(runs, qrels, metric, k)});
  }
  return rows;
}

Qrels read_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string qid, iter, did;
    int grade = 0;
    if (!(ls >> qid >> iter >> did >> grade)) {
      fail(ErrorKind::kParse, "qrels line " + std::to_string(lineno) + ": expected 'qid 0 did grade'");
    }
    if (grade < 0) fail(ErrorKind::kParse, "qrels line " + std::to_string(lineno) + ": negative grade");
    qrels[qid][did] = grade;
  }
  return qrels;
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
  for (const auto& [qid, docs] : qrels) {
    for (const auto& [did, grade] : docs) out << qid << " 0 " << did << ' ' << grade << '\n';
  }
}

std::vector<RankedList> read_run(std::istream& in) {
  struct Row {
    int rank;
    RankedList::Entry entry;
  };
  std::map<std::string, std::vector<Row>> by_query;
  std::vector<std::string> order;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string qid, q0, did, tag;
    int rank = 0;
    double score = 0.0;
    if (!(ls >> qid >> q0 >> did >> rank >> score >> tag)) {
      fail(ErrorKind::kParse,
           "run line " + std::to_string(lineno) + ": expected 'qid Q0 did rank score tag'");
    }
    if (!by_query.count(qid)) order.push_back(qid);
    by_query[qid].push_back({rank, {did, score}});
  }
  std::vector<RankedList> runs;
  for (const auto& qid : order) {
    std::vector<RankedList::Entry> entries;
    for (const auto& row : by_query[qid]) entries.push_back(row.entry);
    // Rank order from the file is ignored in favour of scores plus the
    // doc_id tie-break, as trec_eval does.
    runs.push_back(RankedList::from_scores(qid, std::move(entries)));
  }
  return runs;
}

void write_run(std::ostream& out, const std::vector<RankedList>& runs, const std::string& tag) {
  std::ostringstream buf;
  buf << std::setprecision(17);
  for (const auto& run : runs) {
    int rank = 1;
    for (const auto& e : run.entries()) {
      buf << run.query_id() << " Q0 " << e.doc_id << ' ' << rank++ << ' ' << e.score << ' ' << tag << '\n';
    }
  }
  out << buf.str();
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  std::ostringstream buf;
  buf << std::setprecision(17);
  buf << "query_id,metric,k,value\n";
  for (const auto& r : rows) buf << r.query_id << ',' << metric_name(r.metric) << ',' << r.k << ',' << r.value << '\n';
  out << buf.str();
}

}  // namespace magnorm
