// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#ifndef MAGNORM_DATAGEN_HPP_
#define MAGNORM_DATAGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magnorm/metrics.hpp"
#include "magnorm/simcore.hpp"

namespace magnorm {

enum class Split { kTrain, kVal, kTest };

std::string split_name(Split split);
Split parse_split(std::string_view name);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct TaskSpec {
  int n_docs = 512;
  int n_queries = 2048;
  int feature_dim = 32;
  int n_clusters = 16;
  double hub_fraction = 0.05;
  int hub_multiplicity = 32;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
  SplitFractions splits;

  void validate() const;
};

// The reference hub task: 512 docs, 2048 queries, dim 32, 16 clusters,
// 5% hubs with ~32 queries each, seed 0.
TaskSpec reference_task_spec();

// Disjoint query partitions; the corpus is shared by all splits.
struct SplitViews {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  const std::vector<std::size_t>& of(Split split) const;
  std::vector<std::size_t>& of(Split split);
};

struct SyntheticTask {
  Matrix doc_features;    // n_docs x feature_dim
  Matrix query_features;  // n_queries x feature_dim
  // Generator ground truth; empty for tasks loaded from disk.
  Matrix doc_latent;
  Matrix query_latent;
  std::vector<int> doc_cluster;
  std::vector<int> query_cluster;
  std::vector<bool> is_hub;
  // Per query: doc index -> grade in {1, 2}. Unlisted pairs have grade 0.
  std::vector<std::map<std::size_t, int>> qrels;
  std::vector<int> relevance_count;
  SplitViews splits;

  std::size_t n_docs() const { return static_cast<std::size_t>(doc_features.rows()); }
  std::size_t n_queries() const { return static_cast<std::size_t>(query_features.rows()); }
  Eigen::Index feature_dim() const { return doc_features.cols(); }

  static std::string doc_id(std::size_t i);
  static std::string query_id(std::size_t i);

  // String-keyed judgments for the given queries (all queries when empty).
  Qrels to_qrels(std::span<const std::size_t> queries = {}) const;
};

// relevance_count[d] = number of queries listing d with grade >= 1.
std::vector<int> relevance_counts(const std::vector<std::map<std::size_t, int>>& qrels,
                                  std::size_t n_docs);

// Clustered corpus with hub documents. Each query has a generating document
// (grade 2) plus up to two nearest same-cluster documents (grade 1); hub
// documents are additionally linked (grade 1) to ~hub_multiplicity queries
// from other clusters, preferring queries at small angular distance.
SyntheticTask gen_asymmetric(const TaskSpec& spec);

struct SymmetricPair {
  Vector a;
  Vector b;
  double target;  // (1 + cos angle(latent_a, latent_b)) / 2
};

// n_queries pairs with random item magnitudes and a random slot order.
std::vector<SymmetricPair> gen_symmetric(const TaskSpec& spec);

// Seeded shuffle then largest-remainder sizing, so each part differs from its
// exact fraction by less than one query.
SplitViews split(std::size_t n_queries, const SplitFractions& fractions, std::uint64_t seed);
SplitViews split(const SyntheticTask& task, const SplitFractions& fractions, std::uint64_t seed);

// Task files: corpus.jsonl, queries.jsonl, qrels.txt, splits.json and
// task_meta.json (hub flags and clusters).
void write_task(const SyntheticTask& task, const TaskSpec& spec, const std::filesystem::path& dir);
SyntheticTask load_task(const std::filesystem::path& dir);
bool task_exists(const std::filesystem::path& dir);

nlohmann::json to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const nlohmann::json& j);

}  // namespace magnorm

#endif  // MAGNORM_DATAGEN_HPP_
