// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#ifndef MAGNORM_DIAGNOSTICS_HPP_
#define MAGNORM_DIAGNOSTICS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "magnorm/datagen.hpp"
#include "magnorm/simcore.hpp"

namespace magnorm {

class TwoTowerEncoder;

struct MagnitudeSample {
  std::vector<double> relevant;
  std::vector<double> irrelevant;
};

// (mean_rel - mean_irrel) / pooled sd, with sample variances.
double cohens_d(const MagnitudeSample& sample);

// Population standard deviation over mean.
double cv(std::span<const double> values);

// Document ids in descending similarity, ties by id.
std::vector<std::string> rank_documents(const SimilarityKind& kind, const Embedding& query,
                                        std::span<const std::pair<std::string, Embedding>> docs);

struct EquivalenceVerdict {
  int trials = 0;
  std::uint64_t seed = 0;
  // Cosine vs DNorm and QNorm vs Dot must rank identically.
  int corner_failures = 0;
  // Learnable rankings must not depend on gamma_q.
  int gamma_q_failures = 0;
  std::optional<std::string> counterexample;

  bool pass() const { return corner_failures == 0 && gamma_q_failures == 0; }
};

// Random queries and corpora; checks both query-norm invariances per trial.
EquivalenceVerdict verify_ranking_equivalence(int trials, std::uint64_t seed, int dim = 8,
                                              int n_docs = 16);

nlohmann::json to_json(const EquivalenceVerdict& v);

struct DiagnosticsReport {
  std::string split;
  std::string kind;
  double cohens_d = 0.0;
  std::size_t n_rel = 0;
  std::size_t n_irrel = 0;
  double query_cv = 0.0;
  double doc_cv = 0.0;
  std::optional<double> delta_cv;
};

// Raw document magnitudes, split by whether the doc is judged grade >= 1 for
// at least one query of the split.
MagnitudeSample relevance_magnitudes(const TwoTowerEncoder& encoder, const SyntheticTask& task,
                                     Split split);

DiagnosticsReport magnitude_report(const TwoTowerEncoder& encoder, const SyntheticTask& task,
                                   const SimilarityKind& kind, Split split);

// Query-magnitude CV of a DNorm model relative to a Dot model on the same split.
double delta_cv(const TwoTowerEncoder& dnorm, const TwoTowerEncoder& dot, const SyntheticTask& task,
                Split split);

nlohmann::json to_json(const DiagnosticsReport& r);
void write_diagnostics_csv(std::ostream& out, std::span<const DiagnosticsReport> reports);

}  // namespace magnorm

#endif  // MAGNORM_DIAGNOSTICS_HPP_
