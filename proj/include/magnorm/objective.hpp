// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#ifndef MAGNORM_OBJECTIVE_HPP_
#define MAGNORM_OBJECTIVE_HPP_

#include <optional>
#include <span>
#include <vector>

#include "magnorm/simcore.hpp"

namespace magnorm {

// Logits are alpha * s(q, d) / tau; lambda only scales the MSE objective.
struct LossConfig {
  SimilarityKind kind = SimilarityKind::cosine();
  double tau = 1.0;
  double alpha = 20.0;
  double lambda = 0.01;

  void validate() const;
};

// Aligned (query, positive) pairs. Without explicit negatives, query i is
// scored against every positive in the batch (in-batch negatives).
struct ContrastiveBatch {
  std::vector<Embedding> queries;
  std::vector<Embedding> positives;
  std::optional<std::vector<std::vector<Embedding>>> negatives;

  bool in_batch() const noexcept { return !negatives.has_value(); }
  std::size_t size() const noexcept { return queries.size(); }

  // Candidate list for query i; the positive is always index 0 in explicit
  // mode and index i in in-batch mode.
  std::vector<const Embedding*> candidates(std::size_t i) const;
  std::size_t positive_index(std::size_t i) const noexcept { return in_batch() ? i : 0; }

  void validate() const;
};

// Numerically stable softmax over alpha * s(q, d_j) / tau.
std::vector<double> softmax_probs(const Embedding& q, std::span<const Embedding> docs,
                                  const LossConfig& cfg);

double infonce_loss(const ContrastiveBatch& batch, const LossConfig& cfg);

struct SimilarityPair {
  Embedding a;
  Embedding b;
  double target;
};

// Mean of (lambda * s(a, b) - target)^2.
double mse_symmetric_loss(std::span<const SimilarityPair> pairs, const LossConfig& cfg);

// Per-example temperature induced by an unnormalized side. For DNorm (and Dot,
// and Learnable via ||q||^(1 - gamma_q)) the carrier is the query norm; for
// QNorm it is the document norm; Cosine has no carrier.
double effective_temperature(const SimilarityKind& kind, double tau, double carrier_norm);

namespace kernel {

// Stable softmax of raw logits.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace kernel

}  // namespace magnorm

#endif  // MAGNORM_OBJECTIVE_HPP_
