// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#ifndef MAGNORM_SIMCORE_HPP_
#define MAGNORM_SIMCORE_HPP_

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace magnorm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A dense, finite, non-empty real vector. Carries both direction and
// magnitude; nothing here normalizes it.
class Embedding {
 public:
  explicit Embedding(Vector values);
  Embedding(std::initializer_list<double> values);

  const Vector& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

 private:
  Vector values_;
};

// Normalization exponents (gamma_q, gamma_d), each in [0, 1].
class GammaPair {
 public:
  GammaPair(double gamma_q, double gamma_d);

  double q() const noexcept { return gamma_q_; }
  double d() const noexcept { return gamma_d_; }

  friend bool operator==(const GammaPair&, const GammaPair&) = default;

 private:
  double gamma_q_;
  double gamma_d_;
};

enum class SimilarityTag { kCosine, kDot, kQNorm, kDNorm, kLearnable };

class SimilarityKind {
 public:
  static SimilarityKind cosine() { return SimilarityKind(SimilarityTag::kCosine, std::nullopt); }
  static SimilarityKind dot() { return SimilarityKind(SimilarityTag::kDot, std::nullopt); }
  static SimilarityKind qnorm() { return SimilarityKind(SimilarityTag::kQNorm, std::nullopt); }
  static SimilarityKind dnorm() { return SimilarityKind(SimilarityTag::kDNorm, std::nullopt); }
  static SimilarityKind learnable(GammaPair gammas) {
    return SimilarityKind(SimilarityTag::kLearnable, gammas);
  }

  // Accepts "cosine", "dot", "qnorm", "dnorm", "learnable" (case-insensitive).
  // A bare "learnable" starts at the midpoint gamma = (0.5, 0.5).
  static SimilarityKind parse(std::string_view name);

  SimilarityTag tag() const noexcept { return tag_; }
  bool is_learnable() const noexcept { return tag_ == SimilarityTag::kLearnable; }
  const std::optional<GammaPair>& gammas() const noexcept { return gammas_; }

  // The exponents applied to (||q||, ||d||). Discrete variants map to the
  // corners: Cosine (1,1), Dot (0,0), QNorm (1,0), DNorm (0,1).
  GammaPair exponents() const;

  std::string name() const;

  friend bool operator==(const SimilarityKind&, const SimilarityKind&) = default;

 private:
  SimilarityKind(SimilarityTag tag, std::optional<GammaPair> gammas)
      : tag_(tag), gammas_(gammas) {}

  SimilarityTag tag_;
  std::optional<GammaPair> gammas_;
};

double norm(const Embedding& v);

struct Decomposition {
  double norm_q;
  double norm_d;
  double cos_theta;  // clamped to [-1, 1]
};

// Splits q.d into ||q|| * ||d|| * cos(theta). Throws ZeroMagnitude when either
// side is the zero vector.
Decomposition decompose(const Embedding& q, const Embedding& d);

// s(q, d) = q.d / (||q||^gamma_q * ||d||^gamma_d) with the kind's exponents.
double similarity(const SimilarityKind& kind, const Embedding& q, const Embedding& d);

double scaled_logit(const SimilarityKind& kind, const Embedding& q, const Embedding& d,
                    double alpha);

namespace kernel {

// Unchecked-finiteness variants used on hot paths (training, ranking). They
// still enforce dimension agreement and the zero-magnitude preconditions.
double similarity(const SimilarityKind& kind, const Vector& q, const Vector& d);

// ||v||^gamma, with gamma == 0 mapping to 1 regardless of v.
double norm_power(double norm, double gamma);

}  // namespace kernel

}  // namespace magnorm

#endif  // MAGNORM_SIMCORE_HPP_
