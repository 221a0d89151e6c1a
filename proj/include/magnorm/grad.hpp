// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#ifndef MAGNORM_GRAD_HPP_
#define MAGNORM_GRAD_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magnorm/objective.hpp"
#include "magnorm/simcore.hpp"

namespace magnorm {

using SquareMatrix = Matrix;

struct SimGradient {
  Vector d_q;
  Vector d_d;
  // Present only for Learnable kinds.
  std::optional<double> d_gamma_q;
  std::optional<double> d_gamma_d;
};

// J = (I - v_hat v_hat^T) / ||v||, the Jacobian of v -> v / ||v||.
SquareMatrix normalization_jacobian(const Embedding& v);

// P_v = I - v_hat v_hat^T = ||v|| * J.
SquareMatrix tangent_projection(const Embedding& v);

// Exact gradient of similarity(kind, q, d). For Learnable the exponent
// gradients are ds/dgamma_q = -ln||q|| * s and ds/dgamma_d = -ln||d|| * s,
// which need both norms to be positive.
SimGradient sim_grad(const SimilarityKind& kind, const Embedding& q, const Embedding& d);

struct InfonceGradient {
  double loss = 0.0;
  std::vector<Vector> d_queries;
  std::vector<Vector> d_positives;
  // Empty in in-batch mode; otherwise aligned with batch.negatives.
  std::vector<std::vector<Vector>> d_negatives;
  double d_gamma_q = 0.0;
  double d_gamma_d = 0.0;
  // Softmax over each query's candidates (positive first in explicit mode).
  std::vector<std::vector<double>> probs;
};

InfonceGradient infonce_grad(const ContrastiveBatch& batch, const LossConfig& cfg);

using ScalarFunction = std::function<double(const Vector&)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Vector finite_difference(const ScalarFunction& f, const Vector& x, double h = 1e-5);

// |a - n| / max(1, |a|, |n|).
double relative_error(double analytic, double numeric);
double max_relative_error(const Vector& analytic, const Vector& numeric);

struct GradcheckReport {
  std::string kind;
  int trials = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
  double max_rel_err = 0.0;
  // Max relative error per parameter group: "similarity", "query",
  // "document", and "gamma" (Learnable only).
  std::map<std::string, double> group_max_rel_err;
  bool pass = false;
};

// Random InfoNCE batches (both negative modes) checked against central
// differences with h = 1e-5. Trial t draws from a generator seeded by
// (seed, t), so the report depends only on the arguments.
GradcheckReport gradcheck(const SimilarityKind& kind, int trials, std::uint64_t seed, double tol);

nlohmann::json to_json(const GradcheckReport& report);

namespace kernel {

// Gradient of s = q.d / (||q||^gq ||d||^gd) for the given exponents.
void sim_grad(const GammaPair& exponents, const Vector& q, const Vector& d, double& s,
              Vector& d_q, Vector& d_d);

}  // namespace kernel

}  // namespace magnorm

#endif  // MAGNORM_GRAD_HPP_
