// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/grad.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "magnorm/error.hpp"

namespace magnorm {

namespace kernel {

void sim_grad(const GammaPair& exponents, const Vector& q, const Vector& d, double& s,
              Vector& d_q, Vector& d_d) {
  const double gq = exponents.q();
  const double gd = exponents.d();
  const double dot = q.dot(d);
  double scale = 1.0;
  double nq2 = 0.0;
  double nd2 = 0.0;
  if (gq > 0.0) {
    nq2 = q.squaredNorm();
    if (nq2 == 0.0) fail(ErrorKind::kZeroMagnitude, "sim_grad: query has zero norm");
    scale *= norm_power(std::sqrt(nq2), gq);
  }
  if (gd > 0.0) {
    nd2 = d.squaredNorm();
    if (nd2 == 0.0) fail(ErrorKind::kZeroMagnitude, "sim_grad: document has zero norm");
    scale *= norm_power(std::sqrt(nd2), gd);
  }
  const double a = 1.0 / scale;
  s = dot * a;
  d_q = a * d;
  d_d = a * q;
  if (gq > 0.0) d_q.noalias() -= (a * gq * dot / nq2) * q;
  if (gd > 0.0) d_d.noalias() -= (a * gd * dot / nd2) * d;
}

}  // namespace kernel

SquareMatrix tangent_projection(const Embedding& v) {
  const double n = norm(v);
  if (n == 0.0) fail(ErrorKind::kZeroMagnitude, "tangent_projection: zero vector");
  const Vector u = v.values() / n;
  return SquareMatrix::Identity(v.dim(), v.dim()) - u * u.transpose();
}

SquareMatrix normalization_jacobian(const Embedding& v) {
  return tangent_projection(v) / norm(v);
}

SimGradient sim_grad(const SimilarityKind& kind, const Embedding& q, const Embedding& d) {
  if (q.dim() != d.dim()) fail(ErrorKind::kDimensionMismatch, "sim_grad: dims differ");
  SimGradient out;
  double s = 0.0;
  kernel::sim_grad(kind.exponents(), q.values(), d.values(), s, out.d_q, out.d_d);
  if (kind.is_learnable()) {
    const double nq = norm(q);
    const double nd = norm(d);
    if (nq == 0.0 || nd == 0.0) {
      fail(ErrorKind::kZeroMagnitude, "sim_grad: gamma gradient needs positive norms");
    }
    out.d_gamma_q = -std::log(nq) * s;
    out.d_gamma_d = -std::log(nd) * s;
  }
  return out;
}

InfonceGradient infonce_grad(const ContrastiveBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  batch.validate();
  const std::size_t b = batch.size();
  const auto dim = batch.queries.front().dim();
  const GammaPair ex = cfg.kind.exponents();
  const bool learnable = cfg.kind.is_learnable();
  const double inv_temp = cfg.alpha / cfg.tau;
  const double inv_b = 1.0 / static_cast<double>(b);

  InfonceGradient g;
  g.d_queries.assign(b, Vector::Zero(dim));
  g.d_positives.assign(b, Vector::Zero(dim));
  if (!batch.in_batch()) {
    g.d_negatives.resize(b);
    for (std::size_t i = 0; i < b; ++i) {
      g.d_negatives[i].assign((*batch.negatives)[i].size(), Vector::Zero(dim));
    }
  }
  g.probs.resize(b);

  std::vector<double> scores;
  std::vector<Vector> dqs;
  std::vector<Vector> dds;
  for (std::size_t i = 0; i < b; ++i) {
    const Vector& q = batch.queries[i].values();
    const auto cands = batch.candidates(i);
    const std::size_t pos = batch.positive_index(i);
    scores.resize(cands.size());
    dqs.resize(cands.size());
    dds.resize(cands.size());
    std::vector<double> logits(cands.size());
    for (std::size_t j = 0; j < cands.size(); ++j) {
      kernel::sim_grad(ex, q, cands[j]->values(), scores[j], dqs[j], dds[j]);
      logits[j] = inv_temp * scores[j];
    }
    auto p = kernel::softmax(logits);
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    g.loss += m + std::log(z) - logits[pos];

    double log_nq = 0.0;
    if (learnable) log_nq = std::log(q.norm());
    for (std::size_t j = 0; j < cands.size(); ++j) {
      const double w = inv_temp * (p[j] - (j == pos ? 1.0 : 0.0)) * inv_b;
      if (w == 0.0) continue;
      g.d_queries[i].noalias() += w * dqs[j];
      Vector* target = nullptr;
      if (batch.in_batch()) {
        target = &g.d_positives[j];
      } else {
        target = j == 0 ? &g.d_positives[i] : &g.d_negatives[i][j - 1];
      }
      target->noalias() += w * dds[j];
      if (learnable) {
        g.d_gamma_q += w * (-log_nq * scores[j]);
        g.d_gamma_d += w * (-std::log(cands[j]->values().norm()) * scores[j]);
      }
    }
    g.probs[i] = std::move(p);
  }
  g.loss *= inv_b;
  return g;
}

Vector finite_difference(const ScalarFunction& f, const Vector& x, double h) {
  if (!(h > 0.0)) fail(ErrorKind::kInvalidArgument, "finite_difference: h must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail(ErrorKind::kNonFiniteEvaluation,
           "finite_difference: non-finite value at coordinate " + std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

double max_relative_error(const Vector& analytic, const Vector& numeric) {
  if (analytic.size() != numeric.size()) {
    fail(ErrorKind::kDimensionMismatch, "max_relative_error: sizes differ");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  }
  return worst;
}

namespace {

constexpr double kStep = 1e-5;

Vector random_vector(std::mt19937_64& rng, Eigen::Index dim, double scale) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v * (scale / std::max(v.norm(), 1e-3));
}

// Flattened layout: queries, positives, then negatives in row order.
Vector flatten(const ContrastiveBatch& batch) {
  std::vector<const Embedding*> all;
  for (const auto& e : batch.queries) all.push_back(&e);
  for (const auto& e : batch.positives) all.push_back(&e);
  if (!batch.in_batch()) {
    for (const auto& row : *batch.negatives) {
      for (const auto& e : row) all.push_back(&e);
    }
  }
  const auto dim = batch.queries.front().dim();
  Vector flat(static_cast<Eigen::Index>(all.size()) * dim);
  for (std::size_t k = 0; k < all.size(); ++k) {
    flat.segment(static_cast<Eigen::Index>(k) * dim, dim) = all[k]->values();
  }
  return flat;
}

ContrastiveBatch unflatten(const ContrastiveBatch& shape, const Vector& flat) {
  const auto dim = shape.queries.front().dim();
  Eigen::Index off = 0;
  auto next = [&]() {
    Embedding e(Vector(flat.segment(off, dim)));
    off += dim;
    return e;
  };
  ContrastiveBatch out;
  for (std::size_t i = 0; i < shape.queries.size(); ++i) out.queries.push_back(next());
  for (std::size_t i = 0; i < shape.positives.size(); ++i) out.positives.push_back(next());
  if (!shape.in_batch()) {
    out.negatives.emplace();
    for (const auto& row : *shape.negatives) {
      std::vector<Embedding> r;
      for (std::size_t k = 0; k < row.size(); ++k) r.push_back(next());
      out.negatives->push_back(std::move(r));
    }
  }
  return out;
}

Vector flatten_grad(const InfonceGradient& g) {
  std::vector<const Vector*> all;
  for (const auto& v : g.d_queries) all.push_back(&v);
  for (const auto& v : g.d_positives) all.push_back(&v);
  for (const auto& row : g.d_negatives) {
    for (const auto& v : row) all.push_back(&v);
  }
  const auto dim = g.d_queries.front().size();
  Vector flat(static_cast<Eigen::Index>(all.size()) * dim);
  for (std::size_t k = 0; k < all.size(); ++k) {
    flat.segment(static_cast<Eigen::Index>(k) * dim, dim) = *all[k];
  }
  return flat;
}

SimilarityKind with_gammas(const SimilarityKind& kind, double gq, double gd) {
  return kind.is_learnable() ? SimilarityKind::learnable(GammaPair(gq, gd)) : kind;
}

}  // namespace

GradcheckReport gradcheck(const SimilarityKind& kind, int trials, std::uint64_t seed, double tol) {
  if (trials < 1) fail(ErrorKind::kInvalidArgument, "gradcheck: trials must be >= 1");
  GradcheckReport report;
  report.kind = kind.name();
  report.trials = trials;
  report.seed = seed;
  report.tol = tol;
  auto bump = [&report](const std::string& group, double err) {
    double& slot = report.group_max_rel_err[group];
    slot = std::max(slot, err);
    report.max_rel_err = std::max(report.max_rel_err, err);
  };
  report.group_max_rel_err["similarity"] = 0.0;
  report.group_max_rel_err["query"] = 0.0;
  report.group_max_rel_err["document"] = 0.0;
  if (kind.is_learnable()) report.group_max_rel_err["gamma"] = 0.0;

  for (int t = 0; t < trials; ++t) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(t)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    auto uniform_int = [&](int lo, int hi) {
      return lo + static_cast<int>(unit(rng) * (hi - lo + 1)) % (hi - lo + 1);
    };

    const Eigen::Index dim = uniform_int(2, 6);
    const int b = uniform_int(2, 4);
    const bool in_batch = unit(rng) < 0.5;
    SimilarityKind trial_kind = kind;
    if (kind.is_learnable()) {
      trial_kind = SimilarityKind::learnable(GammaPair(uniform(0.1, 0.9), uniform(0.1, 0.9)));
    }
    LossConfig cfg;
    cfg.kind = trial_kind;
    cfg.tau = uniform(0.5, 2.0);
    cfg.alpha = uniform(0.5, 2.0);

    ContrastiveBatch batch;
    for (int i = 0; i < b; ++i) batch.queries.emplace_back(random_vector(rng, dim, uniform(0.5, 2.0)));
    for (int i = 0; i < b; ++i) batch.positives.emplace_back(random_vector(rng, dim, uniform(0.5, 2.0)));
    if (!in_batch) {
      batch.negatives.emplace();
      for (int i = 0; i < b; ++i) {
        std::vector<Embedding> row;
        const int k = uniform_int(1, 3);
        for (int j = 0; j < k; ++j) row.emplace_back(random_vector(rng, dim, uniform(0.5, 2.0)));
        batch.negatives->push_back(std::move(row));
      }
    }

    // Single-pair similarity gradient.
    {
      const Embedding& q = batch.queries[0];
      const Embedding& d = batch.positives[0];
      const SimGradient sg = sim_grad(trial_kind, q, d);
      Vector x(2 * dim);
      x << q.values(), d.values();
      const Vector num = finite_difference(
          [&](const Vector& v) {
            return kernel::similarity(trial_kind, Vector(v.head(dim)), Vector(v.tail(dim)));
          },
          x, kStep);
      Vector ana(2 * dim);
      ana << sg.d_q, sg.d_d;
      bump("similarity", max_relative_error(ana, num));
      if (trial_kind.is_learnable()) {
        const GammaPair g0 = trial_kind.exponents();
        Vector gx(2);
        gx << g0.q(), g0.d();
        const Vector gnum = finite_difference(
            [&](const Vector& v) {
              return similarity(SimilarityKind::learnable(GammaPair(v[0], v[1])), q, d);
            },
            gx, kStep);
        Vector gana(2);
        gana << *sg.d_gamma_q, *sg.d_gamma_d;
        bump("gamma", max_relative_error(gana, gnum));
      }
    }

    // Full InfoNCE gradient.
    const InfonceGradient g = infonce_grad(batch, cfg);
    const Vector x = flatten(batch);
    const Vector num = finite_difference(
        [&](const Vector& v) { return infonce_loss(unflatten(batch, v), cfg); }, x, kStep);
    const Vector ana = flatten_grad(g);
    const Eigen::Index nq = static_cast<Eigen::Index>(b) * dim;
    bump("query", max_relative_error(ana.head(nq), num.head(nq)));
    bump("document", max_relative_error(ana.tail(ana.size() - nq), num.tail(num.size() - nq)));

    if (trial_kind.is_learnable()) {
      const GammaPair g0 = trial_kind.exponents();
      Vector gx(2);
      gx << g0.q(), g0.d();
      const Vector gnum = finite_difference(
          [&](const Vector& v) {
            LossConfig c = cfg;
            c.kind = with_gammas(kind, v[0], v[1]);
            return infonce_loss(batch, c);
          },
          gx, kStep);
      Vector gana(2);
      gana << g.d_gamma_q, g.d_gamma_d;
      bump("gamma", max_relative_error(gana, gnum));
    }
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

nlohmann::json to_json(const GradcheckReport& report) {
  nlohmann::json j;
  j["kind"] = report.kind;
  j["trials"] = report.trials;
  j["seed"] = report.seed;
  j["tol"] = report.tol;
  j["max_rel_err"] = report.max_rel_err;
  j["groups"] = report.group_max_rel_err;
  j["pass"] = report.pass;
  return j;
}

}  // namespace magnorm
