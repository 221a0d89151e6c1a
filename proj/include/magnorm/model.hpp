// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#ifndef MAGNORM_MODEL_HPP_
#define MAGNORM_MODEL_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "magnorm/datagen.hpp"
#include "magnorm/metrics.hpp"
#include "magnorm/objective.hpp"
#include "magnorm/simcore.hpp"

namespace magnorm {

enum class Tower { kQuery, kDoc };

struct EncoderDims {
  int feature_dim = 32;
  int hidden_dim = 64;  // 0 means a single affine map
  int embed_dim = 32;
  bool shared = false;

  friend bool operator==(const EncoderDims&, const EncoderDims&) = default;
};

// Query and document maps R^m -> R^n, each affine or affine-tanh-affine.
// All parameters live in one flat vector: per tower W1, b1, [W2, b2] with
// weights row-major (out x in); the doc tower follows the query tower unless
// the towers are shared.
class TwoTowerEncoder {
 public:
  TwoTowerEncoder(EncoderDims dims, Vector params);

  const EncoderDims& dims() const noexcept { return dims_; }
  const Vector& params() const noexcept { return params_; }
  Vector& mutable_params() noexcept { return params_; }

  Eigen::Index tower_param_count() const noexcept;
  static Eigen::Index param_count(const EncoderDims& dims);

  Embedding forward(const Vector& features, Tower tower) const;

  // Rows of `features` are inputs; rows of the result are embeddings.
  Matrix forward_batch(const Matrix& features, Tower tower) const;

  // Adds dL/dparams to `grad` given dL/d(embedding rows) for `features`.
  void backward_batch(const Matrix& features, const Matrix& grad_out, Tower tower,
                      Vector& grad) const;

 private:
  Eigen::Index tower_offset(Tower tower) const noexcept;

  EncoderDims dims_;
  Vector params_;
};

// Weights uniform in +-1/sqrt(fan_in), biases zero; deterministic in seed.
TwoTowerEncoder init_encoder(int feature_dim, int hidden_dim, int embed_dim, bool shared,
                             std::uint64_t seed);

double sigmoid(double x);

// Unconstrained exponents; gamma = sigmoid(gamma_hat) stays in (0, 1).
struct GammaParams {
  double gamma_hat_q = 0.0;
  double gamma_hat_d = 0.0;

  GammaPair gammas() const;
};

struct TrainConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  int epochs = 20;
  int batch_size = 64;
  std::uint64_t seed = 0;
  LossConfig loss;
  int eval_every = 50;
  // Learning rate for gamma_hat; shares `lr` when unset.
  std::optional<double> gamma_lr;

  void validate() const;
};

// Cosine decay without warmup: base_lr * (1 + cos(pi * step / total)) / 2.
double lr_at(long step, long total_steps, double base_lr);

// Scales `grads` in place so that its L2 norm is at most clip_norm; returns
// the norm before clipping.
double clip_by_global_norm(Vector& grads, double clip_norm);

struct AdamWState {
  Vector params;
  Vector m;
  Vector v;
  Vector decay_mask;  // 1 where weight decay applies
  Vector lr_scale;    // per-parameter learning-rate multiplier

  static AdamWState create(Vector params);
};

// One AdamW update at 1-based step_index: clip, update moments, apply
// bias-corrected step and decoupled weight decay. Returns the pre-clip norm.
double adamw_step(AdamWState& state, Vector grads, long step_index, double lr,
                  const TrainConfig& cfg);

struct TrainRecord {
  long step = 0;
  double loss = 0.0;
  double val_ndcg10 = 0.0;
  double gamma_q = 0.0;
  double gamma_d = 0.0;
  double q_mag_mean = 0.0;
  double q_mag_cv = 0.0;
  double d_mag_mean = 0.0;
  double d_mag_cv = 0.0;

  friend bool operator==(const TrainRecord&, const TrainRecord&) = default;
};

struct TrainLog {
  std::vector<TrainRecord> records;

  void write_csv(std::ostream& out) const;
};

struct Snapshot {
  long step = 0;
  double val_ndcg10 = 0.0;
  Vector params;
  GammaParams gammas;
};

// Snapshot with the highest validation NDCG@10, earliest step on ties.
const Snapshot& select_checkpoint(const TrainLog& log, std::span<const Snapshot> snapshots);

// Everything needed to continue a run bit-for-bit.
struct TrainingState {
  long step = 0;
  Vector params;
  GammaParams gammas;
  Vector adam_m;
  Vector adam_v;
  TrainLog log;
  std::optional<Snapshot> best;
  double window_loss = 0.0;
  long window_steps = 0;
};

struct TrainOptions {
  std::optional<TrainingState> resume;
  std::optional<long> stop_after;  // stop once this many steps are done
};

struct TrainResult {
  TwoTowerEncoder encoder;
  GammaParams gammas;
  TrainLog log;
  std::vector<Snapshot> snapshots;
  std::vector<double> step_losses;  // steps run in this call only
  TrainingState state;
  long total_steps = 0;
};

// (query, doc) training pairs: every grade >= 1 judgment of a train query.
std::vector<std::pair<std::size_t, std::size_t>> training_pairs(const SyntheticTask& task);

long total_steps(std::size_t n_pairs, const TrainConfig& cfg);

// In-batch InfoNCE with AdamW and cosine decay. Each epoch shuffles the pairs
// with a generator seeded by (seed, epoch); a short final batch is topped up
// from the start of that epoch's order. Validation NDCG@10 is measured every
// eval_every steps and at the last step. Throws NonFiniteLoss with the step.
TrainResult train(const SyntheticTask& task, const TwoTowerEncoder& encoder, const TrainConfig& cfg,
                  const TrainOptions& options = {});

// Similarity used at inference for a trained model: the configured kind, with
// the learned exponents for Learnable.
SimilarityKind inference_kind(const SimilarityKind& kind, const GammaParams& gammas);

// Ranks the whole corpus for each query with the given similarity.
std::vector<RankedList> retrieve(const TwoTowerEncoder& encoder, const SimilarityKind& kind,
                                 const SyntheticTask& task, std::span<const std::size_t> queries,
                                 std::size_t depth);

double evaluate_ndcg(const TwoTowerEncoder& encoder, const SimilarityKind& kind,
                     const SyntheticTask& task, std::span<const std::size_t> queries, int k = 10);

// JSON for configs, checkpoints and resumable state.
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EncoderDims& dims);
EncoderDims encoder_dims_from_json(const nlohmann::json& j);

struct Checkpoint {
  EncoderDims dims;
  Vector params;
  GammaParams gammas;
  long step = 0;
  double val_ndcg10 = 0.0;
  std::string kind;
  std::uint64_t seed = 0;
  nlohmann::json config;  // echo of the run configuration
};

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainingState& state);
TrainingState training_state_from_json(const nlohmann::json& j);

}  // namespace magnorm

#endif  // MAGNORM_MODEL_HPP_
