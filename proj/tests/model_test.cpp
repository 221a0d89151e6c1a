// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/model.hpp"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "magnorm/error.hpp"
#include "magnorm/grad.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace magnorm {
namespace {

using testing::Rng;

TaskSpec small_spec() {
  TaskSpec s;
  s.n_docs = 64;
  s.n_queries = 256;
  s.feature_dim = 8;
  s.n_clusters = 4;
  s.hub_fraction = 0.1;
  s.hub_multiplicity = 8;
  return s;
}

const SyntheticTask& small_task() {
  static const SyntheticTask task = gen_asymmetric(small_spec());
  return task;
}

TrainConfig small_config(SimilarityKind kind) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.eval_every = 10;
  cfg.loss.kind = kind;
  return cfg;
}

// Row-by-row reference forward pass over the documented flat layout.
Vector reference_forward(const TwoTowerEncoder& enc, const Vector& x, Tower tower) {
  const auto& d = enc.dims();
  const Vector& p = enc.params();
  Eigen::Index off = (tower == Tower::kDoc && !d.shared) ? enc.tower_param_count() : 0;
  auto affine = [&](const Vector& in, int out_dim) {
    Vector out(out_dim);
    const auto in_dim = in.size();
    for (int r = 0; r < out_dim; ++r) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < in_dim; ++c) s += p[off + r * in_dim + c] * in[c];
      out[r] = s;
    }
    off += out_dim * in_dim;
    for (int r = 0; r < out_dim; ++r) out[r] += p[off + r];
    off += out_dim;
    return out;
  };
  if (d.hidden_dim == 0) return affine(x, d.embed_dim);
  Vector h = affine(x, d.hidden_dim);
  for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i]);
  return affine(h, d.embed_dim);
}

TEST(EncoderTest, InitIsDeterministicAndBounded) {
  const auto a = init_encoder(5, 7, 3, false, 42);
  const auto b = init_encoder(5, 7, 3, false, 42);
  EXPECT_EQ(a.params(), b.params());
  EXPECT_NE(init_encoder(5, 7, 3, false, 43).params(), a.params());
  EXPECT_EQ(a.params().size(), 2 * (7 * 5 + 7 + 3 * 7 + 3));
  const Vector& p = a.params();
  for (int t = 0; t < 2; ++t) {
    const Eigen::Index base = t * a.tower_param_count();
    for (int i = 0; i < 35; ++i) EXPECT_LE(std::abs(p[base + i]), 1.0 / std::sqrt(5.0));
    for (int i = 35; i < 42; ++i) EXPECT_EQ(p[base + i], 0.0);
    for (int i = 42; i < 63; ++i) EXPECT_LE(std::abs(p[base + i]), 1.0 / std::sqrt(7.0));
    for (int i = 63; i < 66; ++i) EXPECT_EQ(p[base + i], 0.0);
  }
}

TEST(EncoderTest, ZeroInputGivesZeroEmbedding) {
  for (int h : {0, 6}) {
    const auto enc = init_encoder(4, h, 3, false, 1);
    EXPECT_EQ(enc.forward(Vector::Zero(4), Tower::kQuery).values(), Vector::Zero(3));
  }
}

TEST(EncoderTest, IdentityMap) {
  const EncoderDims dims{3, 0, 3, true};
  Vector p = Vector::Zero(TwoTowerEncoder::param_count(dims));
  for (int i = 0; i < 3; ++i) p[i * 3 + i] = 1.0;
  const TwoTowerEncoder enc(dims, p);
  const Vector x{{0.25, -1.5, 3.0}};
  EXPECT_EQ(enc.forward(x, Tower::kDoc).values(), x);
}

TEST(EncoderTest, SharedTowersAgree) {
  const auto enc = init_encoder(6, 4, 5, true, 3);
  Rng rng(1);
  const Vector x = rng.gaussian(6);
  EXPECT_EQ(enc.forward(x, Tower::kQuery).values(), enc.forward(x, Tower::kDoc).values());
  const auto split = init_encoder(6, 4, 5, false, 3);
  EXPECT_NE(split.forward(x, Tower::kQuery).values(), split.forward(x, Tower::kDoc).values());
}

TEST(EncoderTest, MatchesReferenceForward) {
  Rng rng(2);
  for (int h : {0, 5}) {
    const auto enc = init_encoder(4, h, 3, false, 9);
    for (int t = 0; t < 20; ++t) {
      const Vector x = rng.gaussian(4);
      for (Tower tower : {Tower::kQuery, Tower::kDoc}) {
        const Vector got = enc.forward(x, tower).values();
        const Vector want = reference_forward(enc, x, tower);
        EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-14);
      }
    }
  }
}

TEST(EncoderTest, Errors) {
  const auto enc = init_encoder(4, 0, 3, false, 0);
  try {
    enc.forward(Vector::Zero(5), Tower::kQuery);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
  EXPECT_THROW(TwoTowerEncoder(enc.dims(), Vector::Zero(3)), Error);
  Vector bad = enc.params();
  bad[0] = std::nan("");
  EXPECT_THROW(TwoTowerEncoder(enc.dims(), bad), Error);
}

using testing::EndToEnd;

TEST(EndToEndGradcheckTest, FullParameterGradientMatchesFiniteDifferences) {
  Rng rng(5);
  for (const auto& kind : {SimilarityKind::cosine(), SimilarityKind::dot(), SimilarityKind::qnorm(),
                           SimilarityKind::dnorm(), SimilarityKind::learnable({0.5, 0.5})}) {
    for (int h : {0, 5}) {
      for (bool shared : {false, true}) {
        EndToEnd e{{3, h, 4, shared}, Matrix(4, 3), Matrix(4, 3), {}};
        for (Eigen::Index i = 0; i < 4; ++i) {
          e.xq.row(i) = rng.gaussian(3).transpose();
          e.xd.row(i) = rng.gaussian(3).transpose();
        }
        e.cfg.kind = kind;
        e.cfg.alpha = 2.0;
        const auto enc = init_encoder(3, h, 4, shared, 17);
        Vector theta(enc.params().size() + 2);
        theta << enc.params(), rng.uniform(-1, 1), rng.uniform(-1, 1);
        const Vector analytic = e.gradient(theta);
        const Vector numeric = finite_difference([&](const Vector& x) { return e.loss(x); }, theta);
        if (!kind.is_learnable()) EXPECT_EQ(analytic.tail(2), Vector::Zero(2));
        EXPECT_LE(max_relative_error(analytic, numeric), 1e-6) << kind.name() << " h=" << h << " shared=" << shared;
      }
    }
  }
}

TEST(GammaChainTest, SigmoidDerivative) {
  for (double x : {-5.0, -0.3, 0.0, 0.7, 4.0}) {
    const double s = sigmoid(x);
    const Vector fd = finite_difference([](const Vector& v) { return sigmoid(v[0]); }, Vector{{x}});
    EXPECT_NEAR(s * (1 - s), fd[0], 1e-10);
  }
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(GammaParams{}.gammas(), GammaPair(0.5, 0.5));
  EXPECT_GT(sigmoid(-800.0), -1.0);
  EXPECT_LE(sigmoid(800.0), 1.0);
}

TEST(GammaChainTest, HatGradientIsSigmoidPrimeTimesGammaGradient) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    ContrastiveBatch b;
    for (int i = 0; i < 3; ++i) {
      b.queries.push_back(rng.embedding(4));
      b.positives.push_back(rng.embedding(4));
    }
    const GammaParams hat{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    LossConfig cfg;
    cfg.kind = SimilarityKind::learnable(hat.gammas());
    cfg.alpha = 1.5;
    const auto ig = infonce_grad(b, cfg);
    const auto loss_of_hat = [&](const Vector& x) {
      LossConfig c = cfg;
      c.kind = SimilarityKind::learnable(GammaParams{x[0], x[1]}.gammas());
      return infonce_loss(b, c);
    };
    const Vector fd = finite_difference(loss_of_hat, Vector{{hat.gamma_hat_q, hat.gamma_hat_d}});
    const double sq = sigmoid(hat.gamma_hat_q), sd = sigmoid(hat.gamma_hat_d);
    EXPECT_LE(relative_error(sq * (1 - sq) * ig.d_gamma_q, fd[0]), 1e-6);
    EXPECT_LE(relative_error(sd * (1 - sd) * ig.d_gamma_d, fd[1]), 1e-6);
  }
}

TEST(LrScheduleTest, CosineDecay) {
  EXPECT_EQ(lr_at(0, 100, 0.01), 0.01);
  EXPECT_NEAR(lr_at(100, 100, 0.01), 0.0, 1e-18);
  EXPECT_NEAR(lr_at(50, 100, 0.01), 0.005, 1e-15);
  EXPECT_THROW(lr_at(101, 100, 0.01), Error);
  double prev = 1.0;
  for (long s = 0; s <= 100; ++s) {
    EXPECT_LE(lr_at(s, 100, 0.01), prev);
    prev = lr_at(s, 100, 0.01);
  }
}

TEST(AdamWTest, ZeroGradientZeroDecayIsNoOp) {
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  auto st = AdamWState::create(Vector{{1.0, -2.0}});
  for (long s = 1; s <= 5; ++s) adamw_step(st, Vector::Zero(2), s, 0.1, cfg);
  EXPECT_EQ(st.params, (Vector{{1.0, -2.0}}));
}

TEST(AdamWTest, FirstStepMovesByLr) {
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  auto st = AdamWState::create(Vector{{0.5}});
  adamw_step(st, Vector{{1.0}}, 1, 1e-3, cfg);
  EXPECT_NEAR(st.params[0], 0.5 - 1e-3, 1e-10);
}

TEST(AdamWTest, ClipsBeforeMoments) {
  TrainConfig cfg;
  auto st = AdamWState::create(Vector::Zero(2));
  const double pre = adamw_step(st, Vector{{3.0, 4.0}}, 1, 0.0, cfg);
  EXPECT_DOUBLE_EQ(pre, 5.0);
  EXPECT_NEAR(st.m[0], (1 - cfg.beta1) * 0.6, 1e-15);
  EXPECT_NEAR(st.m[1], (1 - cfg.beta1) * 0.8, 1e-15);
  EXPECT_NEAR(st.v[1], (1 - cfg.beta2) * 0.64, 1e-15);

  Vector g{{0.3, 0.4}};
  EXPECT_DOUBLE_EQ(clip_by_global_norm(g, 1.0), 0.5);
  EXPECT_EQ(g, (Vector{{0.3, 0.4}}));
}

TEST(AdamWTest, DecoupledWeightDecayRespectsMask) {
  TrainConfig cfg;
  cfg.weight_decay = 0.1;
  auto st = AdamWState::create(Vector{{2.0, 2.0}});
  st.decay_mask[1] = 0.0;
  adamw_step(st, Vector::Zero(2), 1, 0.5, cfg);
  EXPECT_DOUBLE_EQ(st.params[0], 2.0 * (1 - 0.5 * 0.1));
  EXPECT_EQ(st.params[1], 2.0);
}

TEST(AdamWTest, MatchesReferenceRecurrence) {
  Rng rng(7);
  TrainConfig cfg;
  auto st = AdamWState::create(Vector{{0.3}});
  double p = 0.3, m = 0, v = 0;
  for (long t = 1; t <= 30; ++t) {
    const double g = rng.uniform(-0.9, 0.9);
    const double lr = 0.01;
    adamw_step(st, Vector{{g}}, t, lr, cfg);
    p -= lr * cfg.weight_decay * p;
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double mh = m / (1 - std::pow(cfg.beta1, t));
    const double vh = v / (1 - std::pow(cfg.beta2, t));
    p -= lr * mh / (std::sqrt(vh) + cfg.eps);
    EXPECT_NEAR(st.params[0], p, 1e-15);
  }
}

TEST(SelectCheckpointTest, Examples) {
  TrainLog log;
  std::vector<Snapshot> snaps;
  for (long s : {10, 20, 30}) {
    log.records.push_back({s, 1.0, 0.1 * static_cast<double>(s), 0, 0, 0, 0, 0, 0});
    snaps.push_back({s, 0.1 * static_cast<double>(s), Vector::Constant(1, static_cast<double>(s)), {}});
  }
  EXPECT_EQ(select_checkpoint(log, snaps).step, 30);
  log.records = {{10, 1.0, 0.5, 0, 0, 0, 0, 0, 0}};
  EXPECT_EQ(select_checkpoint(log, snaps).step, 10);
  log.records = {{10, 1.0, 0.4, 0, 0, 0, 0, 0, 0}, {20, 1.0, 0.7, 0, 0, 0, 0, 0, 0}, {30, 1.0, 0.7, 0, 0, 0, 0, 0, 0}};
  EXPECT_EQ(select_checkpoint(log, snaps).step, 20);
  EXPECT_THROW(select_checkpoint(TrainLog{}, snaps), Error);
}

TEST(TrainConfigTest, DefaultsAndValidation) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.beta1, 0.9);
  EXPECT_EQ(cfg.beta2, 0.98);
  EXPECT_EQ(cfg.eps, 1e-8);
  EXPECT_EQ(cfg.weight_decay, 0.01);
  EXPECT_EQ(cfg.clip_norm, 1.0);
  TrainConfig bad;
  bad.beta2 = 1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = TrainConfig{};
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(TrainingPairsTest, CountsAndSteps) {
  const auto& task = small_task();
  const auto pairs = training_pairs(task);
  std::size_t want = 0;
  for (std::size_t q : task.splits.train) want += task.qrels[q].size();
  EXPECT_EQ(pairs.size(), want);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 64;
  EXPECT_EQ(total_steps(130, cfg), 9);
  EXPECT_EQ(total_steps(128, cfg), 6);
}

TEST(TrainTest, ZeroLearningRateLeavesParametersUnchanged) {
  auto cfg = small_config(SimilarityKind::dot());
  cfg.lr = 0.0;
  const auto enc = init_encoder(8, 6, 4, false, 0);
  const auto r = train(small_task(), enc, cfg);
  EXPECT_EQ(r.encoder.params(), enc.params());
}

TEST(TrainTest, DeterministicLogsAndStepGrid) {
  const auto enc = init_encoder(8, 6, 4, false, 0);
  const auto cfg = small_config(SimilarityKind::dnorm());
  const auto a = train(small_task(), enc, cfg);
  const auto b = train(small_task(), enc, cfg);
  ASSERT_FALSE(a.log.records.empty());
  EXPECT_EQ(a.log.records, b.log.records);
  for (std::size_t i = 1; i < a.log.records.size(); ++i) {
    EXPECT_GT(a.log.records[i].step, a.log.records[i - 1].step);
  }
  EXPECT_EQ(a.log.records.back().step, a.total_steps);
  EXPECT_EQ(a.snapshots.size(), a.log.records.size());
}

TEST(TrainTest, LearnableLogsGammaInsideUnitInterval) {
  const auto r = train(small_task(), init_encoder(8, 6, 4, false, 0), small_config(SimilarityKind::learnable({0.5, 0.5})));
  bool moved = false;
  for (const auto& rec : r.log.records) {
    EXPECT_GT(rec.gamma_q, 0.0);
    EXPECT_LT(rec.gamma_q, 1.0);
    EXPECT_GT(rec.gamma_d, 0.0);
    EXPECT_LT(rec.gamma_d, 1.0);
    moved |= rec.gamma_q != 0.5;
  }
  EXPECT_TRUE(moved);
}

TEST(TrainTest, GammaLearningRateKnob) {
  auto cfg = small_config(SimilarityKind::learnable({0.5, 0.5}));
  cfg.gamma_lr = 0.0;
  const auto r = train(small_task(), init_encoder(8, 6, 4, false, 0), cfg);
  EXPECT_EQ(r.gammas.gamma_hat_q, 0.0);
  EXPECT_EQ(r.gammas.gamma_hat_d, 0.0);
}

TEST(TrainTest, ResumeReproducesUninterruptedRun) {
  const auto enc = init_encoder(8, 6, 4, false, 1);
  const auto cfg = small_config(SimilarityKind::learnable({0.5, 0.5}));
  const auto full = train(small_task(), enc, cfg);
  TrainOptions first;
  first.stop_after = 17;
  const auto part = train(small_task(), enc, cfg, first);
  EXPECT_EQ(part.state.step, 17);
  TrainOptions second;
  second.resume = training_state_from_json(to_json(part.state));
  const auto rest = train(small_task(), enc, cfg, second);
  EXPECT_EQ(rest.log.records, full.log.records);
  EXPECT_EQ(rest.encoder.params(), full.encoder.params());
  EXPECT_EQ(select_checkpoint(rest.log, rest.snapshots).params, select_checkpoint(full.log, full.snapshots).params);
}

TEST(TrainTest, NonFiniteLossReportsStep) {
  const auto enc = init_encoder(8, 0, 4, false, 0);
  const TwoTowerEncoder huge(enc.dims(), enc.params() * 1e300);
  try {
    train(small_task(), huge, small_config(SimilarityKind::dot()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos);
  }
}

TEST(TrainTest, ReferenceDotSmokeRunReducesLoss) {
  const auto task = gen_asymmetric(reference_task_spec());
  TrainConfig cfg;
  cfg.loss.kind = SimilarityKind::dot();
  TrainOptions opts;
  opts.stop_after = 200;
  const auto r = train(task, init_encoder(32, 64, 32, false, 0), cfg, opts);
  ASSERT_EQ(r.step_losses.size(), 200u);
  EXPECT_LT(r.step_losses.back(), r.step_losses.front());
}

TEST(TrainTest, CosineLossIgnoresPostHocDocumentScaling) {
  auto cfg = small_config(SimilarityKind::cosine());
  cfg.weight_decay = 0.0;
  const auto r = train(small_task(), init_encoder(8, 0, 4, false, 2), cfg);
  const Matrix q = r.encoder.forward_batch(small_task().query_features.topRows(6), Tower::kQuery);
  const Matrix d = r.encoder.forward_batch(small_task().doc_features.topRows(6), Tower::kDoc);
  ContrastiveBatch b;
  for (Eigen::Index i = 0; i < 6; ++i) {
    b.queries.emplace_back(Vector(q.row(i).transpose()));
    b.positives.emplace_back(Vector(d.row(i).transpose()));
  }
  const double base = infonce_loss(b, cfg.loss);
  for (std::size_t j = 0; j < 6; ++j) {
    auto scaled = b;
    scaled.positives[j] = Embedding(Vector(b.positives[j].values() * 37.0));
    EXPECT_NEAR(infonce_loss(scaled, cfg.loss), base, 1e-12);
  }
}

TEST(RetrieveTest, MatchesSimilarityRanking) {
  const auto& task = small_task();
  const auto enc = init_encoder(8, 6, 4, false, 3);
  const std::vector<std::size_t> queries{0, 5, 9};
  for (const auto& kind : {SimilarityKind::cosine(), SimilarityKind::dot(), SimilarityKind::learnable({0.3, 0.8})}) {
    const auto runs = retrieve(enc, kind, task, queries, 10);
    ASSERT_EQ(runs.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      ASSERT_EQ(runs[i].size(), 10u);
      const Embedding qe = enc.forward(task.query_features.row(static_cast<Eigen::Index>(queries[i])).transpose(), Tower::kQuery);
      for (const auto& e : runs[i].entries()) {
        const std::size_t d = std::stoul(e.doc_id.substr(1));
        const Embedding de = enc.forward(task.doc_features.row(static_cast<Eigen::Index>(d)).transpose(), Tower::kDoc);
        EXPECT_NEAR(e.score, similarity(kind, qe, de), 1e-12);
      }
    }
  }
}

TEST(SerializationTest, CheckpointAndStateRoundTrip) {
  const auto r = train(small_task(), init_encoder(8, 6, 4, false, 0), small_config(SimilarityKind::learnable({0.5, 0.5})));
  const Snapshot& best = select_checkpoint(r.log, r.snapshots);
  const Checkpoint c{r.encoder.dims(), best.params, best.gammas, best.step, best.val_ndcg10, "learnable", 0,
                     nlohmann::json{{"note", 1}}};
  const Checkpoint back = checkpoint_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(back.dims, c.dims);
  EXPECT_EQ(back.gammas.gamma_hat_q, c.gammas.gamma_hat_q);
  EXPECT_EQ(back.step, c.step);
  EXPECT_EQ(back.config, c.config);

  const TrainingState s = training_state_from_json(nlohmann::json::parse(to_json(r.state).dump()));
  EXPECT_EQ(s.params, r.state.params);
  EXPECT_EQ(s.adam_v, r.state.adam_v);
  EXPECT_EQ(s.log.records, r.state.log.records);
  ASSERT_TRUE(s.best.has_value());
  EXPECT_EQ(s.best->params, r.state.best->params);

  EXPECT_THROW(checkpoint_from_json(nlohmann::json{{"format", "other"}}), Error);
}

TEST(SerializationTest, TrainConfigJson) {
  TrainConfig cfg;
  cfg.lr = 0.02;
  cfg.gamma_lr = 0.5;
  cfg.loss.tau = 0.05;
  const TrainConfig back = train_config_from_json(to_json(cfg));
  EXPECT_EQ(back.lr, 0.02);
  EXPECT_EQ(back.gamma_lr, 0.5);
  EXPECT_EQ(back.loss.tau, 0.05);
  auto j = to_json(cfg);
  j["learning_rate"] = 1;
  EXPECT_THROW(train_config_from_json(j), Error);
}

TEST(TrainLogTest, CsvHeader) {
  TrainLog log;
  log.records.push_back({50, 1.5, 0.25, 0.5, 0.5, 1, 0, 2, 0.5});
  std::ostringstream out;
  log.write_csv(out);
  EXPECT_EQ(out.str(),
            "step,loss,val_ndcg10,gamma_q,gamma_d,q_mag_mean,q_mag_cv,d_mag_mean,d_mag_cv\n"
            "50,1.5,0.25,0.5,0.5,1,0,2,0.5\n");
}

}  // namespace
}  // namespace magnorm
