// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The magnorm Authors

#include "magnorm/model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "json_util.hpp"
#include "magnorm/diagnostics.hpp"
#include "magnorm/error.hpp"
#include "magnorm/grad.hpp"

namespace magnorm {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMatrix>;
using Weights = Eigen::Map<RowMatrix>;

struct Layout {
  Eigen::Index w1, b1, w2, b2, size;
  Eigen::Index in, hidden, out;
};

Layout layout_of(const EncoderDims& d) {
  Layout l{};
  l.in = d.feature_dim;
  l.hidden = d.hidden_dim;
  l.out = d.embed_dim;
  if (d.hidden_dim == 0) {
    l.w1 = 0;
    l.b1 = l.out * l.in;
    l.w2 = l.b2 = l.b1 + l.out;
    l.size = l.b1 + l.out;
  } else {
    l.w1 = 0;
    l.b1 = l.hidden * l.in;
    l.w2 = l.b1 + l.hidden;
    l.b2 = l.w2 + l.out * l.hidden;
    l.size = l.b2 + l.out;
  }
  return l;
}

void check_dims(const EncoderDims& d) {
  if (d.feature_dim < 1 || d.embed_dim < 1 || d.hidden_dim < 0) {
    fail(ErrorKind::kInvalidArgument, "encoder dims must be positive (hidden_dim >= 0)");
  }
}

}  // namespace

Eigen::Index TwoTowerEncoder::param_count(const EncoderDims& dims) {
  check_dims(dims);
  const Eigen::Index tower = layout_of(dims).size;
  return dims.shared ? tower : 2 * tower;
}

TwoTowerEncoder::TwoTowerEncoder(EncoderDims dims, Vector params)
    : dims_(dims), params_(std::move(params)) {
  if (params_.size() != param_count(dims_)) {
    fail(ErrorKind::kDimensionMismatch, "parameter vector does not match encoder dims");
  }
  if (!params_.allFinite()) fail(ErrorKind::kInvalidArgument, "encoder parameters must be finite");
}

Eigen::Index TwoTowerEncoder::tower_param_count() const noexcept { return layout_of(dims_).size; }

Eigen::Index TwoTowerEncoder::tower_offset(Tower tower) const noexcept {
  return (tower == Tower::kDoc && !dims_.shared) ? tower_param_count() : 0;
}

Matrix TwoTowerEncoder::forward_batch(const Matrix& features, Tower tower) const {
  const Layout l = layout_of(dims_);
  if (features.cols() != l.in) {
    fail(ErrorKind::kDimensionMismatch, "feature length " + std::to_string(features.cols()) +
                                            " != encoder input " + std::to_string(l.in));
  }
  const double* p = params_.data() + tower_offset(tower);
  if (l.hidden == 0) {
    ConstWeights w(p + l.w1, l.out, l.in);
    Eigen::Map<const Vector> b(p + l.b1, l.out);
    return (features * w.transpose()).rowwise() + b.transpose();
  }
  ConstWeights w1(p + l.w1, l.hidden, l.in);
  Eigen::Map<const Vector> b1(p + l.b1, l.hidden);
  ConstWeights w2(p + l.w2, l.out, l.hidden);
  Eigen::Map<const Vector> b2(p + l.b2, l.out);
  const Matrix h = ((features * w1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();
  return (h * w2.transpose()).rowwise() + b2.transpose();
}

Embedding TwoTowerEncoder::forward(const Vector& features, Tower tower) const {
  const Matrix out = forward_batch(features.transpose(), tower);
  return Embedding(Vector(out.row(0).transpose()));
}

void TwoTowerEncoder::backward_batch(const Matrix& features, const Matrix& grad_out, Tower tower,
                                     Vector& grad) const {
  const Layout l = layout_of(dims_);
  if (grad.size() != params_.size()) fail(ErrorKind::kDimensionMismatch, "gradient buffer size");
  if (features.cols() != l.in || grad_out.cols() != l.out || grad_out.rows() != features.rows()) {
    fail(ErrorKind::kDimensionMismatch, "backward_batch: shape mismatch");
  }
  const Eigen::Index off = tower_offset(tower);
  const double* p = params_.data() + off;
  double* g = grad.data() + off;
  if (l.hidden == 0) {
    Weights(g + l.w1, l.out, l.in).noalias() += grad_out.transpose() * features;
    Eigen::Map<Vector>(g + l.b1, l.out) += grad_out.colwise().sum().transpose();
    return;
  }
  ConstWeights w1(p + l.w1, l.hidden, l.in);
  Eigen::Map<const Vector> b1(p + l.b1, l.hidden);
  ConstWeights w2(p + l.w2, l.out, l.hidden);
  const Matrix h = ((features * w1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();
  Weights(g + l.w2, l.out, l.hidden).noalias() += grad_out.transpose() * h;
  Eigen::Map<Vector>(g + l.b2, l.out) += grad_out.colwise().sum().transpose();
  const Matrix dh = ((grad_out * w2).array() * (1.0 - h.array().square())).matrix();
  Weights(g + l.w1, l.hidden, l.in).noalias() += dh.transpose() * features;
  Eigen::Map<Vector>(g + l.b1, l.hidden) += dh.colwise().sum().transpose();
}

TwoTowerEncoder init_encoder(int feature_dim, int hidden_dim, int embed_dim, bool shared,
                             std::uint64_t seed) {
  const EncoderDims dims{feature_dim, hidden_dim, embed_dim, shared};
  const Layout l = layout_of(dims);
  Vector params = Vector::Zero(TwoTowerEncoder::param_count(dims));
  std::mt19937_64 rng(seed);
  const int towers = shared ? 1 : 2;
  for (int t = 0; t < towers; ++t) {
    double* p = params.data() + t * l.size;
    auto fill = [&](Eigen::Index off, Eigen::Index count, Eigen::Index fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index i = 0; i < count; ++i) p[off + i] = u(rng);
    };
    if (hidden_dim == 0) {
      fill(l.w1, l.out * l.in, l.in);
    } else {
      fill(l.w1, l.hidden * l.in, l.in);
      fill(l.w2, l.out * l.hidden, l.hidden);
    }
  }
  return TwoTowerEncoder(dims, std::move(params));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

GammaPair GammaParams::gammas() const { return {sigmoid(gamma_hat_q), sigmoid(gamma_hat_d)}; }

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) fail(ErrorKind::kInvalidArgument, "lr must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorKind::kInvalidArgument, "betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) fail(ErrorKind::kInvalidArgument, "eps must be positive");
  if (!(weight_decay >= 0.0)) fail(ErrorKind::kInvalidArgument, "weight_decay must be nonnegative");
  if (!(clip_norm > 0.0)) fail(ErrorKind::kInvalidArgument, "clip_norm must be positive");
  if (epochs < 1 || batch_size < 1 || eval_every < 1) {
    fail(ErrorKind::kInvalidArgument, "epochs, batch_size and eval_every must be positive");
  }
  if (gamma_lr && !(*gamma_lr >= 0.0)) fail(ErrorKind::kInvalidArgument, "gamma_lr must be nonnegative");
  loss.validate();
}

double lr_at(long step, long total_steps, double base_lr) {
  if (total_steps < 1 || step < 0 || step > total_steps) {
    fail(ErrorKind::kInvalidArgument, "lr_at: need 0 <= step <= total_steps, total_steps >= 1");
  }
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * (1.0 + std::cos(M_PI * frac)) / 2.0;
}

double clip_by_global_norm(Vector& grads, double clip_norm) {
  const double n = grads.norm();
  if (n > clip_norm) grads *= clip_norm / n;
  return n;
}

AdamWState AdamWState::create(Vector params) {
  AdamWState s;
  const auto n = params.size();
  s.params = std::move(params);
  s.m = Vector::Zero(n);
  s.v = Vector::Zero(n);
  s.decay_mask = Vector::Ones(n);
  s.lr_scale = Vector::Ones(n);
  return s;
}

double adamw_step(AdamWState& s, Vector grads, long step_index, double lr, const TrainConfig& cfg) {
  if (grads.size() != s.params.size()) fail(ErrorKind::kDimensionMismatch, "adamw_step: gradient size");
  if (step_index < 1) fail(ErrorKind::kInvalidArgument, "adamw_step: step_index is 1-based");
  const double norm = clip_by_global_norm(grads, cfg.clip_norm);
  s.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * grads;
  s.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * grads.cwiseProduct(grads);
  const double t = static_cast<double>(step_index);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (Eigen::Index i = 0; i < s.params.size(); ++i) {
    const double step_lr = lr * s.lr_scale[i];
    s.params[i] *= 1.0 - step_lr * cfg.weight_decay * s.decay_mask[i];
    const double m_hat = s.m[i] / bc1;
    const double v_hat = s.v[i] / bc2;
    s.params[i] -= step_lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
  return norm;
}

void TrainLog::write_csv(std::ostream& out) const {
  std::ostringstream buf;
  buf << std::setprecision(17);
  buf << "step,loss,val_ndcg10,gamma_q,gamma_d,q_mag_mean,q_mag_cv,d_mag_mean,d_mag_cv\n";
  for (const auto& r : records) {
    buf << r.step << ',' << r.loss << ',' << r.val_ndcg10 << ',' << r.gamma_q << ',' << r.gamma_d << ','
        << r.q_mag_mean << ',' << r.q_mag_cv << ',' << r.d_mag_mean << ',' << r.d_mag_cv << '\n';
  }
  out << buf.str();
}

const Snapshot& select_checkpoint(const TrainLog& log, std::span<const Snapshot> snapshots) {
  if (log.records.empty()) fail(ErrorKind::kEmptyInput, "select_checkpoint: empty log");
  const TrainRecord* best = &log.records.front();
  for (const auto& r : log.records) {
    if (r.val_ndcg10 > best->val_ndcg10) best = &r;
  }
  for (const auto& s : snapshots) {
    if (s.step == best->step) return s;
  }
  fail(ErrorKind::kInvalidArgument, "select_checkpoint: no snapshot for step " + std::to_string(best->step));
}

std::vector<std::pair<std::size_t, std::size_t>> training_pairs(const SyntheticTask& task) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t q : task.splits.train) {
    for (const auto& [d, grade] : task.qrels[q]) {
      if (grade >= 1) pairs.emplace_back(q, d);
    }
  }
  return pairs;
}

long total_steps(std::size_t n_pairs, const TrainConfig& cfg) {
  const auto b = static_cast<std::size_t>(cfg.batch_size);
  return static_cast<long>(cfg.epochs) * static_cast<long>((n_pairs + b - 1) / b);
}

SimilarityKind inference_kind(const SimilarityKind& kind, const GammaParams& gammas) {
  return kind.is_learnable() ? SimilarityKind::learnable(gammas.gammas()) : kind;
}

std::vector<RankedList> retrieve(const TwoTowerEncoder& encoder, const SimilarityKind& kind,
                                 const SyntheticTask& task, std::span<const std::size_t> queries,
                                 std::size_t depth) {
  Matrix qf(static_cast<Eigen::Index>(queries.size()), task.feature_dim());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    qf.row(static_cast<Eigen::Index>(i)) = task.query_features.row(static_cast<Eigen::Index>(queries[i]));
  }
  const Matrix qe = encoder.forward_batch(qf, Tower::kQuery);
  const Matrix de = encoder.forward_batch(task.doc_features, Tower::kDoc);
  const GammaPair ex = kind.exponents();
  Vector doc_scale = Vector::Ones(de.rows());
  if (ex.d() > 0.0) {
    for (Eigen::Index j = 0; j < de.rows(); ++j) {
      const double n = de.row(j).norm();
      if (n == 0.0) fail(ErrorKind::kZeroMagnitude, "retrieve: zero document embedding");
      doc_scale[j] = kernel::norm_power(n, ex.d());
    }
  }
  const Matrix dots = qe * de.transpose();
  std::vector<RankedList> runs;
  runs.reserve(queries.size());
  const std::size_t keep = std::min(depth, task.n_docs());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    double q_scale = 1.0;
    if (ex.q() > 0.0) {
      const double n = qe.row(row).norm();
      if (n == 0.0) fail(ErrorKind::kZeroMagnitude, "retrieve: zero query embedding");
      q_scale = kernel::norm_power(n, ex.q());
    }
    std::vector<RankedList::Entry> entries(task.n_docs());
    for (std::size_t j = 0; j < task.n_docs(); ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      entries[j] = {SyntheticTask::doc_id(j), dots(row, col) / (q_scale * doc_scale[col])};
    }
    auto ranked = RankedList::from_scores(SyntheticTask::query_id(queries[i]), std::move(entries));
    std::vector<RankedList::Entry> top(ranked.entries().begin(),
                                       ranked.entries().begin() + static_cast<std::ptrdiff_t>(keep));
    runs.emplace_back(ranked.query_id(), std::move(top));
  }
  return runs;
}

double evaluate_ndcg(const TwoTowerEncoder& encoder, const SimilarityKind& kind,
                     const SyntheticTask& task, std::span<const std::size_t> queries, int k) {
  if (queries.empty()) fail(ErrorKind::kEmptyInput, "evaluate_ndcg: no queries");
  const auto runs = retrieve(encoder, kind, task, queries, static_cast<std::size_t>(k));
  return macro_average(runs, task.to_qrels(queries), Metric::kNdcg, k);
}

namespace {

std::vector<double> row_norms(const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).norm();
  return out;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

double sigmoid_prime(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, long epoch) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(epoch), std::uint64_t{0xE9}};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)]);
  }
  return order;
}

[[noreturn]] void non_finite(long step, const std::string& what) {
  fail(ErrorKind::kNonFiniteLoss, what + " at step " + std::to_string(step));
}

}  // namespace

TrainResult train(const SyntheticTask& task, const TwoTowerEncoder& encoder, const TrainConfig& cfg,
                  const TrainOptions& options) {
  cfg.validate();
  if (encoder.dims().feature_dim != task.feature_dim()) {
    fail(ErrorKind::kDimensionMismatch, "encoder input does not match task features");
  }
  const auto pairs = training_pairs(task);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  if (pairs.size() < 2 || batch < 2 || batch > pairs.size()) {
    fail(ErrorKind::kInvalidArgument, "need 2 <= batch_size <= number of training pairs");
  }
  if (task.splits.val.empty()) fail(ErrorKind::kInvalidArgument, "task has no validation queries");

  const long total = total_steps(pairs.size(), cfg);
  const long per_epoch = static_cast<long>((pairs.size() + batch - 1) / batch);
  const Eigen::Index np = encoder.params().size();
  const bool learnable = cfg.loss.kind.is_learnable();

  TrainingState st;
  st.params = encoder.params();
  if (options.resume) {
    st = *options.resume;
    if (st.params.size() != np) fail(ErrorKind::kDimensionMismatch, "resume state does not match encoder");
  }

  Vector packed(np + 2);
  packed << st.params, st.gammas.gamma_hat_q, st.gammas.gamma_hat_d;
  AdamWState opt = AdamWState::create(packed);
  if (options.resume) {
    opt.m = st.adam_m;
    opt.v = st.adam_v;
  }
  opt.decay_mask.tail(2).setZero();
  if (cfg.gamma_lr) opt.lr_scale.tail(2).setConstant(cfg.lr > 0.0 ? *cfg.gamma_lr / cfg.lr : 0.0);

  TrainResult result{TwoTowerEncoder(encoder.dims(), st.params), st.gammas, st.log, {}, {}, {}, total};
  if (st.best) result.snapshots.push_back(*st.best);

  const Matrix val_queries = gather_rows(task.query_features, task.splits.val);
  std::vector<std::size_t> order;
  long order_epoch = -1;
  TwoTowerEncoder current(encoder.dims(), st.params);
  GammaParams gammas = st.gammas;

  Matrix qf(static_cast<Eigen::Index>(batch), task.feature_dim());
  Matrix df(static_cast<Eigen::Index>(batch), task.feature_dim());
  Vector grad(np + 2);
  Vector enc_grad(np);

  for (long step = st.step; step < total; ++step) {
    if (options.stop_after && step >= *options.stop_after) break;
    const long epoch = step / per_epoch;
    if (epoch != order_epoch) {
      order = epoch_order(pairs.size(), cfg.seed, epoch);
      order_epoch = epoch;
    }
    const std::size_t start = static_cast<std::size_t>(step % per_epoch) * batch;
    for (std::size_t t = 0; t < batch; ++t) {
      const auto& [q, d] = pairs[order[(start + t) % pairs.size()]];
      qf.row(static_cast<Eigen::Index>(t)) = task.query_features.row(static_cast<Eigen::Index>(q));
      df.row(static_cast<Eigen::Index>(t)) = task.doc_features.row(static_cast<Eigen::Index>(d));
    }
    const Matrix qe = current.forward_batch(qf, Tower::kQuery);
    const Matrix de = current.forward_batch(df, Tower::kDoc);
    if (!qe.allFinite() || !de.allFinite()) non_finite(step, "non-finite embeddings");

    ContrastiveBatch cb;
    for (std::size_t t = 0; t < batch; ++t) {
      cb.queries.emplace_back(Vector(qe.row(static_cast<Eigen::Index>(t)).transpose()));
      cb.positives.emplace_back(Vector(de.row(static_cast<Eigen::Index>(t)).transpose()));
    }
    LossConfig loss_cfg = cfg.loss;
    loss_cfg.kind = inference_kind(cfg.loss.kind, gammas);
    const InfonceGradient g = infonce_grad(cb, loss_cfg);
    if (!std::isfinite(g.loss)) non_finite(step, "non-finite loss");

    Matrix gq(qe.rows(), qe.cols());
    Matrix gd(de.rows(), de.cols());
    for (std::size_t t = 0; t < batch; ++t) {
      gq.row(static_cast<Eigen::Index>(t)) = g.d_queries[t].transpose();
      gd.row(static_cast<Eigen::Index>(t)) = g.d_positives[t].transpose();
    }
    enc_grad.setZero();
    current.backward_batch(qf, gq, Tower::kQuery, enc_grad);
    current.backward_batch(df, gd, Tower::kDoc, enc_grad);
    grad.head(np) = enc_grad;
    grad[np] = learnable ? sigmoid_prime(gammas.gamma_hat_q) * g.d_gamma_q : 0.0;
    grad[np + 1] = learnable ? sigmoid_prime(gammas.gamma_hat_d) * g.d_gamma_d : 0.0;
    if (!grad.allFinite()) non_finite(step, "non-finite gradient");

    adamw_step(opt, grad, step + 1, lr_at(step, total, cfg.lr), cfg);
    current.mutable_params() = opt.params.head(np);
    gammas = {opt.params[np], opt.params[np + 1]};

    result.step_losses.push_back(g.loss);
    st.window_loss += g.loss;
    st.window_steps += 1;
    st.step = step + 1;

    if (st.step % cfg.eval_every == 0 || st.step == total) {
      const SimilarityKind kind = inference_kind(cfg.loss.kind, gammas);
      TrainRecord rec;
      rec.step = st.step;
      rec.loss = st.window_loss / static_cast<double>(st.window_steps);
      rec.val_ndcg10 = evaluate_ndcg(current, kind, task, task.splits.val, 10);
      const GammaPair gp = gammas.gammas();
      rec.gamma_q = learnable ? gp.q() : kind.exponents().q();
      rec.gamma_d = learnable ? gp.d() : kind.exponents().d();
      const auto qm = row_norms(current.forward_batch(val_queries, Tower::kQuery));
      const auto dm = row_norms(current.forward_batch(task.doc_features, Tower::kDoc));
      rec.q_mag_mean = mean_of(qm);
      rec.q_mag_cv = cv(qm);
      rec.d_mag_mean = mean_of(dm);
      rec.d_mag_cv = cv(dm);
      st.log.records.push_back(rec);
      st.window_loss = 0.0;
      st.window_steps = 0;
      Snapshot snap{rec.step, rec.val_ndcg10, current.params(), gammas};
      if (!st.best || rec.val_ndcg10 > st.best->val_ndcg10) st.best = snap;
      result.snapshots.push_back(std::move(snap));
    }
  }

  st.params = current.params();
  st.gammas = gammas;
  st.adam_m = opt.m;
  st.adam_v = opt.v;
  result.encoder = current;
  result.gammas = gammas;
  result.log = st.log;
  result.state = std::move(st);
  return result;
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j{{"lr", c.lr},
                   {"beta1", c.beta1},
                   {"beta2", c.beta2},
                   {"eps", c.eps},
                   {"weight_decay", c.weight_decay},
                   {"clip_norm", c.clip_norm},
                   {"epochs", c.epochs},
                   {"batch_size", c.batch_size},
                   {"seed", c.seed},
                   {"kind", c.loss.kind.name()},
                   {"tau", c.loss.tau},
                   {"alpha", c.loss.alpha},
                   {"lambda", c.loss.lambda},
                   {"eval_every", c.eval_every}};
  if (c.gamma_lr) j["gamma_lr"] = *c.gamma_lr;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  detail::StrictObject o(j, "train");
  o.read("lr", c.lr);
  o.read("beta1", c.beta1);
  o.read("beta2", c.beta2);
  o.read("eps", c.eps);
  o.read("weight_decay", c.weight_decay);
  o.read("clip_norm", c.clip_norm);
  o.read("epochs", c.epochs);
  o.read("batch_size", c.batch_size);
  o.read("seed", c.seed);
  o.read("tau", c.loss.tau);
  o.read("alpha", c.loss.alpha);
  o.read("lambda", c.loss.lambda);
  o.read("eval_every", c.eval_every);
  std::string kind;
  o.read("kind", kind);
  if (!kind.empty()) c.loss.kind = SimilarityKind::parse(kind);
  double gamma_lr = -1.0;
  o.read("gamma_lr", gamma_lr);
  if (j.contains("gamma_lr")) c.gamma_lr = gamma_lr;
  o.finish();
  c.validate();
  return c;
}

nlohmann::json to_json(const EncoderDims& d) {
  return {{"feature_dim", d.feature_dim}, {"hidden_dim", d.hidden_dim}, {"embed_dim", d.embed_dim}, {"shared", d.shared}};
}

EncoderDims encoder_dims_from_json(const nlohmann::json& j) {
  EncoderDims d;
  detail::StrictObject o(j, "model");
  o.read("feature_dim", d.feature_dim);
  o.read("hidden_dim", d.hidden_dim);
  o.read("embed_dim", d.embed_dim);
  o.read("shared", d.shared);
  o.finish();
  check_dims(d);
  return d;
}

namespace {

nlohmann::json gammas_json(const GammaParams& g) { return {{"q", g.gamma_hat_q}, {"d", g.gamma_hat_d}}; }

GammaParams gammas_from(const nlohmann::json& j) {
  return {j.at("q").get<double>(), j.at("d").get<double>()};
}

nlohmann::json record_json(const TrainRecord& r) {
  return {{"step", r.step},         {"loss", r.loss},         {"val_ndcg10", r.val_ndcg10},
          {"gamma_q", r.gamma_q},   {"gamma_d", r.gamma_d},   {"q_mag_mean", r.q_mag_mean},
          {"q_mag_cv", r.q_mag_cv}, {"d_mag_mean", r.d_mag_mean}, {"d_mag_cv", r.d_mag_cv}};
}

TrainRecord record_from(const nlohmann::json& j) {
  TrainRecord r;
  r.step = j.at("step").get<long>();
  r.loss = j.at("loss").get<double>();
  r.val_ndcg10 = j.at("val_ndcg10").get<double>();
  r.gamma_q = j.at("gamma_q").get<double>();
  r.gamma_d = j.at("gamma_d").get<double>();
  r.q_mag_mean = j.at("q_mag_mean").get<double>();
  r.q_mag_cv = j.at("q_mag_cv").get<double>();
  r.d_mag_mean = j.at("d_mag_mean").get<double>();
  r.d_mag_cv = j.at("d_mag_cv").get<double>();
  return r;
}

}  // namespace

nlohmann::json to_json(const Checkpoint& c) {
  return {{"format", "magnorm-checkpoint"},
          {"version", 1},
          {"dims", to_json(c.dims)},
          {"params", detail::vector_to_json(c.params)},
          {"gamma_hat", gammas_json(c.gammas)},
          {"step", c.step},
          {"val_ndcg10", c.val_ndcg10},
          {"kind", c.kind},
          {"seed", c.seed},
          {"config", c.config}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "magnorm-checkpoint") fail(ErrorKind::kParse, "not a magnorm checkpoint");
    Checkpoint c;
    c.dims = encoder_dims_from_json(j.at("dims"));
    c.params = detail::vector_from_json(j.at("params"), "checkpoint.params");
    c.gammas = gammas_from(j.at("gamma_hat"));
    c.step = j.at("step").get<long>();
    c.val_ndcg10 = j.at("val_ndcg10").get<double>();
    c.kind = j.at("kind").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.config = j.value("config", nlohmann::json::object());
    if (c.params.size() != TwoTowerEncoder::param_count(c.dims)) {
      fail(ErrorKind::kParse, "checkpoint parameter count does not match dims");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("checkpoint: ") + e.what());
  }
}

nlohmann::json to_json(const TrainingState& s) {
  nlohmann::json log = nlohmann::json::array();
  for (const auto& r : s.log.records) log.push_back(record_json(r));
  nlohmann::json best = nullptr;
  if (s.best) {
    best = {{"step", s.best->step},
            {"val_ndcg10", s.best->val_ndcg10},
            {"params", detail::vector_to_json(s.best->params)},
            {"gamma_hat", gammas_json(s.best->gammas)}};
  }
  return {{"format", "magnorm-train-state"},
          {"step", s.step},
          {"params", detail::vector_to_json(s.params)},
          {"gamma_hat", gammas_json(s.gammas)},
          {"adam_m", detail::vector_to_json(s.adam_m)},
          {"adam_v", detail::vector_to_json(s.adam_v)},
          {"log", log},
          {"best", best},
          {"window_loss", s.window_loss},
          {"window_steps", s.window_steps}};
}

TrainingState training_state_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "magnorm-train-state") fail(ErrorKind::kParse, "not a magnorm train state");
    TrainingState s;
    s.step = j.at("step").get<long>();
    s.params = detail::vector_from_json(j.at("params"), "state.params");
    s.gammas = gammas_from(j.at("gamma_hat"));
    s.adam_m = detail::vector_from_json(j.at("adam_m"), "state.adam_m");
    s.adam_v = detail::vector_from_json(j.at("adam_v"), "state.adam_v");
    for (const auto& r : j.at("log")) s.log.records.push_back(record_from(r));
    if (!j.at("best").is_null()) {
      const auto& b = j.at("best");
      s.best = Snapshot{b.at("step").get<long>(), b.at("val_ndcg10").get<double>(),
                        detail::vector_from_json(b.at("params"), "state.best.params"), gammas_from(b.at("gamma_hat"))};
    }
    s.window_loss = j.at("window_loss").get<double>();
    s.window_steps = j.at("window_steps").get<long>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("train state: ") + e.what());
  }
}

}  // namespace magnorm
