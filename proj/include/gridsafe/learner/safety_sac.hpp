#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridsafe/env/action.hpp"
#include "gridsafe/env/environment.hpp"
#include "gridsafe/error.hpp"
#include "gridsafe/learner/features.hpp"
#include "gridsafe/learner/mlp.hpp"
#include "gridsafe/replay/buffer.hpp"

namespace gridsafe {

struct SacConfig {
  double gamma = 0.99;
  double alpha = 0.2;      // entropy temperature, fixed
  double beta = 1.0;       // weight of the actor's safety margin term
  double epsilon_c = 1.0;  // safety tolerance
  double soft_rate = 0.005;
  double lr_actor = 5e-5;    // eta_pi
  double lr_critic = 1e-4;   // eta_Q
  double lr_lambda = 1e-3;   // eta_lambda
  double lr_encoder = 1e-4;  // eta_E
  double lambda_init = 1.0;
  bool freeze_lambda = false;
  int hidden = 64;
  int latent = 128;
  int n_hist = 6;
  double dropout = 0.1;  // on the encoder output during the critic step
  std::size_t batch_size = 32;
  double alpha_v = 0.9;  // step safety cost weights
  double alpha_l = 0.1;

  void validate() const {
    if (!(gamma > 0 && gamma < 1)) throw InvariantError("learner: gamma must be in (0,1)");
    if (!(alpha > 0)) throw InvariantError("learner: alpha must be > 0");
    if (!(beta >= 0)) throw InvariantError("learner: beta must be >= 0");
    if (!(soft_rate >= 0 && soft_rate <= 1)) throw InvariantError("learner: soft_rate must be in [0,1]");
    if (!(lr_actor > 0 && lr_critic > 0 && lr_lambda >= 0 && lr_encoder > 0))
      throw InvariantError("learner: learning rates must be positive");
    if (!(lambda_init >= 0)) throw InvariantError("learner: lambda_init must be >= 0");
    if (hidden <= 0 || latent <= 0 || n_hist <= 0 || batch_size == 0)
      throw InvariantError("learner: dimensions must be positive");
    if (!(dropout >= 0 && dropout < 1)) throw InvariantError("learner: dropout must be in [0,1)");
  }
};

/// All parameter sets of the learner.
struct SacNetworks {
  Mlp encoder;  // features -> latent, tanh
  Mlp q1, q2;   // twin reward critics, latent -> |A|
  Mlp qc;       // safety critic, sigmoid outputs
  Mlp policy;   // latent -> logits
  Mlp q1_target, q2_target, qc_target;
  friend bool operator==(const SacNetworks&, const SacNetworks&) = default;
};

template <class Rng>
SacNetworks make_networks(int input, int actions, const SacConfig& cfg, Rng& rng) {
  SacNetworks n;
  n.encoder = Mlp({input, cfg.hidden, cfg.latent}, Activation::tanh, Activation::tanh, rng);
  n.q1 = Mlp({cfg.latent, cfg.hidden, actions}, Activation::tanh, Activation::identity, rng);
  n.q2 = Mlp({cfg.latent, cfg.hidden, actions}, Activation::tanh, Activation::identity, rng);
  n.policy = Mlp({cfg.latent, cfg.hidden, actions}, Activation::tanh, Activation::identity, rng);
  // The safety critic draws from its own stream so the remaining networks
  // initialize identically with or without it.
  std::mt19937_64 side(rng());
  n.qc = Mlp({cfg.latent, cfg.hidden, actions}, Activation::tanh, Activation::sigmoid, side);
  n.q1_target = n.q1;
  n.q2_target = n.q2;
  n.qc_target = n.qc;
  return n;
}

/// Training minibatch; columns of s / s_next are items.
struct SacBatch {
  Eigen::MatrixXd s, s_next;
  std::vector<std::size_t> action;
  Eigen::VectorXd reward, cost;
  std::vector<std::uint8_t> done;
  std::size_t size() const { return action.size(); }
};

/// Row-wise softmax over columns (each column one distribution).
inline Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    const double m = p.col(j).maxCoeff();
    p.col(j) = (p.col(j).array() - m).exp();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

inline Eigen::MatrixXd log_softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd lp = logits;
  for (Eigen::Index j = 0; j < lp.cols(); ++j) {
    const double m = lp.col(j).maxCoeff();
    const double lse = m + std::log((lp.col(j).array() - m).exp().sum());
    lp.col(j).array() -= lse;
  }
  return lp;
}

struct Targets {
  Eigen::VectorXd y_r, y_c;
};

/// Exact expectations over the discrete action set under target critics.
/// Terminal next states drop the bootstrap term.
inline Targets compute_targets(const SacNetworks& n, const SacConfig& cfg, const SacBatch& b) {
  const Eigen::MatrixXd z = n.encoder.forward(b.s_next);
  const Eigen::MatrixXd logits = n.policy.forward(z);
  const Eigen::MatrixXd p = softmax_columns(logits), logp = log_softmax_columns(logits);
  const Eigen::MatrixXd qmin = n.q1_target.forward(z).cwiseMin(n.q2_target.forward(z));
  const Eigen::MatrixXd qc = n.qc_target.forward(z);
  Targets t{Eigen::VectorXd(b.size()), Eigen::VectorXd(b.size())};
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    double vr = 0.0, vc = 0.0;
    if (!b.done[i]) {
      for (Eigen::Index a = 0; a < p.rows(); ++a) {
        vr += p(a, col) * (qmin(a, col) - cfg.alpha * logp(a, col));
        vc += p(a, col) * qc(a, col);
      }
    }
    t.y_r(col) = b.reward(col) + (b.done[i] ? 0.0 : cfg.gamma * vr);
    t.y_c(col) = b.cost(col) + (b.done[i] ? 0.0 : cfg.gamma * vc);
  }
  return t;
}

/// Losses and gradients of the critic step. L_r averages the two twin
/// critics' mean squared errors; L_enc = L_r + lambda * L_c.
struct CriticEval {
  double loss_r = 0.0, loss_c = 0.0;
  Mlp enc_r, enc_c;  // encoder gradients of L_r and L_c
  Mlp q1, q2;        // gradients of L_r
  Mlp qc;            // gradient of L_c
  double loss_enc(double lambda) const { return loss_r + lambda * loss_c; }
};

/// `mask` (latent x B) multiplies the encoder output; pass nullptr for none.
inline CriticEval critic_eval(const SacNetworks& n, const SacBatch& b, const Targets& t,
                              const Eigen::MatrixXd* mask = nullptr) {
  const double B = static_cast<double>(b.size());
  Mlp::Cache ce, c1, c2, cc;
  const Eigen::MatrixXd z_raw = n.encoder.forward(b.s, &ce);
  const Eigen::MatrixXd z = mask ? Eigen::MatrixXd(z_raw.cwiseProduct(*mask)) : z_raw;
  const Eigen::MatrixXd o1 = n.q1.forward(z, &c1), o2 = n.q2.forward(z, &c2), oc = n.qc.forward(z, &cc);
  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(o1.rows(), o1.cols()), d2 = d1, dc = d1;
  CriticEval e{0.0, 0.0, n.encoder.zeros_like(), n.encoder.zeros_like(), n.q1.zeros_like(), n.q2.zeros_like(),
               n.qc.zeros_like()};
  double s1 = 0.0, s2 = 0.0, sc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const auto a = static_cast<Eigen::Index>(b.action[i]);
    const double r1 = o1(a, col) - t.y_r(col), r2 = o2(a, col) - t.y_r(col), rc = oc(a, col) - t.y_c(col);
    s1 += r1 * r1;
    s2 += r2 * r2;
    sc += rc * rc;
    d1(a, col) = r1 / B;  // d/dQ of 0.5 * (1/B) sum r^2
    d2(a, col) = r2 / B;
    dc(a, col) = 2.0 * rc / B;
  }
  e.loss_r = 0.5 * (s1 / B + s2 / B);
  e.loss_c = sc / B;
  Eigen::MatrixXd dz_r = n.q1.backward(c1, d1, e.q1) + n.q2.backward(c2, d2, e.q2);
  Eigen::MatrixXd dz_c = n.qc.backward(cc, dc, e.qc);
  if (mask) {
    dz_r = dz_r.cwiseProduct(*mask);
    dz_c = dz_c.cwiseProduct(*mask);
  }
  n.encoder.backward(ce, dz_r, e.enc_r);
  n.encoder.backward(ce, dz_c, e.enc_c);
  return e;
}

/// Actor objective at latent states z (gradients stop at the latent).
struct ActorEval {
  double loss = 0.0, loss_r = 0.0, loss_c = 0.0;
  Mlp policy;  // gradient of loss
};

inline ActorEval actor_eval(const SacNetworks& n, const SacConfig& cfg, const Eigen::MatrixXd& z) {
  const double B = static_cast<double>(z.cols());
  Mlp::Cache cp;
  const Eigen::MatrixXd logits = n.policy.forward(z, &cp);
  const Eigen::MatrixXd p = softmax_columns(logits), logp = log_softmax_columns(logits);
  const Eigen::MatrixXd qmin = n.q1.forward(z).cwiseMin(n.q2.forward(z));
  const Eigen::MatrixXd qc = n.qc.forward(z);
  Eigen::MatrixXd d(logits.rows(), logits.cols());
  ActorEval e;
  double sum_r = 0.0, sum_c = 0.0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    double mean_f = 0.0;
    Eigen::VectorXd f(p.rows());
    for (Eigen::Index a = 0; a < p.rows(); ++a) {
      const double fr = cfg.alpha * logp(a, j) - qmin(a, j);
      const double fc = std::max(0.0, qc(a, j) - cfg.epsilon_c);
      f(a) = fr + cfg.beta * fc;
      sum_r += p(a, j) * fr;
      sum_c += p(a, j) * fc;
      mean_f += p(a, j) * f(a);
    }
    for (Eigen::Index a = 0; a < p.rows(); ++a) d(a, j) = p(a, j) * (f(a) - mean_f) / B;
  }
  e.loss_r = sum_r / B;
  e.loss_c = sum_c / B;
  e.loss = e.loss_r + cfg.beta * e.loss_c;
  e.policy = n.policy.zeros_like();
  n.policy.backward(cp, d, e.policy);
  return e;
}

/// [lambda + eta * max(0, mean_qc - eps)]_+
inline double lagrange_step(double lambda, double mean_qc, double epsilon_c, double lr) {
  return std::max(0.0, lambda + lr * std::max(0.0, mean_qc - epsilon_c));
}

struct StepReport {
  double loss_r = 0.0, loss_c = 0.0, loss_enc = 0.0;
  double loss_pi = 0.0, loss_pi_r = 0.0, loss_pi_c = 0.0;
  double lambda = 0.0;
  double mean_qc = 0.0;
  double grad_norm_critic = 0.0, grad_norm_actor = 0.0;
};

/// Discrete-action Safety-SAC learner over an enumerated action set.
class SafetySac {
 public:
  SafetySac(const GridCase& c, const EnvConfig& env_cfg, SacConfig cfg, std::uint64_t seed)
      : cfg_(cfg), env_cfg_(env_cfg), layout_(c, static_cast<std::size_t>(cfg.n_hist)), actions_(c),
        rng_(seed), lambda_(cfg.lambda_init) {
    cfg_.validate();
    if (env_cfg.history_length < cfg.n_hist)
      throw InvariantError("learner n_hist exceeds the environment history length");
    nets_ = make_networks(static_cast<int>(layout_.size()), static_cast<int>(actions_.size()), cfg_, rng_);
  }

  const SacConfig& config() const { return cfg_; }
  const FeatureLayout& layout() const { return layout_; }
  const ActionSpace& actions() const { return actions_; }
  SacNetworks& networks() { return nets_; }
  const SacNetworks& networks() const { return nets_; }
  double lambda() const { return lambda_; }
  void set_lambda(double l) { lambda_ = l; }
  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t s) { steps_ = s; }
  std::mt19937_64& rng() { return rng_; }

  Eigen::VectorXd features(const GridState& s) const { return featurize(s, layout_, env_cfg_); }

  /// Enumerated index of a transition's action; unmatched actions count as
  /// do-nothing.
  std::size_t action_index(const GridCase& c, const Transition& t) const {
    return actions_.index_of(c, t.state.topology, t.action).value_or(0);
  }

  SacBatch make_batch(const GridCase& c, const std::vector<Transition>& items) const {
    SacBatch b;
    const auto F = static_cast<Eigen::Index>(layout_.size());
    const auto B = static_cast<Eigen::Index>(items.size());
    b.s.resize(F, B);
    b.s_next.resize(F, B);
    b.reward.resize(B);
    b.cost.resize(B);
    for (Eigen::Index i = 0; i < B; ++i) {
      const Transition& t = items[static_cast<std::size_t>(i)];
      b.s.col(i) = features(t.state);
      b.s_next.col(i) = features(t.next_state);
      b.action.push_back(action_index(c, t));
      b.reward(i) = t.reward;
      b.cost(i) = t.safety_cost(cfg_.alpha_v, cfg_.alpha_l);
      b.done.push_back(t.next_state.terminal ? 1 : 0);
    }
    return b;
  }

  Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Ones(rows, cols);
    if (cfg_.dropout <= 0) return m;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep = 1.0 - cfg_.dropout;
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng_) < cfg_.dropout ? 0.0 : 1.0 / keep;
    return m;
  }

  /// One pass of the inner gradient block: critic/encoder step, multiplier
  /// step, actor step, soft target update.
  StepReport update(const SacBatch& b) {
    StepReport rep;
    const Targets t = compute_targets(nets_, cfg_, b);
    const Eigen::MatrixXd mask = dropout_mask(cfg_.latent, static_cast<Eigen::Index>(b.size()));
    const CriticEval ce = critic_eval(nets_, b, t, cfg_.dropout > 0 ? &mask : nullptr);
    rep.loss_r = ce.loss_r;
    rep.loss_c = ce.loss_c;
    rep.loss_enc = ce.loss_enc(lambda_);
    if (!std::isfinite(rep.loss_enc)) throw NumericError("critic step: non-finite loss");
    Mlp enc_grad = ce.enc_r;
    enc_grad.add_scaled(ce.enc_c, lambda_);
    rep.grad_norm_critic =
        std::sqrt(enc_grad.squared_norm() + ce.q1.squared_norm() + ce.q2.squared_norm() + ce.qc.squared_norm());
    if (!std::isfinite(rep.grad_norm_critic)) throw NumericError("critic step: non-finite gradient");
    nets_.encoder.add_scaled(enc_grad, -cfg_.lr_encoder);
    nets_.q1.add_scaled(ce.q1, -cfg_.lr_critic);
    nets_.q2.add_scaled(ce.q2, -cfg_.lr_critic);
    nets_.qc.add_scaled(ce.qc, -cfg_.lr_critic);

    const Eigen::MatrixXd z = nets_.encoder.forward(b.s);
    const Eigen::MatrixXd qc = nets_.qc.forward(z);
    double mean_qc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
      mean_qc += qc(static_cast<Eigen::Index>(b.action[i]), static_cast<Eigen::Index>(i));
    mean_qc /= static_cast<double>(b.size());
    rep.mean_qc = mean_qc;
    if (!cfg_.freeze_lambda) lambda_ = lagrange_step(lambda_, mean_qc, cfg_.epsilon_c, cfg_.lr_lambda);
    rep.lambda = lambda_;

    const ActorEval ae = actor_eval(nets_, cfg_, z);
    rep.loss_pi = ae.loss;
    rep.loss_pi_r = ae.loss_r;
    rep.loss_pi_c = ae.loss_c;
    if (!std::isfinite(ae.loss)) throw NumericError("actor step: non-finite loss");
    rep.grad_norm_actor = std::sqrt(ae.policy.squared_norm());
    nets_.policy.add_scaled(ae.policy, -cfg_.lr_actor);

    nets_.q1_target.soft_update(nets_.q1, cfg_.soft_rate);
    nets_.q2_target.soft_update(nets_.q2, cfg_.soft_rate);
    nets_.qc_target.soft_update(nets_.qc, cfg_.soft_rate);
    ++steps_;
    return rep;
  }

  StepReport train_step(const GridCase& c, const ReplayBuffer& buffer) {
    if (buffer.size() < cfg_.batch_size) throw UsageError("train_step: buffer smaller than batch size");
    const auto items = buffer.sample(cfg_.batch_size, rng_);
    return update(make_batch(c, items));
  }

  Eigen::VectorXd probabilities(const GridState& s) const {
    Eigen::MatrixXd x = features(s);
    return softmax_columns(nets_.policy.forward(nets_.encoder.forward(x))).col(0);
  }

  enum class Mode { sample, greedy };

  std::size_t select_index(const GridState& s, Mode mode) {
    if (s.terminal) throw UsageError("select_action: state is terminal");
    const Eigen::VectorXd p = probabilities(s);
    if (mode == Mode::greedy) {
      Eigen::Index best = 0;
      for (Eigen::Index a = 1; a < p.size(); ++a)
        if (p(a) > p(best)) best = a;
      return static_cast<std::size_t>(best);
    }
    return sample_categorical(p, rng_);
  }

  Action select_action(const GridState& s, Mode mode) { return actions_[select_index(s, mode)]; }

  template <class Rng>
  static std::size_t sample_categorical(const Eigen::VectorXd& p, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    double acc = 0.0;
    for (Eigen::Index a = 0; a < p.size(); ++a) {
      acc += p(a);
      if (x < acc) return static_cast<std::size_t>(a);
    }
    return static_cast<std::size_t>(p.size() - 1);
  }

 private:
  SacConfig cfg_;
  EnvConfig env_cfg_;
  FeatureLayout layout_;
  ActionSpace actions_;
  std::mt19937_64 rng_;
  SacNetworks nets_;
  double lambda_;
  std::uint64_t steps_ = 0;
};

}  // namespace gridsafe
