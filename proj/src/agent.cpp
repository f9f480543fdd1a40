#include "bac/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bac/kernels.hpp"

namespace bac {
namespace {

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

MlpParams make_net(std::size_t in, std::span<const std::size_t> hidden, std::size_t out,
                   Activation hidden_act, Rng& rng) {
  std::vector<std::size_t> widths;
  widths.push_back(in);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  std::vector<Activation> acts(widths.size() - 1, hidden_act);
  acts.back() = Activation::Linear;
  return make_mlp(widths, acts, rng);
}

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void BacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("config: gamma must lie in [0, 1)");
  if (!(alpha >= 0.0)) throw std::invalid_argument("config: alpha must be >= 0");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("config: tau must lie in (0, 1]");
  if (batch_size == 0) throw std::invalid_argument("config: batch_size must be positive");
  for (double lr : {lr_actor, lr_critic, lr_autoencoder, lr_aux})
    if (!(lr > 0.0)) throw std::invalid_argument("config: learning rates must be positive");
  if (actor_grad_clip && !(*actor_grad_clip > 0.0))
    throw std::invalid_argument("config: actor_grad_clip must be positive");
  if (critic_grad_clip && !(*critic_grad_clip > 0.0))
    throw std::invalid_argument("config: critic_grad_clip must be positive");
  if (!(det_noise_std >= 0.0))
    throw std::invalid_argument("config: det_noise_std must be >= 0");
  if (!std::isfinite(adaptive_omega))
    throw std::invalid_argument("config: adaptive_omega must be finite");
  if (buffer_capacity < batch_size)
    throw std::invalid_argument("config: buffer_capacity must be >= batch_size");
  if (ae_update_every_episodes == 0)
    throw std::invalid_argument("config: ae_update_every_episodes must be positive");
  if (ae_epochs <= 0 || ae_minibatch <= 0)
    throw std::invalid_argument("config: autoencoder epochs/minibatch must be positive");
  if (hidden.empty()) throw std::invalid_argument("config: at least one hidden layer");
  for (std::size_t w : hidden)
    if (w == 0) throw std::invalid_argument("config: hidden widths must be positive");
}

namespace {

const BacConfig& validated(const BacConfig& config) {
  config.validate();
  return config;
}

const EnvSpec& checked(const EnvSpec& spec) {
  if (spec.observation_dim == 0 || spec.action_dim == 0)
    throw std::invalid_argument("BacAgent: observation/action dims must be positive");
  return spec;
}

}  // namespace

BacAgent::BacAgent(const EnvSpec& spec, const BacConfig& config, std::uint64_t seed)
    : spec_(checked(spec)),
      cfg_(validated(config)),
      rng_(seed),
      actor_(make_net(spec_.observation_dim, cfg_.hidden,
                      cfg_.policy == PolicyType::Stochastic ? 2 * spec_.action_dim
                                                            : spec_.action_dim,
                      cfg_.hidden_activation, rng_)),
      critics_{make_net(spec_.observation_dim + spec_.action_dim, cfg_.hidden, 1,
                        cfg_.hidden_activation, rng_),
               make_net(spec_.observation_dim + spec_.action_dim, cfg_.hidden, 1,
                        cfg_.hidden_activation, rng_)},
      targets_{critics_[0], critics_[1]},
      actor_opt_(make_adam_state(actor_)),
      critic_opts_{make_adam_state(critics_[0]), make_adam_state(critics_[1])},
      behavior_(spec_.observation_dim, spec_.action_dim,
                concat(spec_.observation_low, spec_.action_low),
                concat(spec_.observation_high, spec_.action_high), rng_,
                cfg_.lr_autoencoder, cfg_.ae_epochs, cfg_.ae_minibatch),
      buffer_(cfg_.buffer_capacity) {
  if (cfg_.alpha_mode == AlphaMode::Adaptive) {
    AdaptiveTemperature temp;
    temp.q = make_net(spec_.observation_dim + spec_.action_dim, cfg_.hidden, 1,
                      cfg_.hidden_activation, rng_);
    temp.opt = make_adam_state(temp.q);
    temp_ = std::move(temp);
  }
}

BacAgent::PolicyHead BacAgent::policy_forward(std::span<const double> state) const {
  if (state.size() != spec_.observation_dim)
    throw std::invalid_argument("BacAgent: state dimension mismatch");
  PolicyHead head;
  auto out = mlp_forward(actor_, state, &head.cache);
  const std::size_t act = spec_.action_dim;
  if (cfg_.policy == PolicyType::Stochastic) {
    head.mean.assign(out.begin(), out.begin() + act);
    head.log_std.resize(act);
    for (std::size_t k = 0; k < act; ++k)
      head.log_std[k] = clamp(out[act + k], kLogStdMin, kLogStdMax);
  } else {
    head.mean = std::move(out);
  }
  return head;
}

std::vector<double> BacAgent::squash(std::span<const double> u) const {
  std::vector<double> a(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double t = std::tanh(u[k]);
    a[k] = spec_.action_low[k] +
           0.5 * (t + 1.0) * (spec_.action_high[k] - spec_.action_low[k]);
  }
  return a;
}

double BacAgent::squash_derivative(double u, std::size_t dim) const {
  const double t = std::tanh(u);
  return 0.5 * (1.0 - t * t) * (spec_.action_high[dim] - spec_.action_low[dim]);
}

std::vector<double> BacAgent::select_action(std::span<const double> state,
                                            ActionMode mode) {
  PolicyHead head = policy_forward(state);
  const std::size_t act = spec_.action_dim;
  if (cfg_.policy == PolicyType::Stochastic) {
    if (mode == ActionMode::Eval) return squash(head.mean);
    std::vector<double> u(act);
    for (std::size_t k = 0; k < act; ++k)
      u[k] = head.mean[k] + std::exp(head.log_std[k]) * rng_.normal();
    return squash(u);
  }
  std::vector<double> point = squash(head.mean);
  if (mode == ActionMode::Eval) return point;
  for (std::size_t k = 0; k < act; ++k) {
    const double half_range = 0.5 * (spec_.action_high[k] - spec_.action_low[k]);
    point[k] = clamp(point[k] + cfg_.det_noise_std * half_range * rng_.normal(),
                     spec_.action_low[k], spec_.action_high[k]);
  }
  return point;
}

std::vector<std::vector<double>> BacAgent::sample_noise(std::size_t n) {
  std::vector<std::vector<double>> noise(n);
  for (auto& row : noise) {
    row.resize(spec_.action_dim);
    for (auto& e : row) e = rng_.normal();
  }
  return noise;
}

std::vector<std::vector<double>> BacAgent::sample_next_actions(
    const std::vector<Transition>& batch) {
  std::vector<std::vector<double>> actions;
  actions.reserve(batch.size());
  for (const auto& t : batch) {
    PolicyHead head = policy_forward(t.next_state);
    if (cfg_.policy == PolicyType::Stochastic) {
      std::vector<double> u(spec_.action_dim);
      for (std::size_t k = 0; k < spec_.action_dim; ++k)
        u[k] = head.mean[k] + std::exp(head.log_std[k]) * rng_.normal();
      actions.push_back(squash(u));
    } else {
      actions.push_back(squash(head.mean));
    }
  }
  return actions;
}

double BacAgent::critic_value(int j, std::span<const double> state,
                              std::span<const double> action, bool use_target) const {
  const auto input = concat(state, action);
  const MlpParams& net = use_target ? targets_[j] : critics_[j];
  return mlp_forward(net, input)[0];
}

std::vector<double> BacAgent::critic_target(
    const std::vector<Transition>& batch,
    const std::vector<std::vector<double>>& next_actions, double alpha) {
  if (batch.empty()) throw std::invalid_argument("critic_target: empty batch");
  if (next_actions.size() != batch.size())
    throw std::invalid_argument("critic_target: next_actions size mismatch");
  const bool adaptive = cfg_.alpha_mode == AlphaMode::Adaptive;

  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = batch[i];
    double target = adaptive ? alpha * t.reward : t.reward;
    if (!t.done) {
      const auto& a2 = next_actions[i];
      if (alpha != 0.0) {
        const double psi = cfg_.use_raw_psi
                               ? behavior_.behavior_value(t.next_state, a2)
                               : behavior_.normalized_behavior_value(t.next_state, a2);
        target += adaptive ? cfg_.gamma * (1.0 - alpha) * psi : alpha * psi;
      }
      const double q1 = critic_value(0, t.next_state, a2, /*use_target=*/true);
      const double q2 = critic_value(1, t.next_state, a2, /*use_target=*/true);
      target += cfg_.gamma * std::min(q1, q2);
    }
    y[i] = target;
  }
  return y;
}

std::vector<double> BacAgent::critic_target(const std::vector<Transition>& batch,
                                            double alpha) {
  return critic_target(batch, sample_next_actions(batch), alpha);
}

std::pair<double, GradientSet> BacAgent::critic_loss_and_grads(
    int j, const std::vector<Transition>& batch,
    const std::vector<double>& targets) const {
  if (batch.size() != targets.size())
    throw std::invalid_argument("critic_loss_and_grads: size mismatch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  GradientSet grads = zero_gradients(critics_[j]);
  ForwardCache cache;
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto input = concat(batch[i].state, batch[i].action);
    const double q = mlp_forward(critics_[j], input, &cache)[0];
    const double err = q - targets[i];
    loss += err * err * inv;
    const std::vector<double> out_grad = {2.0 * err * inv};
    auto res = mlp_backward(critics_[j], cache, out_grad);
    accumulate_gradients(grads, res.grads);
  }
  return {loss, std::move(grads)};
}

double BacAgent::critic_update(const std::vector<Transition>& batch, double alpha) {
  if (batch.empty()) throw std::invalid_argument("critic_update: empty batch");
  const std::vector<double> y = critic_target(batch, alpha);
  if (!all_finite(y)) throw NonFiniteError("critic_update: non-finite targets");

  auto [loss0, grads0] = critic_loss_and_grads(0, batch, y);
  auto [loss1, grads1] = critic_loss_and_grads(1, batch, y);
  const double loss = 0.5 * (loss0 + loss1);
  if (!std::isfinite(loss)) throw NonFiniteError("critic_update: non-finite loss, step aborted");
  if (cfg_.critic_grad_clip) {
    global_norm_clip(grads0, *cfg_.critic_grad_clip);
    global_norm_clip(grads1, *cfg_.critic_grad_clip);
  }
  adam_step(critics_[0], grads0, critic_opts_[0], cfg_.lr_critic);
  adam_step(critics_[1], grads1, critic_opts_[1], cfg_.lr_critic);
  return loss;
}

double BacAgent::reparameterized_objective(const std::vector<Transition>& batch,
                                           const std::vector<std::vector<double>>& noise,
                                           GradientSet* grads_out) const {
  if (batch.empty()) throw std::invalid_argument("actor update: empty batch");
  if (noise.size() != batch.size())
    throw std::invalid_argument("actor update: noise size mismatch");
  const std::size_t act = spec_.action_dim;
  const std::size_t obs = spec_.observation_dim;
  const double inv = 1.0 / static_cast<double>(batch.size());

  GradientSet grads = grads_out ? zero_gradients(actor_) : GradientSet{};
  double objective = 0.0;
  ForwardCache critic_cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    PolicyHead head = policy_forward(batch[i].state);
    std::vector<double> u(act);
    std::vector<double> sigma(act);
    for (std::size_t k = 0; k < act; ++k) {
      sigma[k] = std::exp(head.log_std[k]);
      u[k] = head.mean[k] + sigma[k] * noise[i][k];
    }
    const auto action = squash(u);
    const auto input = concat(batch[i].state, action);

    double q[2];
    int jmin = 0;
    q[0] = mlp_forward(critics_[0], input, grads_out ? &critic_cache : nullptr)[0];
    {
      ForwardCache other;
      q[1] = mlp_forward(critics_[1], input, grads_out ? &other : nullptr)[0];
      if (q[1] < q[0]) {
        jmin = 1;
        critic_cache = std::move(other);
      }
    }
    objective += q[jmin] * inv;

    if (grads_out) {
      const std::vector<double> unit = {1.0};
      auto critic_back = mlp_backward(critics_[jmin], critic_cache, unit);
      // dQ/da is the action slice of the critic input gradient
      std::vector<double> actor_out_grad(actor_.output_width(), 0.0);
      const auto& raw = head.cache.post.back();
      for (std::size_t k = 0; k < act; ++k) {
        const double dq_da = critic_back.input_gradient[obs + k];
        const double chain = dq_da * squash_derivative(u[k], k);
        actor_out_grad[k] = chain;
        const double raw_log_std = raw[act + k];
        if (raw_log_std > kLogStdMin && raw_log_std < kLogStdMax)
          actor_out_grad[act + k] = chain * sigma[k] * noise[i][k];
      }
      auto actor_back = mlp_backward(actor_, head.cache, actor_out_grad);
      accumulate_gradients(grads, actor_back.grads, inv);
    }
  }
  if (grads_out) *grads_out = std::move(grads);
  return objective;
}

double BacAgent::actor_update_reparameterized(const std::vector<Transition>& batch) {
  if (cfg_.policy != PolicyType::Stochastic)
    throw std::logic_error("actor_update_reparameterized: stochastic policy required");
  const auto noise = sample_noise(batch.size());
  GradientSet grads;
  const double objective = reparameterized_objective(batch, noise, &grads);
  if (!std::isfinite(objective))
    throw NonFiniteError("actor update: non-finite objective");
  scale_gradients(grads, -1.0);  // ascend
  if (cfg_.actor_grad_clip) global_norm_clip(grads, *cfg_.actor_grad_clip);
  adam_step(actor_, grads, actor_opt_, cfg_.lr_actor);
  return objective;
}

double BacAgent::score_objective(const std::vector<Transition>& batch,
                                 const std::vector<std::vector<double>>& noise,
                                 GradientSet* grads_out) const {
  if (batch.empty()) throw std::invalid_argument("actor update: empty batch");
  if (noise.size() != batch.size())
    throw std::invalid_argument("actor update: noise size mismatch");
  const std::size_t act = spec_.action_dim;
  const double inv = 1.0 / static_cast<double>(batch.size());

  GradientSet grads = grads_out ? zero_gradients(actor_) : GradientSet{};
  double objective = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    PolicyHead head = policy_forward(batch[i].state);
    std::vector<double> u(act);
    std::vector<double> sigma(act);
    for (std::size_t k = 0; k < act; ++k) {
      sigma[k] = std::exp(head.log_std[k]);
      u[k] = head.mean[k] + sigma[k] * noise[i][k];
    }
    const auto action = squash(u);
    const double w = std::min(critic_value(0, batch[i].state, action),
                              critic_value(1, batch[i].state, action));
    objective += w * inv;

    if (grads_out) {
      // With the sampled action held fixed, grad log pi reduces to the
      // Gaussian terms: d/dmean = eps/sigma, d/dlogstd = eps^2 - 1.
      std::vector<double> actor_out_grad(actor_.output_width(), 0.0);
      const auto& raw = head.cache.post.back();
      for (std::size_t k = 0; k < act; ++k) {
        actor_out_grad[k] = w * noise[i][k] / sigma[k];
        const double raw_log_std = raw[act + k];
        if (raw_log_std > kLogStdMin && raw_log_std < kLogStdMax)
          actor_out_grad[act + k] = w * (noise[i][k] * noise[i][k] - 1.0);
      }
      auto actor_back = mlp_backward(actor_, head.cache, actor_out_grad);
      accumulate_gradients(grads, actor_back.grads, inv);
    }
  }
  if (grads_out) *grads_out = std::move(grads);
  return objective;
}

double BacAgent::actor_update_score_function(const std::vector<Transition>& batch) {
  if (cfg_.policy != PolicyType::Stochastic)
    throw std::logic_error("actor_update_score_function: stochastic policy required");
  const auto noise = sample_noise(batch.size());
  GradientSet grads;
  const double objective = score_objective(batch, noise, &grads);
  if (!std::isfinite(objective))
    throw NonFiniteError("actor update: non-finite objective");
  scale_gradients(grads, -1.0);
  if (cfg_.actor_grad_clip) global_norm_clip(grads, *cfg_.actor_grad_clip);
  adam_step(actor_, grads, actor_opt_, cfg_.lr_actor);
  return objective;
}

double BacAgent::deterministic_objective(const std::vector<Transition>& batch,
                                         GradientSet* grads_out) const {
  if (batch.empty()) throw std::invalid_argument("actor update: empty batch");
  const std::size_t act = spec_.action_dim;
  const std::size_t obs = spec_.observation_dim;
  const double inv = 1.0 / static_cast<double>(batch.size());

  GradientSet grads = grads_out ? zero_gradients(actor_) : GradientSet{};
  double objective = 0.0;
  ForwardCache critic_cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    PolicyHead head = policy_forward(batch[i].state);
    const auto action = squash(head.mean);
    const auto input = concat(batch[i].state, action);
    double q[2];
    int jmin = 0;
    q[0] = mlp_forward(critics_[0], input, grads_out ? &critic_cache : nullptr)[0];
    {
      ForwardCache other;
      q[1] = mlp_forward(critics_[1], input, grads_out ? &other : nullptr)[0];
      if (q[1] < q[0]) {
        jmin = 1;
        critic_cache = std::move(other);
      }
    }
    objective += q[jmin] * inv;
    if (grads_out) {
      const std::vector<double> unit = {1.0};
      auto critic_back = mlp_backward(critics_[jmin], critic_cache, unit);
      std::vector<double> actor_out_grad(act);
      for (std::size_t k = 0; k < act; ++k) {
        actor_out_grad[k] =
            critic_back.input_gradient[obs + k] * squash_derivative(head.mean[k], k);
      }
      auto actor_back = mlp_backward(actor_, head.cache, actor_out_grad);
      accumulate_gradients(grads, actor_back.grads, inv);
    }
  }
  if (grads_out) *grads_out = std::move(grads);
  return objective;
}

double BacAgent::actor_update_deterministic(const std::vector<Transition>& batch) {
  if (cfg_.policy != PolicyType::Deterministic)
    throw std::logic_error("actor_update_deterministic: deterministic policy required");
  GradientSet grads;
  const double objective = deterministic_objective(batch, &grads);
  if (!std::isfinite(objective))
    throw NonFiniteError("actor update: non-finite objective");
  scale_gradients(grads, -1.0);
  if (cfg_.actor_grad_clip) global_norm_clip(grads, *cfg_.actor_grad_clip);
  adam_step(actor_, grads, actor_opt_, cfg_.lr_actor);
  return objective;
}

void BacAgent::target_update(double tau) {
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("target_update: tau must lie in (0, 1]");
  const auto& k = kernels::active();
  for (int j = 0; j < 2; ++j) {
    for (std::size_t l = 0; l < critics_[j].layers.size(); ++l) {
      auto& dst = targets_[j].layers[l];
      const auto& src = critics_[j].layers[l];
      k.polyak(dst.weight.data.size(), tau, src.weight.data.data(),
               dst.weight.data.data());
      k.polyak(dst.bias.size(), tau, src.bias.data(), dst.bias.data());
    }
  }
}

std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
BacAgent::aux_action_pairs(const std::vector<Transition>& batch) {
  std::vector<std::vector<double>> actions, next_actions;
  actions.reserve(batch.size());
  next_actions.reserve(batch.size());
  for (const auto& t : batch) {
    auto policy_action = [&](std::span<const double> state) {
      PolicyHead head = policy_forward(state);
      if (cfg_.policy == PolicyType::Stochastic) {
        std::vector<double> u(spec_.action_dim);
        for (std::size_t k = 0; k < spec_.action_dim; ++k)
          u[k] = head.mean[k] + std::exp(head.log_std[k]) * rng_.normal();
        return squash(u);
      }
      return squash(head.mean);
    };
    actions.push_back(policy_action(t.state));
    next_actions.push_back(policy_action(t.next_state));
  }
  return {std::move(actions), std::move(next_actions)};
}

std::vector<double> BacAgent::aux_deviations(
    const std::vector<Transition>& batch,
    const std::vector<std::vector<double>>& actions,
    const std::vector<std::vector<double>>& next_actions) const {
  if (!temp_) throw std::logic_error("aux_deviations: adaptive temperature not configured");
  std::vector<double> deviations(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    const double q = mlp_forward(temp_->q, concat(t.state, actions[i]))[0];
    double boot = t.reward;
    if (!t.done)
      boot += cfg_.gamma * mlp_forward(temp_->q, concat(t.next_state, next_actions[i]))[0];
    deviations[i] = std::abs(q - boot);
  }
  return deviations;
}

double BacAgent::adaptive_alpha(const std::vector<Transition>& batch) {
  if (!temp_) throw std::logic_error("adaptive_alpha: adaptive temperature not configured");
  if (batch.size() < 2) throw std::invalid_argument("adaptive_alpha: batch size must be >= 2");
  const auto [actions, next_actions] = aux_action_pairs(batch);
  const auto deviations = aux_deviations(batch, actions, next_actions);

  double lo = deviations[0], hi = deviations[0], sum = 0.0;
  for (double d : deviations) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    sum += d;
  }
  const double mean = sum / static_cast<double>(deviations.size());
  double alpha = 0.5;  // sigmoid(0) when every deviation coincides
  if (hi > lo) alpha = sigmoid(cfg_.adaptive_omega * (mean - lo) / (hi - lo));
  temp_->last_alpha = alpha;
  last_alpha_ = alpha;
  return alpha;
}

std::pair<double, GradientSet> BacAgent::aux_loss_and_grads(
    const std::vector<Transition>& batch,
    const std::vector<std::vector<double>>& actions,
    const std::vector<std::vector<double>>& next_actions) const {
  if (!temp_) throw std::logic_error("aux_loss_and_grads: adaptive temperature not configured");
  const double inv = 1.0 / static_cast<double>(batch.size());
  GradientSet grads = zero_gradients(temp_->q);
  ForwardCache cache;
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    double boot = t.reward;  // bootstrapped side held constant
    if (!t.done)
      boot += cfg_.gamma * mlp_forward(temp_->q, concat(t.next_state, next_actions[i]))[0];
    const double q = mlp_forward(temp_->q, concat(t.state, actions[i]), &cache)[0];
    const double err = q - boot;
    loss += err * err * inv;
    const std::vector<double> out_grad = {2.0 * err * inv};
    auto res = mlp_backward(temp_->q, cache, out_grad);
    accumulate_gradients(grads, res.grads);
  }
  return {loss, std::move(grads)};
}

void BacAgent::auxiliary_critic_update(const std::vector<Transition>& batch) {
  if (!temp_) throw std::logic_error("auxiliary_critic_update: adaptive temperature not configured");
  if (batch.empty()) throw std::invalid_argument("auxiliary_critic_update: empty batch");
  const auto [actions, next_actions] = aux_action_pairs(batch);
  auto [loss, grads] = aux_loss_and_grads(batch, actions, next_actions);
  if (!std::isfinite(loss))
    throw NonFiniteError("auxiliary_critic_update: non-finite loss, step aborted");
  adam_step(temp_->q, grads, temp_->opt, cfg_.lr_aux);
}

StepDiagnostics BacAgent::train_step(Env& env) {
  StepDiagnostics diag;

  if (cfg_.autoencoder_enabled && episodes_completed_ > 0 &&
      episodes_completed_ % cfg_.ae_update_every_episodes == 0 &&
      last_ae_training_episode_ != episodes_completed_ && last_rollout_.size() > 0) {
    behavior_.train_autoencoder(last_rollout_, rng_);
    last_ae_training_episode_ = episodes_completed_;
  }

  if (!episode_active_) {
    observation_ = env.reset(rng_.next_u64());
    episode_active_ = true;
    episode_return_ = 0.0;
    current_rollout_ = Rollout{};
  }

  const auto action = select_action(observation_, ActionMode::Train);
  StepResult res = env.step(action);
  buffer_.push(Transition{observation_, action, res.reward, res.observation, res.done});
  current_rollout_.states.push_back(observation_);
  current_rollout_.actions.push_back(action);
  episode_return_ += res.reward;
  observation_ = res.observation;
  ++total_env_steps_;
  diag.reward = res.reward;
  if (res.done) {
    ++episodes_completed_;
    current_rollout_.episode_return = episode_return_;
    last_rollout_ = std::move(current_rollout_);
    current_rollout_ = Rollout{};
    episode_active_ = false;
    diag.episode_done = true;
    diag.episode_return = episode_return_;
  }

  double alpha_eff = cfg_.alpha_mode == AlphaMode::Static
                         ? cfg_.alpha
                         : (temp_ ? temp_->last_alpha : 0.5);
  if (buffer_.size() >= std::max(cfg_.batch_size, cfg_.update_start_steps)) {
    for (std::size_t u = 0; u < cfg_.updates_per_step; ++u) {
      auto batch = buffer_.sample(cfg_.batch_size, rng_);
      if (cfg_.alpha_mode == AlphaMode::Adaptive) {
        alpha_eff = adaptive_alpha(batch);
        auxiliary_critic_update(batch);
      }
      diag.critic_loss = critic_update(batch, alpha_eff);
      if (cfg_.policy == PolicyType::Stochastic) {
        diag.actor_objective = cfg_.use_score_function
                                   ? actor_update_score_function(batch)
                                   : actor_update_reparameterized(batch);
      } else {
        diag.actor_objective = actor_update_deterministic(batch);
      }
      target_update(cfg_.tau);
      ++diag.updates;
    }
  }
  last_alpha_ = alpha_eff;
  diag.alpha = alpha_eff;
  diag.env_step = total_env_steps_;
  return diag;
}

BacAgent::LoopState BacAgent::loop_state() const {
  LoopState s;
  s.observation = observation_;
  s.episode_active = episode_active_;
  s.episode_return = episode_return_;
  s.current_rollout = current_rollout_;
  s.last_rollout = last_rollout_;
  s.total_env_steps = total_env_steps_;
  s.episodes_completed = episodes_completed_;
  s.last_ae_training_episode = last_ae_training_episode_;
  s.last_alpha = last_alpha_;
  return s;
}

void BacAgent::restore_loop_state(LoopState s) {
  observation_ = std::move(s.observation);
  episode_active_ = s.episode_active;
  episode_return_ = s.episode_return;
  current_rollout_ = std::move(s.current_rollout);
  last_rollout_ = std::move(s.last_rollout);
  total_env_steps_ = s.total_env_steps;
  episodes_completed_ = s.episodes_completed;
  last_ae_training_episode_ = s.last_ae_training_episode;
  last_alpha_ = s.last_alpha;
}

}  // namespace bac
