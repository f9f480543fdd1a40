#include "bac/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bac {
namespace {

// input -> 2*input (relu) -> ceil(input/2) (relu) -> 2*input (relu) -> input
// (linear). The bottleneck forces lossy compression so the reconstruction
// error discriminates between seen and unseen inputs.
MlpParams make_autoencoder(std::size_t input_width, Rng& rng) {
  const std::size_t wide = 2 * input_width;
  const std::size_t bottleneck = (input_width + 1) / 2;
  const std::size_t widths[] = {input_width, wide, bottleneck, wide, input_width};
  const Activation acts[] = {Activation::Relu, Activation::Relu, Activation::Relu,
                             Activation::Linear};
  return make_mlp(widths, acts, rng);
}

}  // namespace

BehaviorModel::BehaviorModel(std::size_t state_dim, std::size_t action_dim,
                             std::vector<double> input_low,
                             std::vector<double> input_high, Rng& rng,
                             double learning_rate, int train_epochs, int minibatch)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      input_low_(std::move(input_low)),
      input_high_(std::move(input_high)),
      net_(make_autoencoder(state_dim + action_dim, rng)),
      opt_(make_adam_state(net_)),
      learning_rate_(learning_rate),
      train_epochs_(train_epochs),
      minibatch_(minibatch) {
  const std::size_t width = state_dim_ + action_dim_;
  if (input_low_.size() != width || input_high_.size() != width)
    throw std::invalid_argument("BehaviorModel: bounds width mismatch");
  for (std::size_t i = 0; i < width; ++i)
    if (!(input_low_[i] < input_high_[i]))
      throw std::invalid_argument("BehaviorModel: low must be < high per dimension");
  if (train_epochs_ <= 0 || minibatch_ <= 0)
    throw std::invalid_argument("BehaviorModel: positive epochs and minibatch required");
}

std::vector<double> BehaviorModel::scaled_input(std::span<const double> state,
                                                std::span<const double> action) const {
  if (state.size() != state_dim_ || action.size() != action_dim_)
    throw std::invalid_argument("BehaviorModel: state/action dimension mismatch");
  std::vector<double> z(state_dim_ + action_dim_);
  for (std::size_t i = 0; i < state_dim_ + action_dim_; ++i) {
    const double raw = i < state_dim_ ? state[i] : action[i - state_dim_];
    z[i] = -1.0 + 2.0 * (raw - input_low_[i]) / (input_high_[i] - input_low_[i]);
  }
  return z;
}

double BehaviorModel::behavior_value(std::span<const double> state,
                                     std::span<const double> action) const {
  const auto z = scaled_input(state, action);
  const auto recon = mlp_forward(net_, z);
  double psi = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = recon[i] - z[i];
    psi += d * d;
  }
  return psi;
}

double BehaviorModel::normalized_behavior_value(std::span<const double> state,
                                                std::span<const double> action) {
  const double psi = behavior_value(state, action);
  running_max_ = std::max(running_max_, psi);
  return running_max_ > 0.0 ? psi / running_max_ : 0.0;
}

double BehaviorModel::peek_normalized(std::span<const double> state,
                                      std::span<const double> action) const {
  if (running_max_ <= 0.0) return 0.0;
  return std::min(1.0, behavior_value(state, action) / running_max_);
}

void BehaviorModel::train_autoencoder(const Rollout& rollout, Rng& rng) {
  if (rollout.size() == 0)
    throw std::invalid_argument("train_autoencoder: empty rollout");
  const std::size_t n = rollout.size();

  std::vector<std::vector<double>> inputs;
  inputs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!all_finite(rollout.states[i]) || !all_finite(rollout.actions[i]))
      throw NonFiniteError("train_autoencoder: non-finite rollout entries");
    inputs.push_back(scaled_input(rollout.states[i], rollout.actions[i]));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  ForwardCache cache;
  for (int epoch = 0; epoch < train_epochs_; ++epoch) {
    // Fisher-Yates shuffle driven by the caller's stream.
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(i)]);
    for (std::size_t start = 0; start < n; start += minibatch_) {
      const std::size_t stop = std::min(n, start + minibatch_);
      GradientSet batch_grads = zero_gradients(net_);
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const auto& z = inputs[order[i]];
        const auto recon = mlp_forward(net_, z, &cache);
        std::vector<double> dloss(z.size());
        for (std::size_t j = 0; j < z.size(); ++j)
          dloss[j] = 2.0 * (recon[j] - z[j]) * inv;
        auto res = mlp_backward(net_, cache, dloss);
        accumulate_gradients(batch_grads, res.grads);
      }
      adam_step(net_, batch_grads, opt_, learning_rate_);
    }
  }
  running_max_ = 0.0;
}

double BehaviorModel::estimate_policy_behavior(std::span<const Rollout> rollouts) const {
  if (rollouts.empty())
    throw std::invalid_argument("estimate_policy_behavior: no rollouts");
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& rollout : rollouts) {
    for (std::size_t i = 0; i < rollout.size(); ++i) {
      total += behavior_value(rollout.states[i], rollout.actions[i]);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("estimate_policy_behavior: empty rollouts");
  return total / static_cast<double>(count);
}

}  // namespace bac
