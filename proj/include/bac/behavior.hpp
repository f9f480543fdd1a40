#pragma once

// Policy-behavior machinery: an autoencoder over concatenated state-action
// vectors, the reconstruction-error behavior value psi, its running-max
// normalization psi_bar, the Monte-Carlo policy behavior estimate, and
// periodic retraining on rollouts.

#include <span>
#include <vector>

#include "bac/mlp.hpp"
#include "bac/optim.hpp"
#include "bac/rng.hpp"

namespace bac {

struct Rollout {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> actions;
  double episode_return = 0.0;

  std::size_t size() const { return states.size(); }
};

class BehaviorModel {
 public:
  // Input bounds (one [low, high] per concatenated state-action dimension)
  // map inputs to [-1, 1] so every feature contributes proportionally to
  // the reconstruction loss. Pass lows = -1, highs = +1 for identity.
  BehaviorModel(std::size_t state_dim, std::size_t action_dim,
                std::vector<double> input_low, std::vector<double> input_high,
                Rng& rng, double learning_rate = 1e-3, int train_epochs = 5,
                int minibatch = 64);

  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  double running_max() const { return running_max_; }
  int train_epochs() const { return train_epochs_; }

  // psi(s, a) = squared reconstruction error on the scaled concatenation.
  double behavior_value(std::span<const double> state,
                        std::span<const double> action) const;

  // psi / max psi where the maximum first folds in the current query; the
  // result is always in [0, 1]. Updates the running maximum.
  double normalized_behavior_value(std::span<const double> state,
                                   std::span<const double> action);

  // Read-only variant for diagnostics: current psi over the current maximum
  // without folding the query in (0 when no maximum has been observed).
  double peek_normalized(std::span<const double> state,
                         std::span<const double> action) const;

  // train_epochs passes of Adam minibatch descent on the mean
  // reconstruction loss over the rollout; resets the running maximum.
  void train_autoencoder(const Rollout& rollout, Rng& rng);

  // Monte-Carlo mean of psi over every (s, a) pair in the rollouts.
  double estimate_policy_behavior(std::span<const Rollout> rollouts) const;

  const MlpParams& autoencoder() const { return net_; }
  MlpParams& autoencoder_mutable() { return net_; }
  AdamState& optimizer_state() { return opt_; }
  const AdamState& optimizer_state() const { return opt_; }
  void set_running_max(double value) { running_max_ = value; }

 private:
  std::vector<double> scaled_input(std::span<const double> state,
                                   std::span<const double> action) const;

  std::size_t state_dim_;
  std::size_t action_dim_;
  std::vector<double> input_low_, input_high_;
  MlpParams net_;
  AdamState opt_;
  double learning_rate_;
  int train_epochs_;
  int minibatch_;
  double running_max_ = 0.0;
};

}  // namespace bac
