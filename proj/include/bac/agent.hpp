#pragma once

// The BAC learner: twin critics with Polyak targets, stochastic or
// deterministic actor with a smooth squashing map, behavior-bonus critic
// targets, reparameterized and score-function policy gradients, and the
// static/adaptive temperature schedule.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bac/behavior.hpp"
#include "bac/env.hpp"
#include "bac/mlp.hpp"
#include "bac/optim.hpp"
#include "bac/replay.hpp"
#include "bac/rng.hpp"

namespace bac {

enum class AlphaMode { Static, Adaptive };
enum class PolicyType { Stochastic, Deterministic };
enum class ActionMode { Train, Eval };

struct BacConfig {
  double gamma = 0.99;
  AlphaMode alpha_mode = AlphaMode::Static;
  double alpha = 0.2;  // static temperature
  double tau = 0.005;
  std::size_t batch_size = 64;
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  double lr_autoencoder = 1e-3;
  double lr_aux = 1e-3;
  std::optional<double> actor_grad_clip;
  std::optional<double> critic_grad_clip;
  PolicyType policy = PolicyType::Stochastic;
  double det_noise_std = 0.1;  // fraction of the action half-range
  bool use_score_function = false;
  double adaptive_omega = 10.0;
  std::size_t buffer_capacity = 100000;
  std::size_t updates_per_step = 1;
  std::size_t update_start_steps = 1000;  // buffer fill before updates begin
  bool use_raw_psi = false;
  bool autoencoder_enabled = true;
  std::size_t ae_update_every_episodes = 10;
  int ae_epochs = 5;
  int ae_minibatch = 64;
  std::vector<std::size_t> hidden = {64, 64};
  Activation hidden_activation = Activation::Relu;

  void validate() const;  // throws std::invalid_argument on the first problem
};

struct AdaptiveTemperature {
  MlpParams q;
  AdamState opt;
  double last_alpha = 0.5;
};

struct StepDiagnostics {
  std::uint64_t env_step = 0;
  double reward = 0.0;
  bool episode_done = false;
  double episode_return = 0.0;  // valid when episode_done
  double critic_loss = 0.0;
  double actor_objective = 0.0;
  double alpha = 0.0;
  std::size_t updates = 0;
};

class BacAgent {
 public:
  BacAgent(const EnvSpec& spec, const BacConfig& config, std::uint64_t seed);

  // Stochastic: train samples a squashed Gaussian, eval squashes the mean.
  // Deterministic: train adds clamped Gaussian action noise, eval is the
  // point action. Always within action bounds.
  std::vector<double> select_action(std::span<const double> state, ActionMode mode);

  // a' ~ pi_cur(s') for every transition (deterministic policies use the
  // point action). Exposed so target computations can be replayed exactly.
  std::vector<std::vector<double>> sample_next_actions(
      const std::vector<Transition>& batch);

  // y_i = r + alpha psi_bar(s', a') + gamma min_j Q'_j(s', a') in static
  // mode; adaptive mode uses alpha r + gamma (1-alpha) psi_bar + gamma min Q'.
  // Terminal transitions drop both the bonus and the bootstrap. Updates the
  // behavior normalization as a side effect of the psi_bar queries.
  std::vector<double> critic_target(const std::vector<Transition>& batch,
                                    const std::vector<std::vector<double>>& next_actions,
                                    double alpha);
  std::vector<double> critic_target(const std::vector<Transition>& batch, double alpha);

  // One Adam step per critic on the MSE to the shared target (targets held
  // constant). Returns the pre-step loss averaged over the two critics.
  double critic_update(const std::vector<Transition>& batch, double alpha);

  double actor_update_reparameterized(const std::vector<Transition>& batch);
  double actor_update_score_function(const std::vector<Transition>& batch);
  double actor_update_deterministic(const std::vector<Transition>& batch);

  // Polyak blend of both target critics toward the live critics.
  void target_update(double tau);

  // Batch deviations d_i = |Q(s, g(e, s)) - (r + gamma Q(s', g(e, s')))|,
  // alpha = sigmoid(omega (mean - min) / (max - min)), 0.5 when degenerate.
  double adaptive_alpha(const std::vector<Transition>& batch);
  void auxiliary_critic_update(const std::vector<Transition>& batch);

  // One Algorithm-1 slice: periodic autoencoder retraining at episode
  // boundaries, one environment interaction, then the configured number of
  // update iterations.
  StepDiagnostics train_step(Env& env);

  // --- decomposed pieces used by updates, tests, and oracles ---
  double critic_value(int j, std::span<const double> state,
                      std::span<const double> action, bool use_target = false) const;
  std::pair<double, GradientSet> critic_loss_and_grads(
      int j, const std::vector<Transition>& batch,
      const std::vector<double>& targets) const;
  double reparameterized_objective(const std::vector<Transition>& batch,
                                   const std::vector<std::vector<double>>& noise,
                                   GradientSet* grads_out) const;
  double score_objective(const std::vector<Transition>& batch,
                         const std::vector<std::vector<double>>& noise,
                         GradientSet* grads_out) const;
  double deterministic_objective(const std::vector<Transition>& batch,
                                 GradientSet* grads_out) const;
  // Actions for the auxiliary critic: fresh-noise policy actions at s and s'.
  std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
  aux_action_pairs(const std::vector<Transition>& batch);
  std::vector<double> aux_deviations(const std::vector<Transition>& batch,
                                     const std::vector<std::vector<double>>& actions,
                                     const std::vector<std::vector<double>>& next_actions)
      const;
  std::pair<double, GradientSet> aux_loss_and_grads(
      const std::vector<Transition>& batch,
      const std::vector<std::vector<double>>& actions,
      const std::vector<std::vector<double>>& next_actions) const;

  std::vector<std::vector<double>> sample_noise(std::size_t n);

  // --- state access (checkpoints, tests, harness) ---
  const EnvSpec& env_spec() const { return spec_; }
  const BacConfig& config() const { return cfg_; }
  const MlpParams& actor() const { return actor_; }
  MlpParams& actor_mutable() { return actor_; }
  const MlpParams& critic(int j) const { return critics_[j]; }
  MlpParams& critic_mutable(int j) { return critics_[j]; }
  const MlpParams& target(int j) const { return targets_[j]; }
  MlpParams& target_mutable(int j) { return targets_[j]; }
  AdamState& actor_opt() { return actor_opt_; }
  const AdamState& actor_opt() const { return actor_opt_; }
  AdamState& critic_opt(int j) { return critic_opts_[j]; }
  const AdamState& critic_opt(int j) const { return critic_opts_[j]; }
  BehaviorModel& behavior() { return behavior_; }
  const BehaviorModel& behavior() const { return behavior_; }
  std::optional<AdaptiveTemperature>& temperature() { return temp_; }
  const std::optional<AdaptiveTemperature>& temperature() const { return temp_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }
  std::uint64_t total_env_steps() const { return total_env_steps_; }
  std::uint64_t episodes_completed() const { return episodes_completed_; }
  double last_alpha() const { return last_alpha_; }

  // Loop bookkeeping, exposed for checkpoint round-trips.
  struct LoopState {
    std::vector<double> observation;
    bool episode_active = false;
    double episode_return = 0.0;
    Rollout current_rollout;
    Rollout last_rollout;
    std::uint64_t total_env_steps = 0;
    std::uint64_t episodes_completed = 0;
    std::uint64_t last_ae_training_episode = 0;
    double last_alpha = 0.0;
  };
  LoopState loop_state() const;
  void restore_loop_state(LoopState state);

 private:
  struct PolicyHead {
    std::vector<double> mean;     // pre-squash mean (or point output)
    std::vector<double> log_std;  // clamped; stochastic only
    ForwardCache cache;
  };
  PolicyHead policy_forward(std::span<const double> state) const;
  std::vector<double> squash(std::span<const double> u) const;
  double squash_derivative(double u, std::size_t dim) const;

  EnvSpec spec_;
  BacConfig cfg_;
  Rng rng_;
  MlpParams actor_;
  MlpParams critics_[2];
  MlpParams targets_[2];
  AdamState actor_opt_;
  AdamState critic_opts_[2];
  BehaviorModel behavior_;
  std::optional<AdaptiveTemperature> temp_;
  ReplayBuffer buffer_;

  std::vector<double> observation_;
  bool episode_active_ = false;
  double episode_return_ = 0.0;
  Rollout current_rollout_;
  Rollout last_rollout_;
  std::uint64_t total_env_steps_ = 0;
  std::uint64_t episodes_completed_ = 0;
  std::uint64_t last_ae_training_episode_ = 0;
  double last_alpha_ = 0.0;
};

}  // namespace bac
