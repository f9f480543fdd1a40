#pragma once

// Deterministic continuous-control testbeds with deceptive reward
// structure, plus the rollout collector.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bac/behavior.hpp"

namespace bac {

struct EnvSpec {
  std::size_t observation_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> action_low, action_high;
  std::vector<double> observation_low, observation_high;
  std::size_t max_episode_steps = 0;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  bool action_clamped = false;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::string_view name() const = 0;
  // Deterministic initial state for a given seed; resets the step counter.
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  // Deterministic dynamics; throws std::logic_error once done until reset.
  virtual StepResult step(std::span<const double> action) = 0;
  // Full internal state as plain reals, for exact checkpoint resume.
  virtual std::vector<double> snapshot() const = 0;
  virtual void restore_snapshot(std::span<const double> state) = 0;
};

// Point mass in a walled arena. A small +1 goal sits in open space near the
// start; a +10 goal lies at the end of an S-shaped corridor that first
// leads away from the +1. Reaching either goal ends the episode.
//
//   observation: (x, y, vx, vy), action: (ax, ay) in [-1, 1]^2
//   x <- x + dt*v, then v <- drag*(v + dt*force*a), dt = 0.1, drag = 0.95
class DeceptiveMaze final : public Env {
 public:
  DeceptiveMaze();
  const EnvSpec& spec() const override { return spec_; }
  std::string_view name() const override { return "deceptive_maze"; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> snapshot() const override;
  void restore_snapshot(std::span<const double> state) override;

  static constexpr double kDt = 0.1;
  static constexpr double kDrag = 0.95;
  static constexpr double kForce = 0.25;
  static constexpr double kLocalReward = 1.0;
  static constexpr double kDistalReward = 10.0;

 private:
  std::vector<double> observation() const;
  bool blocked(double x, double y) const;

  EnvSpec spec_;
  double x_ = 0, y_ = 0, vx_ = 0, vy_ = 0;
  std::size_t elapsed_ = 0;
  bool done_ = true;
};

// Mountain-car style 1-D hill with an underpowered motor: zero reward
// everywhere except +1 at the far hilltop, which requires oscillation.
//
//   observation: (x, v); v <- v + 0.0015*a - 0.0025*cos(3x); x <- x + v
class SparseHill final : public Env {
 public:
  SparseHill();
  const EnvSpec& spec() const override { return spec_; }
  std::string_view name() const override { return "sparse_hill"; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> snapshot() const override;
  void restore_snapshot(std::span<const double> state) override;

  static constexpr double kGoalX = 0.5;

 private:
  EnvSpec spec_;
  double x_ = 0, v_ = 0;
  std::size_t elapsed_ = 0;
  bool done_ = true;
};

std::unique_ptr<Env> make_env(std::string_view name);

using PolicyFn = std::function<std::vector<double>(std::span<const double>)>;

// Runs the policy from reset(seed) until done or max_steps; records the
// visited (state, action) pairs and the undiscounted episode return.
Rollout collect_rollout(Env& env, const PolicyFn& policy, std::size_t max_steps,
                        std::uint64_t seed);

}  // namespace bac
