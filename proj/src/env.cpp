#include "bac/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bac {
namespace {

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

struct Rect {
  double x0, x1, y0, y1;
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

// Wall A leaves a gap on the left, wall B on the right; together with the
// goal placement this forces the path up-left, right, up-right, then left.
constexpr Rect kWallA{0.30, 1.00, 0.40, 0.47};
constexpr Rect kWallB{0.00, 0.70, 0.70, 0.77};

constexpr double kStartX = 0.10, kStartY = 0.10;
constexpr double kLocalX = 0.40, kLocalY = 0.12, kLocalRadius = 0.06;
constexpr double kDistalX = 0.15, kDistalY = 0.90, kDistalRadius = 0.07;

double dist2(double ax, double ay, double bx, double by) {
  return (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
}

}  // namespace

DeceptiveMaze::DeceptiveMaze() {
  spec_.observation_dim = 4;
  spec_.action_dim = 2;
  spec_.action_low = {-1.0, -1.0};
  spec_.action_high = {1.0, 1.0};
  spec_.observation_low = {0.0, 0.0, -0.5, -0.5};
  spec_.observation_high = {1.0, 1.0, 0.5, 0.5};
  spec_.max_episode_steps = 400;
}

std::vector<double> DeceptiveMaze::observation() const { return {x_, y_, vx_, vy_}; }

bool DeceptiveMaze::blocked(double x, double y) const {
  return kWallA.contains(x, y) || kWallB.contains(x, y);
}

std::vector<double> DeceptiveMaze::reset(std::uint64_t) {
  x_ = kStartX;
  y_ = kStartY;
  vx_ = vy_ = 0.0;
  elapsed_ = 0;
  done_ = false;
  return observation();
}

StepResult DeceptiveMaze::step(std::span<const double> action) {
  if (done_) throw std::logic_error("DeceptiveMaze: step after done; reset first");
  if (action.size() != 2) throw std::invalid_argument("DeceptiveMaze: action dim");

  StepResult result;
  double ax = action[0], ay = action[1];
  if (ax < -1.0 || ax > 1.0 || ay < -1.0 || ay > 1.0) result.action_clamped = true;
  ax = clamp(ax, -1.0, 1.0);
  ay = clamp(ay, -1.0, 1.0);

  // Axis-separated movement: a component that would enter a wall or leave
  // the arena is cancelled and its velocity zeroed.
  const double nx = x_ + kDt * vx_;
  if (nx < 0.0 || nx > 1.0 || blocked(nx, y_)) {
    vx_ = 0.0;
  } else {
    x_ = nx;
  }
  const double ny = y_ + kDt * vy_;
  if (ny < 0.0 || ny > 1.0 || blocked(x_, ny)) {
    vy_ = 0.0;
  } else {
    y_ = ny;
  }
  vx_ = clamp(kDrag * (vx_ + kDt * kForce * ax), -0.5, 0.5);
  vy_ = clamp(kDrag * (vy_ + kDt * kForce * ay), -0.5, 0.5);

  ++elapsed_;
  result.reward = 0.0;
  if (dist2(x_, y_, kDistalX, kDistalY) <= kDistalRadius * kDistalRadius) {
    result.reward = kDistalReward;
    done_ = true;
  } else if (dist2(x_, y_, kLocalX, kLocalY) <= kLocalRadius * kLocalRadius) {
    result.reward = kLocalReward;
    done_ = true;
  } else if (elapsed_ >= spec_.max_episode_steps) {
    done_ = true;
  }
  result.done = done_;
  result.observation = observation();
  return result;
}

std::vector<double> DeceptiveMaze::snapshot() const {
  return {x_, y_, vx_, vy_, static_cast<double>(elapsed_), done_ ? 1.0 : 0.0};
}

void DeceptiveMaze::restore_snapshot(std::span<const double> state) {
  if (state.size() != 6) throw std::invalid_argument("DeceptiveMaze: bad snapshot");
  x_ = state[0];
  y_ = state[1];
  vx_ = state[2];
  vy_ = state[3];
  elapsed_ = static_cast<std::size_t>(state[4]);
  done_ = state[5] != 0.0;
}

SparseHill::SparseHill() {
  spec_.observation_dim = 2;
  spec_.action_dim = 1;
  spec_.action_low = {-1.0};
  spec_.action_high = {1.0};
  spec_.observation_low = {-1.2, -0.07};
  spec_.observation_high = {0.6, 0.07};
  spec_.max_episode_steps = 200;
}

std::vector<double> SparseHill::reset(std::uint64_t seed) {
  std::uint64_t sm = seed;
  const double jitter = static_cast<double>(splitmix64(sm) >> 11) * 0x1.0p-53;
  x_ = -0.5 + 0.02 * (jitter - 0.5);
  v_ = 0.0;
  elapsed_ = 0;
  done_ = false;
  return {x_, v_};
}

StepResult SparseHill::step(std::span<const double> action) {
  if (done_) throw std::logic_error("SparseHill: step after done; reset first");
  if (action.size() != 1) throw std::invalid_argument("SparseHill: action dim");

  StepResult result;
  double a = action[0];
  if (a < -1.0 || a > 1.0) result.action_clamped = true;
  a = clamp(a, -1.0, 1.0);

  v_ = clamp(v_ + 0.0015 * a - 0.0025 * std::cos(3.0 * x_), -0.07, 0.07);
  x_ += v_;
  if (x_ < -1.2) {
    x_ = -1.2;
    if (v_ < 0.0) v_ = 0.0;
  }
  x_ = clamp(x_, -1.2, 0.6);

  ++elapsed_;
  result.reward = 0.0;
  if (x_ >= kGoalX) {
    result.reward = 1.0;
    done_ = true;
  } else if (elapsed_ >= spec_.max_episode_steps) {
    done_ = true;
  }
  result.done = done_;
  result.observation = {x_, v_};
  return result;
}

std::vector<double> SparseHill::snapshot() const {
  return {x_, v_, static_cast<double>(elapsed_), done_ ? 1.0 : 0.0};
}

void SparseHill::restore_snapshot(std::span<const double> state) {
  if (state.size() != 4) throw std::invalid_argument("SparseHill: bad snapshot");
  x_ = state[0];
  v_ = state[1];
  elapsed_ = static_cast<std::size_t>(state[2]);
  done_ = state[3] != 0.0;
}

std::unique_ptr<Env> make_env(std::string_view name) {
  if (name == "deceptive_maze") return std::make_unique<DeceptiveMaze>();
  if (name == "sparse_hill") return std::make_unique<SparseHill>();
  throw std::invalid_argument("make_env: unknown environment '" + std::string(name) + "'");
}

Rollout collect_rollout(Env& env, const PolicyFn& policy, std::size_t max_steps,
                        std::uint64_t seed) {
  Rollout rollout;
  std::vector<double> obs = env.reset(seed);
  for (std::size_t t = 0; t < max_steps; ++t) {
    std::vector<double> action = policy(obs);
    rollout.states.push_back(obs);
    rollout.actions.push_back(action);
    StepResult res = env.step(action);
    rollout.episode_return += res.reward;
    obs = std::move(res.observation);
    if (res.done) break;
  }
  return rollout;
}

}  // namespace bac
