#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bac/env.hpp"
#include "bac/rng.hpp"

using namespace bac;

TEST_CASE("make_env: names and rejection") {
  CHECK(make_env("deceptive_maze")->name() == "deceptive_maze");
  CHECK(make_env("sparse_hill")->name() == "sparse_hill");
  CHECK_THROWS_AS(make_env("cartpole"), std::invalid_argument);
}

TEST_CASE("reset determinism and bounds") {
  for (const char* name : {"deceptive_maze", "sparse_hill"}) {
    auto env1 = make_env(name);
    auto env2 = make_env(name);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto a = env1->reset(seed);
      const auto b = env2->reset(seed);
      CHECK(a == b);
      const auto& spec = env1->spec();
      REQUIRE(a.size() == spec.observation_dim);
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] >= spec.observation_low[i]);
        CHECK(a[i] <= spec.observation_high[i]);
      }
    }
  }
}

TEST_CASE("maze reset: start cell, zero velocity") {
  DeceptiveMaze maze;
  const auto obs = maze.reset(42);
  CHECK(obs[0] == doctest::Approx(0.1));
  CHECK(obs[1] == doctest::Approx(0.1));
  CHECK(obs[2] == 0.0);
  CHECK(obs[3] == 0.0);
}

TEST_CASE("maze dynamics match the hand computation") {
  DeceptiveMaze maze;
  maze.reset(0);
  // from rest: position is integrated with the old (zero) velocity first
  auto r1 = maze.step(std::vector<double>{1.0, 0.0});
  CHECK(r1.observation[0] == doctest::Approx(0.1));
  const double v1 = DeceptiveMaze::kDrag * DeceptiveMaze::kDt * DeceptiveMaze::kForce;
  CHECK(r1.observation[2] == doctest::Approx(v1));
  CHECK(r1.observation[3] == 0.0);

  auto r2 = maze.step(std::vector<double>{1.0, 0.0});
  CHECK(r2.observation[0] == doctest::Approx(0.1 + DeceptiveMaze::kDt * v1));
  const double v2 = DeceptiveMaze::kDrag * (v1 + DeceptiveMaze::kDt * DeceptiveMaze::kForce);
  CHECK(r2.observation[2] == doctest::Approx(v2));
}

TEST_CASE("maze: zero action from rest changes nothing") {
  DeceptiveMaze maze;
  const auto start = maze.reset(0);
  auto r = maze.step(std::vector<double>{0.0, 0.0});
  CHECK(r.observation == start);
  CHECK(r.reward == 0.0);
  CHECK_FALSE(r.done);
}

TEST_CASE("maze: wall blocks vertical movement in the blocked band") {
  DeceptiveMaze maze;
  maze.reset(0);
  // drive straight up from the start column x = 0.1 (inside the left gap);
  // the wall band starts at x >= 0.3 so this must pass through
  double y_max_left = 0.0;
  for (int t = 0; t < 400; ++t) {
    auto r = maze.step(std::vector<double>{-1.0, 1.0});  // up-left hug
    y_max_left = std::max(y_max_left, r.observation[1]);
    if (r.done) break;
  }
  CHECK(y_max_left > 0.5);  // crossed the wall-A band through the gap

  // drive up at x ~ 0.5: wall A blocks at y = 0.40. Hold y near 0.28 (above
  // the +1 circle, below the wall band) while crossing to the right.
  maze.reset(0);
  auto hold = [](double y, double vy, double target) {
    return std::max(-1.0, std::min(1.0, 8.0 * (target - y) - 16.0 * vy));
  };
  std::vector<double> probe_obs = {0.1, 0.1, 0.0, 0.0};
  for (int t = 0; t < 120; ++t) {
    auto r = maze.step(
        std::vector<double>{1.0, hold(probe_obs[1], probe_obs[3], 0.28)});
    probe_obs = r.observation;
    if (probe_obs[0] > 0.5) break;
  }
  double y_max_mid = 0.0;
  for (int t = 0; t < 200; ++t) {
    auto r = maze.step(std::vector<double>{0.0, 1.0});
    y_max_mid = std::max(y_max_mid, r.observation[1]);
    if (r.done) break;
  }
  CHECK(y_max_mid < 0.41);
}

TEST_CASE("maze: local goal pays +1 and terminates") {
  DeceptiveMaze maze;
  maze.reset(0);
  double total = 0.0;
  bool done = false;
  for (int t = 0; t < 400 && !done; ++t) {
    auto r = maze.step(std::vector<double>{1.0, 0.04});  // head right toward (0.4, 0.12)
    total += r.reward;
    done = r.done;
  }
  CHECK(done);
  CHECK(total == doctest::Approx(1.0));
  CHECK_THROWS_AS(maze.step(std::vector<double>{0.0, 0.0}), std::logic_error);
}

TEST_CASE("maze: scripted path reaches the distal +10 goal") {
  DeceptiveMaze maze;
  auto obs = maze.reset(0);
  double total = 0.0;
  bool done = false;
  int steps = 0;
  // phase 1: up the left edge; phase 2: right along the middle band;
  // phase 3: up through the right gap; phase 4: left along the top
  auto clamp1 = [](double v) { return std::max(-1.0, std::min(1.0, v)); };
  while (!done && steps < 400) {
    double ax = 0.0, ay = 0.0;
    const double x = obs[0], y = obs[1];
    if (y < 0.55) {
      ax = -1.0;
      ay = 1.0;
    } else if (x < 0.80 && y < 0.66) {
      ax = 1.0;
      ay = clamp1(5.0 * (0.60 - y));
    } else if (y < 0.85) {
      ax = 0.5;
      ay = 1.0;
    } else {
      ax = -1.0;
      ay = clamp1(5.0 * (0.90 - y) - obs[3]);
    }
    auto r = maze.step(std::vector<double>{ax, ay});
    obs = r.observation;
    total += r.reward;
    done = r.done;
    ++steps;
  }
  CHECK(done);
  CHECK(total == doctest::Approx(10.0));
  CHECK(steps < 400);
}

TEST_CASE("maze: cumulative reward equals independent per-step resummation") {
  DeceptiveMaze maze;
  Rng rng(4242);
  maze.reset(0);
  std::vector<double> rewards;
  double total = 0.0;
  for (int t = 0; t < 400; ++t) {
    auto r = maze.step(std::vector<double>{rng.uniform(-1, 1), rng.uniform(-1, 1)});
    rewards.push_back(r.reward);
    total += r.reward;
    if (r.done) break;
  }
  double again = 0.0;
  for (double r : rewards) again += r;
  CHECK(total == again);
}

TEST_CASE("maze: out-of-bounds actions are clamped and flagged") {
  DeceptiveMaze maze;
  maze.reset(0);
  auto r = maze.step(std::vector<double>{5.0, -3.0});
  CHECK(r.action_clamped);
  DeceptiveMaze maze2;
  maze2.reset(0);
  auto r2 = maze2.step(std::vector<double>{1.0, -1.0});
  CHECK_FALSE(r2.action_clamped);
  CHECK(r.observation == r2.observation);
}

TEST_CASE("sparse hill: episode cap, underpowered motor, oscillation succeeds") {
  SparseHill hill;
  hill.reset(1);
  // full throttle forward alone cannot climb
  bool done = false;
  double total = 0.0;
  int steps = 0;
  while (!done) {
    auto r = hill.step(std::vector<double>{1.0});
    total += r.reward;
    done = r.done;
    ++steps;
  }
  CHECK(steps == 200);
  CHECK(total == 0.0);

  // bang-bang energy pumping reaches the hilltop
  hill.reset(1);
  done = false;
  total = 0.0;
  steps = 0;
  std::vector<double> obs = hill.reset(1);
  while (!done && steps < 200) {
    const double a = obs[1] >= 0.0 ? 1.0 : -1.0;
    auto r = hill.step(std::vector<double>{a});
    obs = r.observation;
    total += r.reward;
    done = r.done;
    ++steps;
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(steps < 200);
}

TEST_CASE("sparse hill: observations stay within bounds") {
  SparseHill hill;
  Rng rng(77);
  auto obs = hill.reset(3);
  for (int t = 0; t < 200; ++t) {
    auto r = hill.step(std::vector<double>{rng.uniform(-1.0, 1.0)});
    obs = r.observation;
    CHECK(obs[0] >= -1.2);
    CHECK(obs[0] <= 0.6);
    CHECK(std::abs(obs[1]) <= 0.07);
    if (r.done) break;
  }
}

TEST_CASE("collect_rollout: shapes, determinism, return cross-check") {
  auto env = make_env("deceptive_maze");
  Rng policy_rng(5);
  PolicyFn random_policy = [&](std::span<const double>) {
    return std::vector<double>{policy_rng.uniform(-1, 1), policy_rng.uniform(-1, 1)};
  };

  // max-steps 1 -> a single pair
  Rollout one = collect_rollout(*env, random_policy, 1, 0);
  CHECK(one.size() == 1);

  // deterministic policy + seed -> identical rollouts
  PolicyFn constant_policy = [](std::span<const double>) {
    return std::vector<double>{0.3, -0.2};
  };
  Rollout a = collect_rollout(*env, constant_policy, 50, 9);
  Rollout b = collect_rollout(*env, constant_policy, 50, 9);
  CHECK(a.states == b.states);
  CHECK(a.actions == b.actions);
  CHECK(a.episode_return == b.episode_return);

  // return equals the sum of step rewards
  auto env2 = make_env("deceptive_maze");
  auto obs = env2->reset(9);
  double total = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    auto r = env2->step(constant_policy(obs));
    obs = r.observation;
    total += r.reward;
    if (r.done) break;
  }
  CHECK(a.episode_return == doctest::Approx(total));
}

TEST_CASE("snapshot round trip restores mid-episode state") {
  DeceptiveMaze maze;
  maze.reset(0);
  for (int t = 0; t < 25; ++t) maze.step(std::vector<double>{0.8, 0.5});
  const auto saved = maze.snapshot();

  auto r1 = maze.step(std::vector<double>{1.0, 1.0});
  DeceptiveMaze other;
  other.restore_snapshot(saved);
  auto r2 = other.step(std::vector<double>{1.0, 1.0});
  CHECK(r1.observation == r2.observation);
  CHECK(r1.reward == r2.reward);
  CHECK(r1.done == r2.done);
}
