#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bac/behavior.hpp"
#include "bac/mlp.hpp"
#include "bac/rng.hpp"

using namespace bac;

namespace {

BehaviorModel unit_model(std::size_t state_dim, std::size_t action_dim, Rng& rng,
                         double lr = 1e-3, int epochs = 5, int minibatch = 64) {
  // [-1, 1] bounds on every dimension make the input scaling the identity.
  std::vector<double> low(state_dim + action_dim, -1.0);
  std::vector<double> high(state_dim + action_dim, 1.0);
  return BehaviorModel(state_dim, action_dim, low, high, rng, lr, epochs, minibatch);
}

// Linear layers that pass coordinate i through wherever both sides have it.
// The bottleneck still truncates, so reconstruction is exact only for the
// coordinates that survive the narrowest layer.
void make_identity_autoencoder(BehaviorModel& model) {
  auto& net = model.autoencoder_mutable();
  for (auto& layer : net.layers) {
    layer.act = Activation::Linear;
    for (auto& w : layer.weight.data) w = 0.0;
    for (auto& b : layer.bias) b = 0.0;
    const std::size_t n = std::min(layer.weight.rows, layer.weight.cols);
    for (std::size_t i = 0; i < n; ++i) layer.weight.at(i, i) = 1.0;
  }
}

void make_zero_autoencoder(BehaviorModel& model) {
  auto& net = model.autoencoder_mutable();
  for (auto& layer : net.layers) {
    for (auto& w : layer.weight.data) w = 0.0;
    for (auto& b : layer.bias) b = 0.0;
  }
}

Rollout single_pair_rollout(const std::vector<double>& s, const std::vector<double>& a,
                            std::size_t repeats = 1) {
  Rollout rollout;
  for (std::size_t i = 0; i < repeats; ++i) {
    rollout.states.push_back(s);
    rollout.actions.push_back(a);
  }
  return rollout;
}

}  // namespace

TEST_CASE("behavior_value: perfect reconstruction gives zero") {
  Rng rng(7);
  BehaviorModel model = unit_model(1, 1, rng);
  make_identity_autoencoder(model);
  // the width-1 bottleneck keeps the first coordinate, so (x, 0) is exact
  CHECK(model.behavior_value(std::vector<double>{0.37}, std::vector<double>{0.0}) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("behavior_value: squared distance arithmetic") {
  Rng rng(8);
  BehaviorModel model = unit_model(1, 1, rng);
  make_zero_autoencoder(model);
  // [s, a] = (1, 0) against reconstruction (0, 0) -> psi = 1
  CHECK(model.behavior_value(std::vector<double>{1.0}, std::vector<double>{0.0}) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(model.behavior_value(std::vector<double>{1.0, 2.0},
                                       std::vector<double>{0.0}),
                  std::invalid_argument);
}

TEST_CASE("behavior_value equals an independent forward re-evaluation") {
  Rng rng(9);
  BehaviorModel model = unit_model(3, 2, rng);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> s(3), a(2);
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    for (auto& v : a) v = rng.uniform(-1.0, 1.0);

    std::vector<double> z;
    z.insert(z.end(), s.begin(), s.end());
    z.insert(z.end(), a.begin(), a.end());
    const auto recon = mlp_forward(model.autoencoder(), z);
    double want = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
      want += (recon[i] - z[i]) * (recon[i] - z[i]);

    CHECK(std::abs(model.behavior_value(s, a) - want) < 1e-12);
    CHECK(model.behavior_value(s, a) >= 0.0);
  }
}

TEST_CASE("normalized_behavior_value: running-max arithmetic") {
  Rng rng(10);
  BehaviorModel model = unit_model(1, 1, rng);
  make_zero_autoencoder(model);  // psi(s, a) = s^2 + a^2 exactly
  auto query = [&](double s) {
    return model.normalized_behavior_value(std::vector<double>{s},
                                           std::vector<double>{0.0});
  };
  // first-ever query becomes the maximum -> exactly 1
  CHECK(query(2.0) == doctest::Approx(1.0));  // psi = 4
  CHECK(model.running_max() == doctest::Approx(4.0));

  // increasing sequence keeps returning 1; re-queries scale down
  CHECK(query(std::sqrt(8.0)) == doctest::Approx(1.0));   // psi = 8
  CHECK(query(std::sqrt(16.0)) == doctest::Approx(1.0));  // psi = 16
  CHECK(query(2.0) == doctest::Approx(4.0 / 16.0));
  CHECK(query(std::sqrt(8.0)) == doctest::Approx(8.0 / 16.0));

  // psi = 0 with a positive running max -> 0
  CHECK(query(0.0) == doctest::Approx(0.0));

  // peek never folds the query in
  const double max_before = model.running_max();
  (void)model.peek_normalized(std::vector<double>{100.0}, std::vector<double>{0.0});
  CHECK(model.running_max() == max_before);
}

TEST_CASE("psi_bar stays in [0, 1] and the maximum never decreases") {
  Rng rng(12);
  BehaviorModel model = unit_model(2, 1, rng);
  double last_max = model.running_max();
  for (int i = 0; i < 200; ++i) {
    std::vector<double> s = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    std::vector<double> a = {rng.uniform(-1.0, 1.0)};
    const double nb = model.normalized_behavior_value(s, a);
    CHECK(nb >= 0.0);
    CHECK(nb <= 1.0);
    CHECK(model.running_max() >= last_max);
    last_max = model.running_max();
  }
}

TEST_CASE("train_autoencoder: single repeated pair becomes reconstructable") {
  Rng rng(13);
  BehaviorModel model = unit_model(2, 1, rng, 1e-2, 50, 16);
  const std::vector<double> s = {0.4, -0.3};
  const std::vector<double> a = {0.6};
  const double before = model.behavior_value(s, a);
  model.train_autoencoder(single_pair_rollout(s, a, 16), rng);
  const double after = model.behavior_value(s, a);
  CHECK(after < before);
  // retraining resets the running maximum
  CHECK(model.running_max() == 0.0);
}

TEST_CASE("train_autoencoder: rejects empty and non-finite input") {
  Rng rng(14);
  BehaviorModel model = unit_model(1, 1, rng);
  CHECK_THROWS_AS(model.train_autoencoder(Rollout{}, rng), std::invalid_argument);
  Rollout bad = single_pair_rollout({std::nan("")}, {0.0});
  CHECK_THROWS_AS(model.train_autoencoder(bad, rng), NonFiniteError);
}

TEST_CASE("mean psi over a fixed rollout does not increase across training") {
  Rng rng(15);
  BehaviorModel model = unit_model(2, 2, rng, 1e-3, 5, 32);
  Rollout rollout;
  for (int i = 0; i < 64; ++i) {
    rollout.states.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
    rollout.actions.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
  }
  const Rollout fixed = rollout;
  const double before = model.estimate_policy_behavior(std::vector<Rollout>{fixed});
  model.train_autoencoder(fixed, rng);
  const double after = model.estimate_policy_behavior(std::vector<Rollout>{fixed});
  CHECK(after <= before + 1e-6);
}

TEST_CASE("discrimination: out-of-distribution psi dominates after training") {
  Rng rng(16);
  BehaviorModel model = unit_model(2, 1, rng, 1e-3, 30, 32);

  // cluster A around -0.5, cluster B around +0.55; width 0.05 per axis
  auto sample_cluster = [&](double center) {
    Rollout rollout;
    for (int i = 0; i < 128; ++i) {
      rollout.states.push_back(
          {center + 0.05 * rng.normal(), center + 0.05 * rng.normal()});
      rollout.actions.push_back({center + 0.05 * rng.normal()});
    }
    return rollout;
  };
  Rollout train_set = sample_cluster(-0.5);
  Rollout held_out = sample_cluster(0.55);

  model.train_autoencoder(train_set, rng);
  const double in_dist = model.estimate_policy_behavior(std::vector<Rollout>{train_set});
  const double out_dist = model.estimate_policy_behavior(std::vector<Rollout>{held_out});
  CHECK(out_dist > in_dist);
}

TEST_CASE("zero learning rate leaves the model unchanged") {
  Rng rng(17);
  BehaviorModel model = unit_model(2, 1, rng, 0.0, 3, 8);
  const auto before = model.autoencoder();
  Rollout rollout = single_pair_rollout({0.2, 0.1}, {-0.4}, 8);
  model.train_autoencoder(rollout, rng);
  const auto& after = model.autoencoder();
  for (std::size_t l = 0; l < before.layers.size(); ++l) {
    CHECK(after.layers[l].weight.data == before.layers[l].weight.data);
    CHECK(after.layers[l].bias == before.layers[l].bias);
  }
}

TEST_CASE("estimate_policy_behavior: means and permutation invariance") {
  Rng rng(18);
  BehaviorModel model = unit_model(1, 1, rng);

  // single pair: the estimate is that pair's psi
  Rollout one = single_pair_rollout({0.3}, {0.2});
  const double v = model.behavior_value(one.states[0], one.actions[0]);
  CHECK(model.estimate_policy_behavior(std::vector<Rollout>{one}) == doctest::Approx(v));

  // mean of all pairs, recomputed independently
  std::vector<Rollout> rollouts(3);
  double total = 0.0;
  std::size_t count = 0;
  for (auto& rollout : rollouts) {
    for (int i = 0; i < 5; ++i) {
      rollout.states.push_back({rng.uniform(-1.0, 1.0)});
      rollout.actions.push_back({rng.uniform(-1.0, 1.0)});
      total += model.behavior_value(rollout.states.back(), rollout.actions.back());
      ++count;
    }
  }
  const double mean = total / static_cast<double>(count);
  CHECK(std::abs(model.estimate_policy_behavior(rollouts) - mean) < 1e-12);

  std::vector<Rollout> permuted = {rollouts[2], rollouts[0], rollouts[1]};
  CHECK(model.estimate_policy_behavior(permuted) ==
        doctest::Approx(model.estimate_policy_behavior(rollouts)).epsilon(1e-15));

  CHECK_THROWS_AS(model.estimate_policy_behavior(std::vector<Rollout>{}),
                  std::invalid_argument);
}
