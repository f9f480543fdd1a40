#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bac/harness.hpp"
#include "bac/rng.hpp"
#include "bac/tabular.hpp"

using namespace bac;
using namespace bac::tabular;

namespace {

// Independent second implementation of the operator: plain triple loop,
// no per-state precomputation.
QTable backup_reference(const FiniteMdp& mdp, const BehaviorTable& psi,
                        const TabularPolicy& policy, const QTable& q, double alpha) {
  QTable out(mdp.n_states, mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      double acc = mdp.r(s, a);
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
        for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2)
          acc += mdp.p(s, a, s2) * policy.at(s2, a2) *
                 (alpha * psi.at(s2, a2) + mdp.gamma * q.at(s2, a2));
      out.at(s, a) = acc;
    }
  return out;
}

// Classical policy iteration for the plain (psi-free) MDP, written
// independently of the module under test.
TabularPolicy classical_policy_iteration(const FiniteMdp& mdp) {
  TabularPolicy policy = TabularPolicy::uniform(mdp.n_states, mdp.n_actions);
  for (int round = 0; round < 1000; ++round) {
    QTable q(mdp.n_states, mdp.n_actions);
    for (int it = 0; it < 100000; ++it) {
      QTable next(mdp.n_states, mdp.n_actions);
      double gap = 0.0;
      for (std::size_t s = 0; s < mdp.n_states; ++s)
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
          double acc = mdp.r(s, a);
          for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
            double v = 0.0;
            for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2)
              v += policy.at(s2, a2) * q.at(s2, a2);
            acc += mdp.gamma * mdp.p(s, a, s2) * v;
          }
          next.at(s, a) = acc;
          gap = std::max(gap, std::abs(acc - q.at(s, a)));
        }
      q = next;
      if (gap < 1e-12) break;
    }
    TabularPolicy next(mdp.n_states, mdp.n_actions);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < mdp.n_actions; ++a)
        if (q.at(s, a) > q.at(s, best)) best = a;
      next.at(s, best) = 1.0;
    }
    if (next.probs == policy.probs) return policy;
    policy = next;
  }
  return policy;
}

FiniteMdp scalar_mdp() {
  FiniteMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 1;
  mdp.transition = {1.0};
  mdp.reward = {1.0};
  mdp.gamma = 0.5;
  return mdp;
}

}  // namespace

TEST_CASE("FiniteMdp validation rejects malformed models") {
  FiniteMdp mdp = scalar_mdp();
  CHECK_NOTHROW(mdp.validate());

  FiniteMdp bad = mdp;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = mdp;
  bad.transition = {0.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = mdp;
  bad.transition = {-1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = mdp;
  bad.reward = {std::nan("")};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("bellman_backup: closed forms") {
  Rng rng(11);
  FiniteMdp mdp = random_mdp(rng, 3, 2, 0.0);
  BehaviorTable psi(3, 2);
  for (auto& v : psi.values) v = rng.uniform(0.0, 2.0);
  TabularPolicy uniform = TabularPolicy::uniform(3, 2);
  QTable q(3, 2);
  for (auto& v : q.values) v = rng.uniform(-1.0, 1.0);

  // gamma = 0, alpha = 0: operator collapses to the reward table
  QTable out = bellman_backup(mdp, psi, uniform, q, 0.0);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t a = 0; a < 2; ++a)
      CHECK(out.at(s, a) == doctest::Approx(mdp.r(s, a)).epsilon(1e-14));

  // gamma = 0, alpha = 1, uniform policy: r + p-weighted mean of psi
  out = bellman_backup(mdp, psi, uniform, q, 1.0);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t a = 0; a < 2; ++a) {
      double want = mdp.r(s, a);
      for (std::size_t s2 = 0; s2 < 3; ++s2)
        want += mdp.p(s, a, s2) * 0.5 * (psi.at(s2, 0) + psi.at(s2, 1));
      CHECK(out.at(s, a) == doctest::Approx(want).epsilon(1e-13));
    }

  CHECK_THROWS_AS(bellman_backup(mdp, BehaviorTable(2, 2), uniform, q, 0.0),
                  std::invalid_argument);
}

TEST_CASE("bellman_backup matches the triple-loop reference") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t ns = 2 + rng.uniform_int(4);
    const std::size_t na = 2 + rng.uniform_int(3);
    FiniteMdp mdp = random_mdp(rng, ns, na, rng.uniform(0.0, 0.99));
    BehaviorTable psi(ns, na);
    for (auto& v : psi.values) v = rng.uniform(0.0, 3.0);
    TabularPolicy policy = TabularPolicy::uniform(ns, na);
    QTable q(ns, na);
    for (auto& v : q.values) v = rng.uniform(-2.0, 2.0);
    const double alpha = rng.uniform(0.0, 1.0);

    QTable got = bellman_backup(mdp, psi, policy, q, alpha);
    QTable want = backup_reference(mdp, psi, policy, q, alpha);
    for (std::size_t k = 0; k < got.values.size(); ++k)
      CHECK(std::abs(got.values[k] - want.values[k]) < 1e-12);
  }
}

TEST_CASE("behavioral_q_evaluation: scalar fixed point 2.2") {
  FiniteMdp mdp = scalar_mdp();
  BehaviorTable psi(1, 1, 1.0);
  TabularPolicy policy(1, 1, 1.0);
  auto [q, iterations] = behavioral_q_evaluation(mdp, psi, policy, 0.1, 1e-12);
  CHECK(q.at(0, 0) == doctest::Approx(2.2).epsilon(1e-9));
  CHECK(iterations > 1);
  CHECK(exact_q_solve(mdp, psi, policy, 0.1).at(0, 0) == doctest::Approx(2.2));
}

TEST_CASE("exact_q_solve trivial cases") {
  Rng rng(33);
  FiniteMdp mdp = random_mdp(rng, 4, 3, 0.0);
  BehaviorTable psi(4, 3);
  TabularPolicy uniform = TabularPolicy::uniform(4, 3);
  QTable q = exact_q_solve(mdp, psi, uniform, 0.0);
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t a = 0; a < 3; ++a)
      CHECK(q.at(s, a) == doctest::Approx(mdp.r(s, a)).epsilon(1e-12));
}

TEST_CASE("iterative evaluation agrees with the linear solve") {
  Rng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t ns = 2 + rng.uniform_int(5);
    const std::size_t na = 2 + rng.uniform_int(5);
    const double gamma = (trial % 3 == 0) ? 0.5 : (trial % 3 == 1 ? 0.9 : 0.99);
    FiniteMdp mdp = random_mdp(rng, ns, na, gamma);
    BehaviorTable psi(ns, na);
    for (auto& v : psi.values) v = rng.uniform(0.0, 2.0);
    TabularPolicy policy = TabularPolicy::uniform(ns, na);
    const double alpha = rng.uniform(0.0, 1.0);

    QTable direct = exact_q_solve(mdp, psi, policy, alpha);
    QTable iter = behavioral_q_evaluation(mdp, psi, policy, alpha, 1e-9).q;
    for (std::size_t k = 0; k < direct.values.size(); ++k)
      CHECK(std::abs(direct.values[k] - iter.values[k]) < 1e-6);
  }
}

TEST_CASE("alpha = 0 evaluation reduces to standard policy evaluation") {
  Rng rng(55);
  FiniteMdp mdp = random_mdp(rng, 5, 3, 0.9);
  BehaviorTable psi(5, 3);
  for (auto& v : psi.values) v = rng.uniform(0.0, 5.0);
  BehaviorTable zero_psi(5, 3);
  TabularPolicy policy = TabularPolicy::uniform(5, 3);

  QTable with_alpha0 = behavioral_q_evaluation(mdp, psi, policy, 0.0, 1e-10).q;
  QTable plain = exact_q_solve(mdp, zero_psi, policy, 0.0);
  for (std::size_t k = 0; k < plain.values.size(); ++k)
    CHECK(std::abs(with_alpha0.values[k] - plain.values[k]) < 1e-8);
}

TEST_CASE("greedy_improvement: argmax, ties, affine invariance") {
  QTable q(2, 3);
  q.values = {1.0, 3.0, 2.0, 2.0, 2.0, -1.0};
  TabularPolicy policy = greedy_improvement(q);
  CHECK(policy.at(0, 1) == 1.0);  // argmax of (1, 3, 2)
  CHECK(policy.at(1, 0) == 1.0);  // tie (2, 2) breaks to the lowest index

  QTable scaled = q;
  for (auto& v : scaled.values) v = 3.5 * v - 7.0;
  CHECK(greedy_improvement(scaled).probs == policy.probs);

  QTable bad = q;
  bad.values[0] = std::nan("");
  CHECK_THROWS_AS(greedy_improvement(bad), std::invalid_argument);
}

TEST_CASE("policy iteration on a dominant-action MDP converges immediately") {
  // action 1 strictly dominates everywhere; psi = 0
  FiniteMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.gamma = 0.9;
  mdp.transition = {
      0.5, 0.5, 0.5, 0.5,  // s0: both actions mix states evenly
      0.5, 0.5, 0.5, 0.5,
  };
  mdp.reward = {0.0, 1.0, 0.0, 1.0};
  mdp.validate();
  BehaviorTable psi(2, 2);

  auto result = behavioral_policy_iteration(mdp, psi, 0.5, 1e-10);
  CHECK(result.improvement_trace.size() <= 2);
  CHECK(result.policy.at(0, 1) == 1.0);
  CHECK(result.policy.at(1, 1) == 1.0);
}

TEST_CASE("alpha = 0 policy iteration matches classical policy iteration") {
  Rng rng(66);
  for (int trial = 0; trial < 10; ++trial) {
    FiniteMdp mdp = random_mdp(rng, 4, 3, 0.9);
    BehaviorTable psi(4, 3);
    for (auto& v : psi.values) v = rng.uniform(0.0, 2.0);  // ignored at alpha 0

    auto result = behavioral_policy_iteration(mdp, psi, 0.0, 1e-12);
    TabularPolicy reference = classical_policy_iteration(mdp);
    CHECK(result.policy.probs == reference.probs);
  }
}

TEST_CASE("policy iteration traces improve monotonically") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t ns = 2 + rng.uniform_int(4);
    const std::size_t na = 2 + rng.uniform_int(4);
    FiniteMdp mdp = random_mdp(rng, ns, na, trial % 2 ? 0.9 : 0.5);
    BehaviorTable psi(ns, na);
    for (auto& v : psi.values) v = rng.uniform(0.0, 2.0);
    const double alpha = rng.uniform(0.0, 1.0);

    auto result = behavioral_policy_iteration(mdp, psi, alpha, 1e-12);
    for (std::size_t t = 1; t < result.improvement_trace.size(); ++t)
      for (std::size_t k = 0; k < result.q.values.size(); ++k)
        CHECK(result.improvement_trace[t].values[k] >=
              result.improvement_trace[t - 1].values[k] - 1e-9);
  }
}

TEST_CASE("brute force: scalar instance and budget") {
  // single state, two actions; the augmented value decides
  FiniteMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 2;
  mdp.gamma = 0.5;
  mdp.transition = {1.0, 1.0};
  mdp.reward = {1.0, 0.9};
  mdp.validate();
  BehaviorTable psi(1, 2);
  psi.values = {0.0, 2.0};

  // alpha = 0: plain reward decides; action 0 wins
  auto best0 = brute_force_optimal(mdp, psi, 0.0);
  CHECK(best0.policy.at(0, 0) == 1.0);

  // large alpha: the psi-rich action wins
  auto best1 = brute_force_optimal(mdp, psi, 1.0);
  CHECK(best1.policy.at(0, 1) == 1.0);

  Rng rng(88);
  FiniteMdp big = random_mdp(rng, 6, 6, 0.9);
  BehaviorTable psi6(6, 6);
  CHECK_THROWS_AS(brute_force_optimal(big, psi6, 0.0, 4096), std::invalid_argument);
}

TEST_CASE("brute force alpha = 0 agrees with classical policy iteration") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    FiniteMdp mdp = random_mdp(rng, 4, 3, 0.9);
    BehaviorTable psi(4, 3);
    for (auto& v : psi.values) v = rng.uniform(0.0, 2.0);
    auto best = brute_force_optimal(mdp, psi, 0.0);
    TabularPolicy reference = classical_policy_iteration(mdp);
    CHECK(best.policy.probs == reference.probs);
  }
}

TEST_CASE("iterated improvement attains the brute-force optimum") {
  Rng rng(111);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t ns = 2 + rng.uniform_int(2);  // 2..3
    const std::size_t na = 2 + rng.uniform_int(3);  // 2..4
    FiniteMdp mdp = random_mdp(rng, ns, na, trial % 2 ? 0.9 : 0.5);
    BehaviorTable psi(ns, na);
    for (auto& v : psi.values) v = rng.uniform(0.0, 2.0);
    const double alpha = rng.uniform(0.0, 1.0);

    auto pi_result = behavioral_policy_iteration(mdp, psi, alpha, 1e-12);
    auto brute = brute_force_optimal(mdp, psi, alpha, 4096);

    QTable pi_q = exact_q_solve(mdp, psi, pi_result.policy, alpha);
    const double pi_value = augmented_start_value(mdp, psi, pi_result.policy, pi_q, alpha);
    CHECK(std::abs(pi_value - brute.value) < 1e-6);
  }
}

TEST_CASE("boundedness of the fixed point") {
  Rng rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    FiniteMdp mdp = random_mdp(rng, 4, 4, 0.9);
    BehaviorTable psi(4, 4);
    for (auto& v : psi.values) v = rng.uniform(0.0, 2.0);
    TabularPolicy policy = TabularPolicy::uniform(4, 4);
    const double alpha = rng.uniform(0.0, 1.0);

    double r_max = 0.0, p_max = 0.0;
    for (double r : mdp.reward) r_max = std::max(r_max, std::abs(r));
    for (double p : psi.values) p_max = std::max(p_max, p);

    QTable q = exact_q_solve(mdp, psi, policy, alpha);
    const double bound = (r_max + alpha * p_max) / (1.0 - mdp.gamma);
    for (double v : q.values) CHECK(std::abs(v) <= bound + 1e-9);
  }
}

TEST_CASE("text fixture round trip") {
  FiniteMdp mdp = load_mdp(std::string(BAC_FIXTURE_DIR) + "/mdp_3x2.txt");
  CHECK(mdp.n_states == 3);
  CHECK(mdp.n_actions == 2);
  CHECK(mdp.gamma == doctest::Approx(0.9));
  CHECK(mdp.r(2, 1) == doctest::Approx(2.0));
  CHECK(mdp.p(0, 0, 1) == doctest::Approx(0.6));

  // regression: uniform-policy evaluation against the triple-loop oracle
  BehaviorTable psi(3, 2);
  psi.values = {0.5, 0.0, 1.0, 0.25, 0.0, 2.0};
  TabularPolicy uniform = TabularPolicy::uniform(3, 2);
  QTable direct = exact_q_solve(mdp, psi, uniform, 0.3);
  QTable check(3, 2);
  for (int it = 0; it < 2000; ++it) check = backup_reference(mdp, psi, uniform, check, 0.3);
  for (std::size_t k = 0; k < direct.values.size(); ++k)
    CHECK(std::abs(direct.values[k] - check.values[k]) < 1e-9);

  save_mdp(mdp, "mdp_roundtrip_tmp.txt");
  FiniteMdp again = load_mdp("mdp_roundtrip_tmp.txt");
  CHECK(again.transition == mdp.transition);
  CHECK(again.reward == mdp.reward);
}
