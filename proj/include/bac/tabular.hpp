#pragma once

// Exact finite-MDP instantiation of the exploration-augmented Bellman
// operator, its fixed-point evaluation (iterative and direct linear solve),
// greedy improvement, augmented policy iteration, and a brute-force
// enumeration oracle.

#include <cstddef>
#include <string>
#include <vector>

namespace bac::tabular {

struct FiniteMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  // transition[s * n_actions * n_states + a * n_states + s2] = p(s2 | s, a)
  std::vector<double> transition;
  // reward[s * n_actions + a]
  std::vector<double> reward;
  double gamma = 0.0;

  double p(std::size_t s, std::size_t a, std::size_t s2) const {
    return transition[(s * n_actions + a) * n_states + s2];
  }
  double r(std::size_t s, std::size_t a) const { return reward[s * n_actions + a]; }

  // Throws std::invalid_argument when rows fail to be stochastic within
  // 1e-9, probabilities are negative, rewards are non-finite, or gamma is
  // outside [0, 1).
  void validate() const;
};

// Per-(s, a) table; used for Q values, the exogenous behavior table psi,
// and intermediate improvement tables.
struct QTable {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> values;

  QTable() = default;
  QTable(std::size_t s, std::size_t a, double fill = 0.0)
      : n_states(s), n_actions(a), values(s * a, fill) {}
  double& at(std::size_t s, std::size_t a) { return values[s * n_actions + a]; }
  double at(std::size_t s, std::size_t a) const { return values[s * n_actions + a]; }
};

using BehaviorTable = QTable;  // psi[s][a] >= 0, held fixed during evaluation

struct TabularPolicy {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> probs;  // probs[s * n_actions + a]

  TabularPolicy() = default;
  TabularPolicy(std::size_t s, std::size_t a, double fill = 0.0)
      : n_states(s), n_actions(a), probs(s * a, fill) {}
  double& at(std::size_t s, std::size_t a) { return probs[s * n_actions + a]; }
  double at(std::size_t s, std::size_t a) const { return probs[s * n_actions + a]; }

  static TabularPolicy uniform(std::size_t s, std::size_t a);
  void validate() const;
};

// One exact application of the augmented operator:
// (T Q)(s,a) = r(s,a) + sum_s2 p(s2|s,a) sum_a2 pi(a2|s2) [alpha psi(s2,a2) + gamma Q(s2,a2)].
QTable bellman_backup(const FiniteMdp& mdp, const BehaviorTable& psi,
                      const TabularPolicy& policy, const QTable& q, double alpha);

struct EvaluationResult {
  QTable q;
  std::size_t iterations = 0;
};

// Iterates T from Q0 = 0 until the sup-norm step falls below tolerance.
EvaluationResult behavioral_q_evaluation(const FiniteMdp& mdp, const BehaviorTable& psi,
                                         const TabularPolicy& policy, double alpha,
                                         double tolerance);

// Direct fixed-point solve of the linear system (I - gamma M) q = r + alpha M psi.
QTable exact_q_solve(const FiniteMdp& mdp, const BehaviorTable& psi,
                     const TabularPolicy& policy, double alpha);

// Deterministic policy placing mass 1 on argmax_a q(s, a); ties break to
// the lowest action index.
TabularPolicy greedy_improvement(const QTable& q);

// The one-step lookahead table the improvement step maximizes:
// alpha psi(s,a) + gamma q(s,a).
QTable improvement_table(const QTable& q, const BehaviorTable& psi, double alpha,
                         double gamma);

// Mean over states of E_{a~pi} [alpha psi(s,a) + gamma Q^pi(s,a)]; the
// augmented start-state value used to rank policies (uniform start).
double augmented_start_value(const FiniteMdp& mdp, const BehaviorTable& psi,
                             const TabularPolicy& policy, const QTable& q, double alpha);

struct PolicyIterationResult {
  TabularPolicy policy;
  QTable q;
  std::vector<QTable> improvement_trace;  // Q^{pi_k} for every iterate
};

// Alternates evaluation and greedy improvement on the lookahead table until
// the policy is unchanged.
PolicyIterationResult behavioral_policy_iteration(const FiniteMdp& mdp,
                                                  const BehaviorTable& psi, double alpha,
                                                  double tolerance);

struct BruteForceResult {
  TabularPolicy policy;
  QTable q;
  double value = 0.0;
};

// Enumerates every deterministic policy (n_actions^n_states <= limit),
// evaluates each exactly, and returns the maximizer of the augmented
// start value. Ties break toward the lexicographically smallest policy.
BruteForceResult brute_force_optimal(const FiniteMdp& mdp, const BehaviorTable& psi,
                                     double alpha, std::size_t limit = 4096);

// Plain-text format: "n_states n_actions gamma" header, then one
// p(.|s,a) row per (s,a) in s-major order, then one reward row per state.
FiniteMdp load_mdp(const std::string& path);
void save_mdp(const FiniteMdp& mdp, const std::string& path);

}  // namespace bac::tabular
