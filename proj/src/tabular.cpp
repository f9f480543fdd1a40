#include "bac/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bac::tabular {
namespace {

void check_shapes(const FiniteMdp& mdp, const QTable& table, const char* what) {
  if (table.n_states != mdp.n_states || table.n_actions != mdp.n_actions)
    throw std::invalid_argument(std::string(what) + ": shape mismatch with MDP");
}

void check_shapes(const FiniteMdp& mdp, const TabularPolicy& policy) {
  if (policy.n_states != mdp.n_states || policy.n_actions != mdp.n_actions)
    throw std::invalid_argument("policy: shape mismatch with MDP");
}

// Gaussian elimination with partial pivoting on a dense row-major system.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a[col * n + col]);
    for (std::size_t row = col + 1; row < n; ++row) {
      const double mag = std::abs(a[row * n + col]);
      if (mag > best) {
        best = mag;
        pivot = row;
      }
    }
    if (best < 1e-12) throw std::runtime_error("exact_q_solve: singular system");
    if (pivot != col) {
      for (std::size_t k = col; k < n; ++k) std::swap(a[pivot * n + k], a[col * n + k]);
      std::swap(b[pivot], b[col]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t row = col + 1; row < n; ++row) {
      const double factor = a[row * n + col] * inv;
      if (factor == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[row * n + k] -= factor * a[col * n + k];
      b[row] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t row = n; row-- > 0;) {
    double acc = b[row];
    for (std::size_t k = row + 1; k < n; ++k) acc -= a[row * n + k] * x[k];
    x[row] = acc / a[row * n + row];
  }
  return x;
}

}  // namespace

void FiniteMdp::validate() const {
  if (n_states == 0 || n_actions == 0)
    throw std::invalid_argument("FiniteMdp: empty state or action set");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("FiniteMdp: gamma must lie in [0, 1)");
  if (transition.size() != n_states * n_actions * n_states ||
      reward.size() != n_states * n_actions)
    throw std::invalid_argument("FiniteMdp: array sizes disagree with dimensions");
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      double row_sum = 0.0;
      for (std::size_t s2 = 0; s2 < n_states; ++s2) {
        const double prob = p(s, a, s2);
        if (prob < 0.0) throw std::invalid_argument("FiniteMdp: negative probability");
        row_sum += prob;
      }
      if (std::abs(row_sum - 1.0) > 1e-9)
        throw std::invalid_argument("FiniteMdp: transition row does not sum to 1");
      if (!std::isfinite(r(s, a)))
        throw std::invalid_argument("FiniteMdp: non-finite reward");
    }
  }
}

TabularPolicy TabularPolicy::uniform(std::size_t s, std::size_t a) {
  TabularPolicy policy(s, a, 1.0 / static_cast<double>(a));
  return policy;
}

void TabularPolicy::validate() const {
  for (std::size_t s = 0; s < n_states; ++s) {
    double row_sum = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
      if (at(s, a) < 0.0) throw std::invalid_argument("policy: negative probability");
      row_sum += at(s, a);
    }
    if (std::abs(row_sum - 1.0) > 1e-9)
      throw std::invalid_argument("policy: row does not sum to 1");
  }
}

QTable bellman_backup(const FiniteMdp& mdp, const BehaviorTable& psi,
                      const TabularPolicy& policy, const QTable& q, double alpha) {
  check_shapes(mdp, psi, "psi");
  check_shapes(mdp, q, "q");
  check_shapes(mdp, policy);
  if (!(alpha >= 0.0)) throw std::invalid_argument("bellman_backup: alpha must be >= 0");

  // Per-state expected continuation under the policy.
  std::vector<double> continuation(mdp.n_states, 0.0);
  for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
    double acc = 0.0;
    for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2)
      acc += policy.at(s2, a2) * (alpha * psi.at(s2, a2) + mdp.gamma * q.at(s2, a2));
    continuation[s2] = acc;
  }
  QTable out(mdp.n_states, mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      double acc = mdp.r(s, a);
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
        acc += mdp.p(s, a, s2) * continuation[s2];
      out.at(s, a) = acc;
    }
  }
  return out;
}

EvaluationResult behavioral_q_evaluation(const FiniteMdp& mdp, const BehaviorTable& psi,
                                         const TabularPolicy& policy, double alpha,
                                         double tolerance) {
  if (!(mdp.gamma < 1.0)) throw std::invalid_argument("evaluation requires gamma < 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  EvaluationResult result;
  result.q = QTable(mdp.n_states, mdp.n_actions);
  while (true) {
    QTable next = bellman_backup(mdp, psi, policy, result.q, alpha);
    ++result.iterations;
    double gap = 0.0;
    for (std::size_t i = 0; i < next.values.size(); ++i)
      gap = std::max(gap, std::abs(next.values[i] - result.q.values[i]));
    result.q = std::move(next);
    if (gap < tolerance) break;
  }
  return result;
}

QTable exact_q_solve(const FiniteMdp& mdp, const BehaviorTable& psi,
                     const TabularPolicy& policy, double alpha) {
  check_shapes(mdp, psi, "psi");
  check_shapes(mdp, policy);
  if (!(mdp.gamma < 1.0)) throw std::invalid_argument("exact_q_solve requires gamma < 1");
  const std::size_t n = mdp.n_states * mdp.n_actions;

  // M[(s,a),(s2,a2)] = p(s2|s,a) pi(a2|s2);  (I - gamma M) q = r + alpha M psi.
  std::vector<double> a(n * n, 0.0);
  std::vector<double> b(n, 0.0);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t act = 0; act < mdp.n_actions; ++act) {
      const std::size_t row = s * mdp.n_actions + act;
      double bonus = 0.0;
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
        const double prob = mdp.p(s, act, s2);
        if (prob == 0.0) continue;
        for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2) {
          const double m = prob * policy.at(s2, a2);
          a[row * n + s2 * mdp.n_actions + a2] -= mdp.gamma * m;
          bonus += m * psi.at(s2, a2);
        }
      }
      a[row * n + row] += 1.0;
      b[row] = mdp.r(s, act) + alpha * bonus;
    }
  }
  QTable q(mdp.n_states, mdp.n_actions);
  q.values = solve_dense(std::move(a), std::move(b), n);
  return q;
}

TabularPolicy greedy_improvement(const QTable& q) {
  for (double v : q.values)
    if (!std::isfinite(v)) throw std::invalid_argument("greedy_improvement: non-finite Q");
  TabularPolicy policy(q.n_states, q.n_actions);
  for (std::size_t s = 0; s < q.n_states; ++s) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.n_actions; ++a)
      if (q.at(s, a) > q.at(s, best)) best = a;
    policy.at(s, best) = 1.0;
  }
  return policy;
}

QTable improvement_table(const QTable& q, const BehaviorTable& psi, double alpha,
                         double gamma) {
  if (q.n_states != psi.n_states || q.n_actions != psi.n_actions)
    throw std::invalid_argument("improvement_table: shape mismatch");
  QTable table(q.n_states, q.n_actions);
  for (std::size_t i = 0; i < table.values.size(); ++i)
    table.values[i] = alpha * psi.values[i] + gamma * q.values[i];
  return table;
}

double augmented_start_value(const FiniteMdp& mdp, const BehaviorTable& psi,
                             const TabularPolicy& policy, const QTable& q, double alpha) {
  double total = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      total += policy.at(s, a) * (alpha * psi.at(s, a) + mdp.gamma * q.at(s, a));
  }
  return total / static_cast<double>(mdp.n_states);
}

PolicyIterationResult behavioral_policy_iteration(const FiniteMdp& mdp,
                                                  const BehaviorTable& psi, double alpha,
                                                  double tolerance) {
  if (!(mdp.gamma < 1.0))
    throw std::invalid_argument("behavioral_policy_iteration requires gamma < 1");
  PolicyIterationResult result;
  result.policy = greedy_improvement(improvement_table(
      QTable(mdp.n_states, mdp.n_actions), psi, alpha, mdp.gamma));
  const std::size_t max_rounds = 10000;
  for (std::size_t round = 0;; ++round) {
    if (round >= max_rounds)
      throw std::runtime_error("behavioral_policy_iteration: failed to converge");
    result.q = behavioral_q_evaluation(mdp, psi, result.policy, alpha, tolerance).q;
    result.improvement_trace.push_back(result.q);
    TabularPolicy next =
        greedy_improvement(improvement_table(result.q, psi, alpha, mdp.gamma));
    if (next.probs == result.policy.probs) break;
    result.policy = std::move(next);
  }
  return result;
}

BruteForceResult brute_force_optimal(const FiniteMdp& mdp, const BehaviorTable& psi,
                                     double alpha, std::size_t limit) {
  double combos = 1.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    combos *= static_cast<double>(mdp.n_actions);
    if (combos > static_cast<double>(limit))
      throw std::invalid_argument("brute_force_optimal: enumeration budget exceeded");
  }
  const std::size_t total = static_cast<std::size_t>(combos);

  BruteForceResult best;
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> choice(mdp.n_states, 0);
  for (std::size_t index = 0; index < total; ++index) {
    std::size_t rem = index;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      choice[s] = rem % mdp.n_actions;
      rem /= mdp.n_actions;
    }
    TabularPolicy policy(mdp.n_states, mdp.n_actions);
    for (std::size_t s = 0; s < mdp.n_states; ++s) policy.at(s, choice[s]) = 1.0;
    QTable q = exact_q_solve(mdp, psi, policy, alpha);
    const double value = augmented_start_value(mdp, psi, policy, q, alpha);
    if (value > best.value + 1e-12) {
      best.value = value;
      best.policy = policy;
      best.q = std::move(q);
    }
  }
  return best;
}

FiniteMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mdp: cannot open " + path);
  FiniteMdp mdp;
  if (!(in >> mdp.n_states >> mdp.n_actions >> mdp.gamma))
    throw std::runtime_error("load_mdp: malformed header in " + path);
  mdp.transition.resize(mdp.n_states * mdp.n_actions * mdp.n_states);
  mdp.reward.resize(mdp.n_states * mdp.n_actions);
  for (auto& v : mdp.transition)
    if (!(in >> v)) throw std::runtime_error("load_mdp: truncated transition block");
  for (auto& v : mdp.reward)
    if (!(in >> v)) throw std::runtime_error("load_mdp: truncated reward block");
  mdp.validate();
  return mdp;
}

void save_mdp(const FiniteMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mdp: cannot open " + path);
  out.precision(17);
  out << mdp.n_states << ' ' << mdp.n_actions << ' ' << mdp.gamma << '\n';
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
        out << mdp.p(s, a, s2) << (s2 + 1 == mdp.n_states ? '\n' : ' ');
    }
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      out << mdp.r(s, a) << (a + 1 == mdp.n_actions ? '\n' : ' ');
}

}  // namespace bac::tabular
