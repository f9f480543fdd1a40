#pragma once

// Experiment driver: seeded multi-run training with the periodic evaluation
// protocol, append-only CSV logging, cross-seed summaries, SVG learning
// curves, and the finite-MDP proposition verification suite.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bac/agent.hpp"
#include "bac/config.hpp"
#include "bac/tabular.hpp"

namespace bac {

inline constexpr const char* kRunLogVersion = "# bac-runlog v1";
inline constexpr const char* kRunLogHeader =
    "seed,step,eval_return_mean,eval_return_std,alpha,mean_psi_bar,critic_loss,wall_ms";

struct RunLogRow {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double alpha = 0.0;
  double mean_psi_bar = 0.0;
  double critic_loss = 0.0;
  double wall_ms = 0.0;
};

struct RunLog {
  std::vector<RunLogRow> rows;
};

std::string format_runlog_row(const RunLogRow& row);
RunLog load_runlog(const std::string& path);

// Trains every seed in the config for total_steps with evaluations at step
// 0, every eval_every steps, and at the end. When out_dir is set, writes
// out_dir/runlog.csv incrementally plus one final checkpoint per seed.
RunLog run_experiment(const ExperimentConfig& config);

struct EvalResult {
  double mean_return = 0.0;
  double return_std = 0.0;
  double mean_psi_bar = 0.0;
  std::vector<double> returns;
};

// eval_episodes eval-mode episodes on freshly seeded environments; does not
// consume the agent's training RNG stream.
EvalResult evaluate_agent(BacAgent& agent, const std::string& env_name,
                          std::size_t episodes, std::uint64_t run_seed,
                          std::uint64_t eval_index);

struct Summary {
  double max_mean_return = 0.0;  // max over steps of the cross-seed mean
  double return_std = 0.0;       // sample std across seeds at that step
  std::uint64_t step = 0;
};

Summary summarize(const RunLog& log);

struct NamedLog {
  std::string label;
  RunLog log;
};

// Self-contained SVG: one smoothed mean line per log (centered moving
// average, window 5 evaluation points) with a +/- quarter-std band.
void emit_plot(const std::vector<NamedLog>& logs, const std::string& path);

// Finite-MDP proposition suite: contraction, fixed-point correctness,
// monotone improvement, and brute-force optimality over random instances.
struct VerificationReport {
  std::size_t instances = 0;
  std::size_t optimality_instances = 0;
  double max_contraction_excess = 0.0;  // over gamma * |Q - Qt| + 1e-12
  double max_fixed_point_gap = 0.0;
  double worst_monotonicity_drop = 0.0;  // most negative trace step
  double max_optimality_gap = 0.0;
  bool contraction_ok = false;
  bool fixed_point_ok = false;
  bool monotone_ok = false;
  bool optimal_ok = false;

  bool all_ok() const {
    return contraction_ok && fixed_point_ok && monotone_ok && optimal_ok;
  }
};

VerificationReport verify_propositions(std::size_t n_instances, std::uint64_t seed);
void print_verification(const VerificationReport& report, std::ostream& out);

tabular::FiniteMdp random_mdp(Rng& rng, std::size_t n_states, std::size_t n_actions,
                              double gamma);

}  // namespace bac
