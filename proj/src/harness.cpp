#include "bac/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bac/checkpoint.hpp"
#include "bac/env.hpp"
#include "bac/kernels.hpp"

namespace bac {
namespace {

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

std::uint64_t eval_episode_seed(std::uint64_t run_seed, std::uint64_t eval_index,
                                std::uint64_t episode) {
  std::uint64_t sm = run_seed;
  splitmix64(sm);
  sm ^= 0x9e3779b97f4a7c15ULL * (eval_index + 1);
  splitmix64(sm);
  sm ^= 0xbf58476d1ce4e5b9ULL * (episode + 1);
  return splitmix64(sm);
}

}  // namespace

std::string format_runlog_row(const RunLogRow& row) {
  std::ostringstream out;
  out << row.seed << ',' << row.step << ',' << format_double(row.eval_return_mean)
      << ',' << format_double(row.eval_return_std) << ',' << format_double(row.alpha)
      << ',' << format_double(row.mean_psi_bar) << ',' << format_double(row.critic_loss)
      << ',' << format_double(row.wall_ms);
  return out.str();
}

RunLog load_runlog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_runlog: cannot open " + path);
  RunLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("seed,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string field;
    RunLogRow row;
    auto next = [&](double& target) {
      if (!std::getline(ss, field, ',')) throw std::runtime_error("load_runlog: short row");
      target = std::stod(field);
    };
    double seed_value, step_value;
    next(seed_value);
    next(step_value);
    row.seed = static_cast<std::uint64_t>(seed_value);
    row.step = static_cast<std::uint64_t>(step_value);
    next(row.eval_return_mean);
    next(row.eval_return_std);
    next(row.alpha);
    next(row.mean_psi_bar);
    next(row.critic_loss);
    next(row.wall_ms);
    log.rows.push_back(row);
  }
  return log;
}

EvalResult evaluate_agent(BacAgent& agent, const std::string& env_name,
                          std::size_t episodes, std::uint64_t run_seed,
                          std::uint64_t eval_index) {
  EvalResult result;
  double psi_total = 0.0;
  std::size_t psi_count = 0;
  auto env = make_env(env_name);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    std::vector<double> obs = env->reset(eval_episode_seed(run_seed, eval_index, ep));
    double episode_return = 0.0;
    for (std::size_t t = 0; t < env->spec().max_episode_steps; ++t) {
      const auto action = agent.select_action(obs, ActionMode::Eval);
      psi_total += agent.behavior().peek_normalized(obs, action);
      ++psi_count;
      StepResult res = env->step(action);
      episode_return += res.reward;
      obs = std::move(res.observation);
      if (res.done) break;
    }
    result.returns.push_back(episode_return);
  }
  double sum = 0.0;
  for (double r : result.returns) sum += r;
  result.mean_return = sum / static_cast<double>(result.returns.size());
  result.return_std = sample_std(result.returns, result.mean_return);
  result.mean_psi_bar = psi_count ? psi_total / static_cast<double>(psi_count) : 0.0;
  return result;
}

RunLog run_experiment(const ExperimentConfig& config) {
  std::vector<std::string> errors;
  validate_experiment_config(config, errors);
  if (!errors.empty()) {
    std::string joined;
    for (const auto& e : errors) joined += (joined.empty() ? "" : "; ") + e;
    throw std::invalid_argument("run_experiment: invalid config: " + joined);
  }
  kernels::select(kernels::parse_mode(config.kernel_mode));

  RunLog log;
  std::ofstream csv;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    csv.open(config.out_dir + "/runlog.csv");
    if (!csv) throw std::runtime_error("run_experiment: cannot write runlog.csv");
    csv << kRunLogVersion << '\n' << kRunLogHeader << '\n';
    csv.flush();
  }

  for (std::uint64_t seed : config.seeds) {
    const auto start = std::chrono::steady_clock::now();
    auto env = make_env(config.env_name);
    BacAgent agent(env->spec(), config.agent, seed);

    double last_critic_loss = 0.0;
    std::uint64_t eval_index = 0;
    auto emit_row = [&](std::uint64_t step) {
      EvalResult eval =
          evaluate_agent(agent, config.env_name, config.eval_episodes, seed, eval_index);
      ++eval_index;
      RunLogRow row;
      row.seed = seed;
      row.step = step;
      row.eval_return_mean = eval.mean_return;
      row.eval_return_std = eval.return_std;
      row.alpha = agent.config().alpha_mode == AlphaMode::Static
                      ? agent.config().alpha
                      : (agent.temperature() ? agent.temperature()->last_alpha : 0.5);
      row.mean_psi_bar = eval.mean_psi_bar;
      row.critic_loss = last_critic_loss;
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      log.rows.push_back(row);
      if (csv.is_open()) {
        csv << format_runlog_row(row) << '\n';
        csv.flush();
      }
    };

    emit_row(0);
    for (std::uint64_t step = 1; step <= config.total_steps; ++step) {
      const StepDiagnostics diag = agent.train_step(*env);
      if (diag.updates > 0) last_critic_loss = diag.critic_loss;
      if (step % config.eval_every == 0 || step == config.total_steps) emit_row(step);
    }

    if (!config.out_dir.empty()) {
      save_checkpoint(agent, *env, config,
                      config.out_dir + "/checkpoint_seed" + std::to_string(seed) + ".bac",
                      /*include_buffer=*/false);
    }
  }
  return log;
}

Summary summarize(const RunLog& log) {
  if (log.rows.empty()) throw std::invalid_argument("summarize: empty log");
  std::map<std::uint64_t, std::vector<double>> by_step;
  for (const auto& row : log.rows) by_step[row.step].push_back(row.eval_return_mean);

  Summary summary;
  bool first = true;
  for (const auto& [step, returns] : by_step) {
    double sum = 0.0;
    for (double r : returns) sum += r;
    const double mean = sum / static_cast<double>(returns.size());
    if (first || mean > summary.max_mean_return) {
      summary.max_mean_return = mean;
      summary.return_std = sample_std(returns, mean);
      summary.step = step;
      first = false;
    }
  }
  return summary;
}

namespace {

struct Series {
  std::vector<double> steps, mean, band;
};

Series reduce_log(const RunLog& log) {
  std::map<std::uint64_t, std::vector<double>> by_step;
  for (const auto& row : log.rows) by_step[row.step].push_back(row.eval_return_mean);
  Series series;
  for (const auto& [step, returns] : by_step) {
    double sum = 0.0;
    for (double r : returns) sum += r;
    const double mean = sum / static_cast<double>(returns.size());
    series.steps.push_back(static_cast<double>(step));
    series.mean.push_back(mean);
    series.band.push_back(0.25 * sample_std(returns, mean));
  }
  return series;
}

std::vector<double> smooth(const std::vector<double>& xs, std::size_t window) {
  const std::size_t n = xs.size();
  if (n == 0) return {};
  std::vector<double> out(n);
  if (window >= n) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    std::fill(out.begin(), out.end(), sum / static_cast<double>(n));
    return out;
  }
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += xs[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

void emit_plot(const std::vector<NamedLog>& logs, const std::string& path) {
  if (logs.empty()) throw std::invalid_argument("emit_plot: no logs");
  for (const auto& named : logs)
    if (named.log.rows.empty()) throw std::invalid_argument("emit_plot: empty log");

  constexpr double kWidth = 800, kHeight = 500, kMargin = 60;
  constexpr std::size_t kWindow = 5;

  std::vector<Series> series;
  for (const auto& named : logs) {
    Series s = reduce_log(named.log);
    s.mean = smooth(s.mean, kWindow);
    s.band = smooth(s.band, kWindow);
    series.push_back(std::move(s));
  }

  double xmin = series[0].steps.front(), xmax = series[0].steps.back();
  double ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& s : series) {
    xmin = std::min(xmin, s.steps.front());
    xmax = std::max(xmax, s.steps.back());
    for (std::size_t i = 0; i < s.mean.size(); ++i) {
      const double lo = s.mean[i] - s.band[i], hi = s.mean[i] + s.band[i];
      if (first) {
        ymin = lo;
        ymax = hi;
        first = false;
      } else {
        ymin = std::min(ymin, lo);
        ymax = std::max(ymax, hi);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymax += 1;
    ymin -= 1;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) {
    return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin);
  };
  auto py = [&](double y) {
    return kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin);
  };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_plot: cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // axes
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double tx = xmin + (xmax - xmin) * tick / 4.0;
    const double ty = ymin + (ymax - ymin) * tick / 4.0;
    out << "<text x=\"" << px(tx) << "\" y=\"" << kHeight - kMargin + 20
        << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt(tx) << "</text>\n";
    out << "<text x=\"" << kMargin - 8 << "\" y=\"" << py(ty) + 4
        << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(ty) << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" font-size=\"14\" text-anchor=\"middle\">environment steps</text>\n";
  out << "<text x=\"16\" y=\"" << kHeight / 2
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kHeight / 2 << ")\">evaluation return</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];

    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      out << fmt(px(s.steps[i])) << ',' << fmt(py(s.mean[i] + s.band[i])) << ' ';
    for (std::size_t i = s.steps.size(); i-- > 0;)
      out << fmt(px(s.steps[i])) << ',' << fmt(py(s.mean[i] - s.band[i])) << ' ';
    out << "\"/>\n";

    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      out << fmt(px(s.steps[i])) << ',' << fmt(py(s.mean[i])) << ' ';
    out << "\"/>\n";

    out << "<rect x=\"" << kWidth - kMargin - 150 << "\" y=\"" << kMargin + 18 * si
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin - 132 << "\" y=\"" << kMargin + 18 * si + 10
        << "\" font-size=\"12\">" << logs[si].label << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("emit_plot: write failed for " + path);
}

tabular::FiniteMdp random_mdp(Rng& rng, std::size_t n_states, std::size_t n_actions,
                              double gamma) {
  tabular::FiniteMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.transition.resize(n_states * n_actions * n_states);
  mdp.reward.resize(n_states * n_actions);
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      double row_sum = 0.0;
      const std::size_t base = (s * n_actions + a) * n_states;
      for (std::size_t s2 = 0; s2 < n_states; ++s2) {
        mdp.transition[base + s2] = rng.uniform(0.01, 1.0);
        row_sum += mdp.transition[base + s2];
      }
      for (std::size_t s2 = 0; s2 < n_states; ++s2) mdp.transition[base + s2] /= row_sum;
      mdp.reward[s * n_actions + a] = rng.uniform(-1.0, 1.0);
    }
  }
  return mdp;
}

VerificationReport verify_propositions(std::size_t n_instances, std::uint64_t seed) {
  using namespace tabular;
  VerificationReport report;
  report.instances = n_instances;
  report.contraction_ok = report.fixed_point_ok = report.monotone_ok =
      report.optimal_ok = true;

  Rng rng(seed);
  const double gammas[] = {0.5, 0.9, 0.99};
  const double alphas[] = {0.0, 0.1, 0.5, 1.0};

  for (std::size_t i = 0; i < n_instances; ++i) {
    const std::size_t n_states = 2 + rng.uniform_int(5);   // 2..6
    const std::size_t n_actions = 2 + rng.uniform_int(5);  // 2..6
    const double gamma = gammas[i % 3];
    const double alpha = alphas[i % 4];
    const FiniteMdp mdp = random_mdp(rng, n_states, n_actions, gamma);

    BehaviorTable psi(n_states, n_actions);
    for (auto& v : psi.values) v = rng.uniform(0.0, 2.0);

    TabularPolicy policy(n_states, n_actions);
    for (std::size_t s = 0; s < n_states; ++s) {
      double row_sum = 0.0;
      for (std::size_t a = 0; a < n_actions; ++a) {
        policy.at(s, a) = rng.uniform(0.05, 1.0);
        row_sum += policy.at(s, a);
      }
      for (std::size_t a = 0; a < n_actions; ++a) policy.at(s, a) /= row_sum;
    }

    // contraction on a random table pair
    QTable q(n_states, n_actions), qt(n_states, n_actions);
    for (auto& v : q.values) v = rng.uniform(-5.0, 5.0);
    for (auto& v : qt.values) v = rng.uniform(-5.0, 5.0);
    const QTable tq = bellman_backup(mdp, psi, policy, q, alpha);
    const QTable tqt = bellman_backup(mdp, psi, policy, qt, alpha);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < q.values.size(); ++k) {
      lhs = std::max(lhs, std::abs(tq.values[k] - tqt.values[k]));
      rhs = std::max(rhs, std::abs(q.values[k] - qt.values[k]));
    }
    const double excess = lhs - (gamma * rhs + 1e-12);
    report.max_contraction_excess = std::max(report.max_contraction_excess, excess);
    if (excess > 0.0) report.contraction_ok = false;

    // fixed point: iterative evaluation vs direct solve
    const QTable iterative = behavioral_q_evaluation(mdp, psi, policy, alpha, 1e-9).q;
    const QTable direct = exact_q_solve(mdp, psi, policy, alpha);
    double gap = 0.0;
    for (std::size_t k = 0; k < iterative.values.size(); ++k)
      gap = std::max(gap, std::abs(iterative.values[k] - direct.values[k]));
    report.max_fixed_point_gap = std::max(report.max_fixed_point_gap, gap);
    if (gap > 1e-6) report.fixed_point_ok = false;

    // monotone improvement along the policy-iteration trace
    const PolicyIterationResult pi = behavioral_policy_iteration(mdp, psi, alpha, 1e-12);
    for (std::size_t t = 1; t < pi.improvement_trace.size(); ++t) {
      for (std::size_t k = 0; k < pi.improvement_trace[t].values.size(); ++k) {
        const double drop =
            pi.improvement_trace[t].values[k] - pi.improvement_trace[t - 1].values[k];
        report.worst_monotonicity_drop = std::min(report.worst_monotonicity_drop, drop);
        if (drop < -1e-9) report.monotone_ok = false;
      }
    }

    // optimality vs brute force where the policy space is enumerable
    double combos = 1.0;
    for (std::size_t s = 0; s < n_states; ++s) combos *= static_cast<double>(n_actions);
    if (combos <= 4096.0) {
      ++report.optimality_instances;
      const BruteForceResult best = brute_force_optimal(mdp, psi, alpha, 4096);
      const QTable pi_q = exact_q_solve(mdp, psi, pi.policy, alpha);
      const double pi_value = augmented_start_value(mdp, psi, pi.policy, pi_q, alpha);
      const double value_gap = std::abs(best.value - pi_value);
      report.max_optimality_gap = std::max(report.max_optimality_gap, value_gap);
      if (value_gap > 1e-6) report.optimal_ok = false;
    }
  }
  return report;
}

void print_verification(const VerificationReport& report, std::ostream& out) {
  auto line = [&](bool ok, const std::string& name, const std::string& detail) {
    out << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << detail << ")\n";
  };
  line(report.contraction_ok, "bellman-contraction",
       "max excess " + format_double(report.max_contraction_excess) + " over " +
           std::to_string(report.instances) + " instances");
  line(report.fixed_point_ok, "fixed-point-agreement",
       "max gap " + format_double(report.max_fixed_point_gap));
  line(report.monotone_ok, "monotone-improvement",
       "worst trace step " + format_double(report.worst_monotonicity_drop));
  line(report.optimal_ok, "brute-force-optimality",
       "max value gap " + format_double(report.max_optimality_gap) + " over " +
           std::to_string(report.optimality_instances) + " instances");
}

}  // namespace bac
