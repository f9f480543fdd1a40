// Command-line front end: train / eval / plot / verify / sweep.
// Errors print a single machine-parseable "error: ..." line and exit
// nonzero (2 for configuration problems, 1 for runtime failures).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bac/checkpoint.hpp"
#include "bac/config.hpp"
#include "bac/harness.hpp"
#include "bac/kernels.hpp"

namespace {

int fail_config(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "error: config: " << e << '\n';
  return 2;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_train(const std::string& config_path, long long seed_override,
              const std::string& out_override) {
  std::vector<std::string> errors;
  bac::ExperimentConfig config = bac::load_experiment_config(config_path, errors);
  if (seed_override >= 0)
    config.seeds = {static_cast<std::uint64_t>(seed_override)};
  if (!out_override.empty()) config.out_dir = out_override;
  bac::validate_experiment_config(config, errors);
  if (!errors.empty()) return fail_config(errors);

  const bac::RunLog log = bac::run_experiment(config);
  const bac::Summary summary = bac::summarize(log);
  std::cout << "seeds: " << config.seeds.size() << ", rows: " << log.rows.size()
            << '\n';
  std::cout << "max average return: " << bac::format_double(summary.max_mean_return)
            << " +/- " << bac::format_double(summary.return_std) << " at step "
            << summary.step << '\n';
  if (!config.out_dir.empty())
    std::cout << "log: " << config.out_dir << "/runlog.csv" << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, std::size_t episodes) {
  bac::LoadedCheckpoint loaded = bac::load_checkpoint(checkpoint_path);
  bac::kernels::select(bac::kernels::parse_mode(loaded.config.kernel_mode));
  const bac::EvalResult result =
      bac::evaluate_agent(*loaded.agent, loaded.config.env_name, episodes,
                          loaded.config.seeds.empty() ? 0 : loaded.config.seeds.front(),
                          /*eval_index=*/0xe);
  std::cout << "episodes: " << episodes << '\n';
  std::cout << "mean return: " << bac::format_double(result.mean_return) << " +/- "
            << bac::format_double(result.return_std) << '\n';
  std::cout << "mean psi_bar: " << bac::format_double(result.mean_psi_bar) << '\n';
  return 0;
}

int cmd_plot(const std::vector<std::string>& log_paths, const std::string& out_path) {
  std::vector<bac::NamedLog> logs;
  for (const auto& path : log_paths) {
    bac::NamedLog named;
    named.label = std::filesystem::path(path).stem().string();
    if (named.label == "runlog") {
      const auto parent = std::filesystem::path(path).parent_path().filename().string();
      if (!parent.empty()) named.label = parent;
    }
    named.log = bac::load_runlog(path);
    logs.push_back(std::move(named));
  }
  bac::emit_plot(logs, out_path);
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

int cmd_verify(std::size_t instances, std::uint64_t seed) {
  const bac::VerificationReport report = bac::verify_propositions(instances, seed);
  bac::print_verification(report, std::cout);
  return report.all_ok() ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values, const std::string& out_dir) {
  const std::string base_text = read_file(config_path);
  std::stringstream ss(values);
  std::string value;
  while (std::getline(ss, value, ',')) {
    const std::string run_dir = out_dir + "/" + param + "=" + value;
    std::string text = base_text;
    text += "\n" + param + " = " + value + "\n";
    text += "run.out_dir = " + run_dir + "\n";
    std::vector<std::string> errors;
    bac::ExperimentConfig config = bac::parse_experiment_config(text, errors);
    bac::validate_experiment_config(config, errors);
    if (!errors.empty()) return fail_config(errors);
    std::cout << "sweep " << param << " = " << value << '\n';
    const bac::RunLog log = bac::run_experiment(config);
    const bac::Summary summary = bac::summarize(log);
    std::cout << "  max average return: "
              << bac::format_double(summary.max_mean_return) << " +/- "
              << bac::format_double(summary.return_std) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behavior-guided actor-critic experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path, plot_out, param, values;
  std::vector<std::string> log_paths;
  long long seed_override = -1;
  std::size_t episodes = 15;
  std::size_t instances = 60;
  std::uint64_t verify_seed = 20240901;

  auto* train = app.add_subcommand("train", "train per experiment config");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--seed", seed_override, "override run.seeds with one seed");
  train->add_option("--out", out_dir, "override run.out_dir");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes");

  auto* plot = app.add_subcommand("plot", "render learning curves to SVG");
  plot->add_option("--log", log_paths, "runlog.csv paths (one per configuration)")
      ->required()
      ->expected(-1);
  plot->add_option("--out", plot_out, "output SVG path")->required();

  auto* verify = app.add_subcommand("verify", "run the finite-MDP proposition suite");
  verify->add_option("--instances", instances, "random MDP instances");
  verify->add_option("--seed", verify_seed, "suite seed");

  auto* sweep = app.add_subcommand("sweep", "train across values of one config key");
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--param", param, "config key to vary")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--out", out_dir, "output root directory")->default_val("sweep_out");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) return cmd_train(config_path, seed_override, out_dir);
    if (app.got_subcommand(eval)) return cmd_eval(checkpoint_path, episodes);
    if (app.got_subcommand(plot)) return cmd_plot(log_paths, plot_out);
    if (app.got_subcommand(verify)) return cmd_verify(instances, verify_seed);
    if (app.got_subcommand(sweep)) return cmd_sweep(config_path, param, values, out_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
