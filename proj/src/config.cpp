#include "bac/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bac {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 0) return false;
    out = static_cast<std::uint64_t>(v);
    return true;
  } catch (...) {
    return false;
  }
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no") {
    out = false;
    return true;
  }
  return false;
}

struct Assignment {
  std::string key, value;
  int line;
};

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

ExperimentConfig parse_experiment_config(const std::string& text,
                                         std::vector<std::string>& errors) {
  ExperimentConfig config;
  std::vector<Assignment> assignments;
  {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
        continue;
      }
      assignments.push_back(
          {trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
    }
  }

  auto fail = [&](const Assignment& a, const std::string& why) {
    errors.push_back(a.key + " (line " + std::to_string(a.line) + "): " + why);
  };

  for (const auto& a : assignments) {
    const std::string& key = a.key;
    const std::string& value = a.value;
    double d;
    std::uint64_t u;
    bool b;

    if (key == "env.name") {
      config.env_name = value;
    } else if (key == "agent.gamma") {
      parse_double(value, d) ? void(config.agent.gamma = d) : fail(a, "expected real");
    } else if (key == "agent.alpha_mode") {
      if (value == "static")
        config.agent.alpha_mode = AlphaMode::Static;
      else if (value == "adaptive")
        config.agent.alpha_mode = AlphaMode::Adaptive;
      else
        fail(a, "expected static|adaptive");
    } else if (key == "agent.alpha") {
      parse_double(value, d) ? void(config.agent.alpha = d) : fail(a, "expected real");
    } else if (key == "agent.tau") {
      parse_double(value, d) ? void(config.agent.tau = d) : fail(a, "expected real");
    } else if (key == "agent.batch_size") {
      parse_u64(value, u) ? void(config.agent.batch_size = u) : fail(a, "expected integer");
    } else if (key == "agent.lr_actor") {
      parse_double(value, d) ? void(config.agent.lr_actor = d) : fail(a, "expected real");
    } else if (key == "agent.lr_critic") {
      parse_double(value, d) ? void(config.agent.lr_critic = d) : fail(a, "expected real");
    } else if (key == "agent.lr_autoencoder") {
      parse_double(value, d) ? void(config.agent.lr_autoencoder = d)
                             : fail(a, "expected real");
    } else if (key == "agent.lr_aux") {
      parse_double(value, d) ? void(config.agent.lr_aux = d) : fail(a, "expected real");
    } else if (key == "agent.actor_grad_clip") {
      if (value == "none")
        config.agent.actor_grad_clip.reset();
      else if (parse_double(value, d))
        config.agent.actor_grad_clip = d;
      else
        fail(a, "expected none or real");
    } else if (key == "agent.critic_grad_clip") {
      if (value == "none")
        config.agent.critic_grad_clip.reset();
      else if (parse_double(value, d))
        config.agent.critic_grad_clip = d;
      else
        fail(a, "expected none or real");
    } else if (key == "agent.policy") {
      if (value == "stochastic")
        config.agent.policy = PolicyType::Stochastic;
      else if (value == "deterministic")
        config.agent.policy = PolicyType::Deterministic;
      else
        fail(a, "expected stochastic|deterministic");
    } else if (key == "agent.det_noise_std") {
      parse_double(value, d) ? void(config.agent.det_noise_std = d)
                             : fail(a, "expected real");
    } else if (key == "agent.use_score_function") {
      parse_bool(value, b) ? void(config.agent.use_score_function = b)
                           : fail(a, "expected bool");
    } else if (key == "agent.adaptive_omega") {
      parse_double(value, d) ? void(config.agent.adaptive_omega = d)
                             : fail(a, "expected real");
    } else if (key == "agent.buffer_capacity") {
      parse_u64(value, u) ? void(config.agent.buffer_capacity = u)
                          : fail(a, "expected integer");
    } else if (key == "agent.updates_per_step") {
      parse_u64(value, u) ? void(config.agent.updates_per_step = u)
                          : fail(a, "expected integer");
    } else if (key == "agent.update_start_steps") {
      parse_u64(value, u) ? void(config.agent.update_start_steps = u)
                          : fail(a, "expected integer");
    } else if (key == "agent.use_raw_psi") {
      parse_bool(value, b) ? void(config.agent.use_raw_psi = b) : fail(a, "expected bool");
    } else if (key == "agent.hidden") {
      std::vector<std::size_t> hidden;
      bool ok = true;
      for (const auto& part : split(value, ',')) {
        if (parse_u64(part, u) && u > 0)
          hidden.push_back(u);
        else
          ok = false;
      }
      if (ok && !hidden.empty())
        config.agent.hidden = std::move(hidden);
      else
        fail(a, "expected comma-separated positive integers");
    } else if (key == "agent.activation") {
      if (value == "relu")
        config.agent.hidden_activation = Activation::Relu;
      else if (value == "tanh")
        config.agent.hidden_activation = Activation::Tanh;
      else
        fail(a, "expected relu|tanh");
    } else if (key == "behavior.enabled") {
      parse_bool(value, b) ? void(config.agent.autoencoder_enabled = b)
                           : fail(a, "expected bool");
    } else if (key == "behavior.update_every_episodes") {
      parse_u64(value, u) ? void(config.agent.ae_update_every_episodes = u)
                          : fail(a, "expected integer");
    } else if (key == "behavior.epochs") {
      parse_u64(value, u) ? void(config.agent.ae_epochs = static_cast<int>(u))
                          : fail(a, "expected integer");
    } else if (key == "behavior.minibatch") {
      parse_u64(value, u) ? void(config.agent.ae_minibatch = static_cast<int>(u))
                          : fail(a, "expected integer");
    } else if (key == "run.total_steps") {
      parse_u64(value, u) ? void(config.total_steps = u) : fail(a, "expected integer");
    } else if (key == "run.eval_every") {
      parse_u64(value, u) ? void(config.eval_every = u) : fail(a, "expected integer");
    } else if (key == "run.eval_episodes") {
      parse_u64(value, u) ? void(config.eval_episodes = u) : fail(a, "expected integer");
    } else if (key == "run.seeds") {
      std::vector<std::uint64_t> seeds;
      bool ok = true;
      for (const auto& part : split(value, ',')) {
        if (parse_u64(part, u))
          seeds.push_back(u);
        else
          ok = false;
      }
      if (ok && !seeds.empty())
        config.seeds = std::move(seeds);
      else
        fail(a, "expected comma-separated integers");
    } else if (key == "run.out_dir") {
      config.out_dir = value;
    } else if (key == "kernels.mode") {
      if (value == "auto" || value == "scalar" || value == "avx2")
        config.kernel_mode = value;
      else
        fail(a, "expected auto|scalar|avx2");
    } else {
      fail(a, "unknown key");
    }
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path,
                                        std::vector<std::string>& errors) {
  std::ifstream in(path);
  if (!in) {
    errors.push_back("cannot open config file: " + path);
    return ExperimentConfig{};
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), errors);
}

std::string serialize_experiment_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "env.name = " << c.env_name << '\n';
  out << "agent.gamma = " << format_double(c.agent.gamma) << '\n';
  out << "agent.alpha_mode = "
      << (c.agent.alpha_mode == AlphaMode::Static ? "static" : "adaptive") << '\n';
  out << "agent.alpha = " << format_double(c.agent.alpha) << '\n';
  out << "agent.tau = " << format_double(c.agent.tau) << '\n';
  out << "agent.batch_size = " << c.agent.batch_size << '\n';
  out << "agent.lr_actor = " << format_double(c.agent.lr_actor) << '\n';
  out << "agent.lr_critic = " << format_double(c.agent.lr_critic) << '\n';
  out << "agent.lr_autoencoder = " << format_double(c.agent.lr_autoencoder) << '\n';
  out << "agent.lr_aux = " << format_double(c.agent.lr_aux) << '\n';
  out << "agent.actor_grad_clip = "
      << (c.agent.actor_grad_clip ? format_double(*c.agent.actor_grad_clip) : "none")
      << '\n';
  out << "agent.critic_grad_clip = "
      << (c.agent.critic_grad_clip ? format_double(*c.agent.critic_grad_clip) : "none")
      << '\n';
  out << "agent.policy = "
      << (c.agent.policy == PolicyType::Stochastic ? "stochastic" : "deterministic")
      << '\n';
  out << "agent.det_noise_std = " << format_double(c.agent.det_noise_std) << '\n';
  out << "agent.use_score_function = " << (c.agent.use_score_function ? "true" : "false")
      << '\n';
  out << "agent.adaptive_omega = " << format_double(c.agent.adaptive_omega) << '\n';
  out << "agent.buffer_capacity = " << c.agent.buffer_capacity << '\n';
  out << "agent.updates_per_step = " << c.agent.updates_per_step << '\n';
  out << "agent.update_start_steps = " << c.agent.update_start_steps << '\n';
  out << "agent.use_raw_psi = " << (c.agent.use_raw_psi ? "true" : "false") << '\n';
  out << "agent.hidden = ";
  for (std::size_t i = 0; i < c.agent.hidden.size(); ++i)
    out << c.agent.hidden[i] << (i + 1 < c.agent.hidden.size() ? "," : "");
  out << '\n';
  out << "agent.activation = "
      << (c.agent.hidden_activation == Activation::Relu ? "relu" : "tanh") << '\n';
  out << "behavior.enabled = " << (c.agent.autoencoder_enabled ? "true" : "false") << '\n';
  out << "behavior.update_every_episodes = " << c.agent.ae_update_every_episodes << '\n';
  out << "behavior.epochs = " << c.agent.ae_epochs << '\n';
  out << "behavior.minibatch = " << c.agent.ae_minibatch << '\n';
  out << "run.total_steps = " << c.total_steps << '\n';
  out << "run.eval_every = " << c.eval_every << '\n';
  out << "run.eval_episodes = " << c.eval_episodes << '\n';
  out << "run.seeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i)
    out << c.seeds[i] << (i + 1 < c.seeds.size() ? "," : "");
  out << '\n';
  out << "run.out_dir = " << c.out_dir << '\n';
  out << "kernels.mode = " << c.kernel_mode << '\n';
  return out.str();
}

void validate_experiment_config(const ExperimentConfig& config,
                                std::vector<std::string>& errors) {
  try {
    make_env(config.env_name);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  try {
    config.agent.validate();
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  if (config.seeds.empty()) errors.push_back("run.seeds: seed list must be non-empty");
  if (config.eval_every == 0) errors.push_back("run.eval_every: must be positive");
  if (config.eval_episodes == 0) errors.push_back("run.eval_episodes: must be positive");
}

}  // namespace bac
