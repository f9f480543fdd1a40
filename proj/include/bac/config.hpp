#pragma once

// Experiment configuration and its plain-text key-value format: dotted
// sections, one `key = value` assignment per line, '#' comments.

#include <cstdint>
#include <string>
#include <vector>

#include "bac/agent.hpp"

namespace bac {

struct ExperimentConfig {
  std::string env_name = "deceptive_maze";
  BacConfig agent;
  std::uint64_t total_steps = 100000;
  std::uint64_t eval_every = 5000;
  std::size_t eval_episodes = 15;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out_dir;
  std::string kernel_mode = "auto";
};

// Parses the document, collecting every problem instead of stopping at the
// first. The returned config holds defaults for keys that failed.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         std::vector<std::string>& errors);
ExperimentConfig load_experiment_config(const std::string& path,
                                        std::vector<std::string>& errors);

// Full round trip: parse(serialize(c)) reproduces c exactly (doubles are
// written with 17 significant digits).
std::string serialize_experiment_config(const ExperimentConfig& config);

// Structural validation beyond per-key parsing (positive counts, non-empty
// seed list, known environment). Appends to errors.
void validate_experiment_config(const ExperimentConfig& config,
                                std::vector<std::string>& errors);

// %.17g rendering used everywhere a double must survive a text round trip.
std::string format_double(double value);

}  // namespace bac
