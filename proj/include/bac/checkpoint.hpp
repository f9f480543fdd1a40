#pragma once

// Versioned binary checkpoint: config text, environment snapshot, every
// network and optimizer, behavior normalization, RNG state, loop counters,
// and (optionally) the replay buffer contents. Loading with the buffer
// included resumes training bit-for-bit.

#include <memory>
#include <string>

#include "bac/agent.hpp"
#include "bac/config.hpp"
#include "bac/env.hpp"

namespace bac {

void save_checkpoint(const BacAgent& agent, const Env& env,
                     const ExperimentConfig& config, const std::string& path,
                     bool include_buffer = false);

struct LoadedCheckpoint {
  ExperimentConfig config;
  std::unique_ptr<Env> env;
  std::unique_ptr<BacAgent> agent;
  bool buffer_included = false;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace bac
