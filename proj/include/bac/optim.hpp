#pragma once

// Adam with bias correction and joint L2 gradient clipping.

#include <cstdint>
#include <vector>

#include "bac/mlp.hpp"

namespace bac {

struct AdamState {
  struct LayerMoments {
    std::vector<double> m_weight, v_weight;
    std::vector<double> m_bias, v_bias;
  };
  std::vector<LayerMoments> layers;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const MlpParams& params, double beta1 = 0.9,
                          double beta2 = 0.999, double epsilon = 1e-8);

// One Adam update in place; increments state.step by exactly 1.
// Throws NonFiniteError on non-finite gradient entries (parameters untouched).
void adam_step(MlpParams& params, const GradientSet& grads, AdamState& state,
               double learning_rate);

// L2 norm over every entry of the set.
double global_norm(const GradientSet& grads);

// Rescales all entries so the joint L2 norm is at most max_norm.
// Returns the pre-clip norm. max_norm must be positive.
double global_norm_clip(GradientSet& grads, double max_norm);

}  // namespace bac
