#include "bac/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "bac/kernels.hpp"

namespace bac {

AdamState make_adam_state(const MlpParams& params, double beta1, double beta2,
                          double epsilon) {
  AdamState state;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  state.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    AdamState::LayerMoments moments;
    moments.m_weight.assign(layer.weight.data.size(), 0.0);
    moments.v_weight.assign(layer.weight.data.size(), 0.0);
    moments.m_bias.assign(layer.bias.size(), 0.0);
    moments.v_bias.assign(layer.bias.size(), 0.0);
    state.layers.push_back(std::move(moments));
  }
  return state;
}

void adam_step(MlpParams& params, const GradientSet& grads, AdamState& state,
               double learning_rate) {
  if (grads.layers.size() != params.layers.size() ||
      state.layers.size() != params.layers.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  if (!gradients_finite(grads))
    throw NonFiniteError("adam_step: non-finite gradient entries, update rejected");

  const auto& k = kernels::active();
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    const auto& grad = grads.layers[l];
    auto& moments = state.layers[l];
    if (grad.weight.data.size() != layer.weight.data.size() ||
        grad.bias.size() != layer.bias.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    k.adam_update(layer.weight.data.size(), layer.weight.data.data(),
                  moments.m_weight.data(), moments.v_weight.data(),
                  grad.weight.data.data(), learning_rate, state.beta1, state.beta2,
                  state.epsilon, bc1, bc2);
    k.adam_update(layer.bias.size(), layer.bias.data(), moments.m_bias.data(),
                  moments.v_bias.data(), grad.bias.data(), learning_rate, state.beta1,
                  state.beta2, state.epsilon, bc1, bc2);
  }
}

double global_norm(const GradientSet& grads) {
  const auto& k = kernels::active();
  double sq = 0.0;
  for (const auto& layer : grads.layers) {
    sq += k.dot(layer.weight.data.size(), layer.weight.data.data(),
                layer.weight.data.data());
    sq += k.dot(layer.bias.size(), layer.bias.data(), layer.bias.data());
  }
  return std::sqrt(sq);
}

double global_norm_clip(GradientSet& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("global_norm_clip: max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) scale_gradients(grads, max_norm / norm);
  return norm;
}

}  // namespace bac
