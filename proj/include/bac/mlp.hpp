#pragma once

// Fixed-topology multilayer perceptrons: forward pass with a replayable
// cache, exact reverse-mode gradients, parameter initialization.

#include <span>
#include <vector>

#include "bac/matrix.hpp"
#include "bac/rng.hpp"

namespace bac {

enum class Activation { Tanh, Relu, Linear };

struct Layer {
  Matrix weight;             // output_width x input_width
  std::vector<double> bias;  // output_width
  Activation act = Activation::Linear;
};

struct MlpParams {
  std::vector<Layer> layers;

  std::size_t input_width() const { return layers.front().weight.cols; }
  std::size_t output_width() const { return layers.back().weight.rows; }
  std::size_t param_count() const;
};

// Shape-congruent gradient holder for an MlpParams.
struct GradientSet {
  struct LayerGrad {
    Matrix weight;
    std::vector<double> bias;
  };
  std::vector<LayerGrad> layers;
};

struct ForwardCache {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // per layer, before activation
  std::vector<std::vector<double>> post;  // per layer, after activation
};

struct BackwardResult {
  GradientSet grads;
  std::vector<double> input_gradient;
};

// Uniform +/- 1/sqrt(fan_in) initialization per layer.
MlpParams make_mlp(std::span<const std::size_t> widths,
                   std::span<const Activation> activations, Rng& rng);

GradientSet zero_gradients(const MlpParams& params);

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input,
                                ForwardCache* cache = nullptr);

// Exact gradients of output . output_gradient with respect to every
// parameter and the input; cache must come from a matching forward pass.
BackwardResult mlp_backward(const MlpParams& params, const ForwardCache& cache,
                            std::span<const double> output_gradient);

// In-place elementwise accumulate: dst += scale * src (shape-congruent).
void accumulate_gradients(GradientSet& dst, const GradientSet& src, double scale = 1.0);
void scale_gradients(GradientSet& grads, double scale);
bool gradients_finite(const GradientSet& grads);

}  // namespace bac
