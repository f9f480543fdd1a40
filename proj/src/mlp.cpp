#include "bac/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "bac/kernels.hpp"

namespace bac {
namespace {

void apply_activation(Activation act, const std::vector<double>& pre,
                      std::vector<double>& post) {
  const auto& k = kernels::active();
  post.resize(pre.size());
  switch (act) {
    case Activation::Tanh:
      for (std::size_t i = 0; i < pre.size(); ++i) post[i] = std::tanh(pre[i]);
      break;
    case Activation::Relu:
      k.relu(pre.size(), pre.data(), post.data());
      break;
    case Activation::Linear:
      post = pre;
      break;
  }
}

void activation_backward(Activation act, const std::vector<double>& pre,
                         const std::vector<double>& post,
                         const std::vector<double>& up, std::vector<double>& down) {
  const auto& k = kernels::active();
  down.resize(up.size());
  switch (act) {
    case Activation::Tanh:
      k.tanh_backward(up.size(), post.data(), up.data(), down.data());
      break;
    case Activation::Relu:
      k.relu_backward(up.size(), pre.data(), up.data(), down.data());
      break;
    case Activation::Linear:
      down = up;
      break;
  }
}

}  // namespace

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.data.size() + layer.bias.size();
  return n;
}

MlpParams make_mlp(std::span<const std::size_t> widths,
                   std::span<const Activation> activations, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("make_mlp: need at least two widths");
  if (activations.size() != widths.size() - 1)
    throw std::invalid_argument("make_mlp: one activation per layer required");
  MlpParams params;
  params.layers.reserve(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer;
    layer.weight = Matrix(widths[l + 1], widths[l]);
    layer.bias.assign(widths[l + 1], 0.0);
    layer.act = activations[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    for (auto& w : layer.weight.data) w = rng.uniform(-bound, bound);
    for (auto& b : layer.bias) b = rng.uniform(-bound, bound);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

GradientSet zero_gradients(const MlpParams& params) {
  GradientSet grads;
  grads.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    GradientSet::LayerGrad g;
    g.weight = Matrix(layer.weight.rows, layer.weight.cols);
    g.bias.assign(layer.bias.size(), 0.0);
    grads.layers.push_back(std::move(g));
  }
  return grads;
}

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input,
                                ForwardCache* cache) {
  if (params.layers.empty()) throw std::invalid_argument("mlp_forward: empty network");
  if (input.size() != params.input_width())
    throw std::invalid_argument("mlp_forward: input width mismatch");
  const auto& k = kernels::active();

  std::vector<double> current(input.begin(), input.end());
  if (cache) {
    cache->input = current;
    cache->pre.clear();
    cache->post.clear();
    cache->pre.reserve(params.layers.size());
    cache->post.reserve(params.layers.size());
  }
  std::vector<double> pre;
  for (const auto& layer : params.layers) {
    pre.resize(layer.weight.rows);
    k.matvec_bias(layer.weight.data.data(), current.data(), layer.bias.data(),
                  pre.data(), layer.weight.rows, layer.weight.cols);
    std::vector<double> post;
    apply_activation(layer.act, pre, post);
    if (cache) {
      cache->pre.push_back(pre);
      cache->post.push_back(post);
    }
    current = std::move(post);
  }
  if (!all_finite(current)) throw NonFiniteError("mlp_forward: non-finite output");
  return current;
}

BackwardResult mlp_backward(const MlpParams& params, const ForwardCache& cache,
                            std::span<const double> output_gradient) {
  if (cache.pre.size() != params.layers.size() || cache.post.size() != params.layers.size())
    throw std::invalid_argument("mlp_backward: cache does not match network");
  if (output_gradient.size() != params.output_width())
    throw std::invalid_argument("mlp_backward: output gradient width mismatch");
  if (cache.input.size() != params.input_width())
    throw std::invalid_argument("mlp_backward: cached input width mismatch");
  const auto& k = kernels::active();

  BackwardResult result;
  result.grads = zero_gradients(params);

  std::vector<double> up(output_gradient.begin(), output_gradient.end());
  std::vector<double> dpre;
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const Layer& layer = params.layers[li];
    activation_backward(layer.act, cache.pre[li], cache.post[li], up, dpre);

    const std::vector<double>& layer_input = li == 0 ? cache.input : cache.post[li - 1];
    auto& grad = result.grads.layers[li];
    k.rank_one_acc(grad.weight.data.data(), dpre.data(), layer_input.data(),
                   grad.weight.rows, grad.weight.cols);
    grad.bias = dpre;

    std::vector<double> down(layer.weight.cols);
    k.matvec_t(layer.weight.data.data(), dpre.data(), down.data(), layer.weight.rows,
               layer.weight.cols);
    up = std::move(down);
  }
  result.input_gradient = std::move(up);
  return result;
}

void accumulate_gradients(GradientSet& dst, const GradientSet& src, double scale) {
  if (dst.layers.size() != src.layers.size())
    throw std::invalid_argument("accumulate_gradients: layer count mismatch");
  const auto& k = kernels::active();
  for (std::size_t l = 0; l < dst.layers.size(); ++l) {
    auto& d = dst.layers[l];
    const auto& s = src.layers[l];
    if (d.weight.data.size() != s.weight.data.size() || d.bias.size() != s.bias.size())
      throw std::invalid_argument("accumulate_gradients: shape mismatch");
    k.axpy(d.weight.data.size(), scale, s.weight.data.data(), d.weight.data.data());
    k.axpy(d.bias.size(), scale, s.bias.data(), d.bias.data());
  }
}

void scale_gradients(GradientSet& grads, double scale) {
  const auto& k = kernels::active();
  for (auto& layer : grads.layers) {
    k.scale(layer.weight.data.size(), scale, layer.weight.data.data());
    k.scale(layer.bias.size(), scale, layer.bias.data());
  }
}

bool gradients_finite(const GradientSet& grads) {
  for (const auto& layer : grads.layers) {
    if (!all_finite(layer.weight.data) || !all_finite(layer.bias)) return false;
  }
  return true;
}

}  // namespace bac
