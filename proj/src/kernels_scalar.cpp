#include "bac/kernels.hpp"

#include <cmath>

namespace bac::kernels {
namespace {

void matvec_bias_scalar(const double* w, const double* x, const double* bias,
                        double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = bias ? acc + bias[r] : acc;
  }
}

void matvec_t_scalar(const double* w, const double* g, double* y,
                     std::size_t rows, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) y[c] += gr * row[c];
  }
}

void rank_one_acc_scalar(double* w, const double* g, const double* x,
                         std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = w + r * cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(std::size_t n, double a, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void adam_update_scalar(std::size_t n, double* p, double* m, double* v,
                        const double* g, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void polyak_scalar(std::size_t n, double tau, const double* src, double* dst) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = tau * src[i] + (1.0 - tau) * dst[i];
}

void relu_scalar(std::size_t n, const double* pre, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
}

void tanh_backward_scalar(std::size_t n, const double* post, const double* up,
                          double* down) {
  for (std::size_t i = 0; i < n; ++i) down[i] = up[i] * (1.0 - post[i] * post[i]);
}

void relu_backward_scalar(std::size_t n, const double* pre, const double* up,
                          double* down) {
  for (std::size_t i = 0; i < n; ++i) down[i] = pre[i] > 0.0 ? up[i] : 0.0;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{
      matvec_bias_scalar, matvec_t_scalar, rank_one_acc_scalar, axpy_scalar,
      scale_scalar,       dot_scalar,      adam_update_scalar,  polyak_scalar,
      relu_scalar,        tanh_backward_scalar, relu_backward_scalar, "scalar"};
  return ops;
}

}  // namespace bac::kernels
