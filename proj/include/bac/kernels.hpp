#pragma once

// Dense double-precision kernels behind every network and optimizer update.
// Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant compiled in a separate translation unit. The active set
// is chosen once at runtime from CPU capabilities and can be overridden
// (BAC_KERNELS=scalar|avx2|auto or kernels::select()). Scalar and AVX2
// variants are equivalence-tested against each other; within one process a
// given kernel set is bit-stable.

#include <cstddef>
#include <string>

namespace bac::kernels {

// y = W x + bias; W is row-major rows x cols, bias may be null.
using MatvecBiasFn = void (*)(const double* w, const double* x, const double* bias,
                              double* y, std::size_t rows, std::size_t cols);
// y = W^T g; g has length rows, y has length cols.
using MatvecTFn = void (*)(const double* w, const double* g, double* y,
                           std::size_t rows, std::size_t cols);
// W += g outer x (rank-1 accumulate); g length rows, x length cols.
using RankOneAccFn = void (*)(double* w, const double* g, const double* x,
                              std::size_t rows, std::size_t cols);
// y += a * x
using AxpyFn = void (*)(std::size_t n, double a, const double* x, double* y);
// x *= a
using ScaleFn = void (*)(std::size_t n, double a, double* x);
using DotFn = double (*)(std::size_t n, const double* x, const double* y);
// Fused Adam update with bias correction factors bc1 = 1-beta1^t, bc2 = 1-beta2^t.
using AdamUpdateFn = void (*)(std::size_t n, double* p, double* m, double* v,
                              const double* g, double lr, double beta1, double beta2,
                              double eps, double bc1, double bc2);
// dst = tau * src + (1 - tau) * dst
using PolyakFn = void (*)(std::size_t n, double tau, const double* src, double* dst);
// out = max(pre, 0)
using ReluFn = void (*)(std::size_t n, const double* pre, double* out);
// down = up * (1 - post^2), post = tanh(pre)
using TanhBackwardFn = void (*)(std::size_t n, const double* post, const double* up,
                                double* down);
// down = pre > 0 ? up : 0
using ReluBackwardFn = void (*)(std::size_t n, const double* pre, const double* up,
                                double* down);

struct Ops {
  MatvecBiasFn matvec_bias;
  MatvecTFn matvec_t;
  RankOneAccFn rank_one_acc;
  AxpyFn axpy;
  ScaleFn scale;
  DotFn dot;
  AdamUpdateFn adam_update;
  PolyakFn polyak;
  ReluFn relu;
  TanhBackwardFn tanh_backward;
  ReluBackwardFn relu_backward;
  const char* name;
};

enum class Mode { Auto, Scalar, Avx2 };

// Scalar reference set; always available.
const Ops& scalar_ops();

// True when the running CPU (and OS) support the AVX2+FMA variant.
bool avx2_available();

// AVX2 set; only valid to call through when avx2_available().
const Ops& avx2_ops();

// Active set. First use reads BAC_KERNELS (auto when unset); select()
// overrides. Not safe to call select() concurrently with kernel use.
const Ops& active();
void select(Mode mode);
Mode parse_mode(const std::string& name);

}  // namespace bac::kernels
