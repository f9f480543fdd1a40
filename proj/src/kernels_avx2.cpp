// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 only; callers must gate on avx2_available().

#include "bac/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace bac::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

void matvec_bias_avx2(const double* w, const double* x, const double* bias,
                      double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 8 <= cols; c += 8) {
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(x + c), acc0);
      acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(row + c + 4), _mm256_loadu_pd(x + c + 4), acc1);
    }
    for (; c + 4 <= cols; c += 4) {
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(x + c), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; c < cols; ++c) acc += row[c] * x[c];
    y[r] = bias ? acc + bias[r] : acc;
  }
}

void matvec_t_avx2(const double* w, const double* g, double* y,
                   std::size_t rows, std::size_t cols) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) _mm256_storeu_pd(y + c, _mm256_setzero_pd());
  for (; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    const __m256d gr = _mm256_set1_pd(g[r]);
    c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d acc = _mm256_fmadd_pd(gr, _mm256_loadu_pd(row + c), _mm256_loadu_pd(y + c));
      _mm256_storeu_pd(y + c, acc);
    }
    for (; c < cols; ++c) y[c] += g[r] * row[c];
  }
}

void rank_one_acc_avx2(double* w, const double* g, const double* x,
                       std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = w + r * cols;
    const __m256d gr = _mm256_set1_pd(g[r]);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d acc = _mm256_fmadd_pd(gr, _mm256_loadu_pd(x + c), _mm256_loadu_pd(row + c));
      _mm256_storeu_pd(row + c, acc);
    }
    for (; c < cols; ++c) row[c] += g[r] * x[c];
  }
}

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(std::size_t n, double a, double* x) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void adam_update_avx2(std::size_t n, double* p, double* m, double* v,
                      const double* g, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d lrv = _mm256_set1_pd(lr);
  const __m256d epsv = _mm256_set1_pd(eps);
  const __m256d ibc1 = _mm256_set1_pd(1.0 / bc1);
  const __m256d ibc2 = _mm256_set1_pd(1.0 / bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(omb1, gi));
    __m256d vi = _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i),
                                 _mm256_mul_pd(omb2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_mul_pd(mi, ibc1);
    const __m256d vhat = _mm256_mul_pd(vi, ibc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lrv, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] * (1.0 / bc1);
    const double vhat = v[i] * (1.0 / bc2);
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void polyak_avx2(std::size_t n, double tau, const double* src, double* dst) {
  const __m256d tv = _mm256_set1_pd(tau);
  const __m256d omt = _mm256_set1_pd(1.0 - tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_fmadd_pd(tv, _mm256_loadu_pd(src + i),
                                  _mm256_mul_pd(omt, _mm256_loadu_pd(dst + i)));
    _mm256_storeu_pd(dst + i, acc);
  }
  for (; i < n; ++i) dst[i] = tau * src[i] + (1.0 - tau) * dst[i];
}

void relu_avx2(std::size_t n, const double* pre, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(pre + i), zero));
  }
  for (; i < n; ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
}

void tanh_backward_avx2(std::size_t n, const double* post, const double* up,
                        double* down) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_loadu_pd(post + i);
    const __m256d d = _mm256_fnmadd_pd(t, t, one);
    _mm256_storeu_pd(down + i, _mm256_mul_pd(_mm256_loadu_pd(up + i), d));
  }
  for (; i < n; ++i) down[i] = up[i] * (1.0 - post[i] * post[i]);
}

void relu_backward_avx2(std::size_t n, const double* pre, const double* up,
                        double* down) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(down + i, _mm256_and_pd(mask, _mm256_loadu_pd(up + i)));
  }
  for (; i < n; ++i) down[i] = pre[i] > 0.0 ? up[i] : 0.0;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops{
      matvec_bias_avx2, matvec_t_avx2, rank_one_acc_avx2, axpy_avx2,
      scale_avx2,       dot_avx2,      adam_update_avx2,  polyak_avx2,
      relu_avx2,        tanh_backward_avx2, relu_backward_avx2, "avx2"};
  return ops;
}

}  // namespace bac::kernels

#else

namespace bac::kernels {

const Ops& avx2_ops() { return scalar_ops(); }

}  // namespace bac::kernels

#endif
