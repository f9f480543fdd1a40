#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bac/kernels.hpp"
#include "bac/rng.hpp"

using namespace bac;
using kernels::Ops;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

bool close(double a, double b, double tol = 1e-11) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

bool close_all(const std::vector<double>& a, const std::vector<double>& b,
               double tol = 1e-11) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!close(a[i], b[i], tol)) return false;
  return true;
}

// Runs one equivalence check between the scalar set and another set across
// odd sizes so both the vector body and the scalar tail are exercised.
void check_pairwise(const Ops& a, const Ops& b) {
  Rng rng(20240611);
  for (std::size_t rows : {1u, 3u, 7u, 16u, 33u}) {
    for (std::size_t cols : {1u, 2u, 5u, 17u, 64u}) {
      auto w = random_vec(rng, rows * cols);
      auto x = random_vec(rng, cols);
      auto g = random_vec(rng, rows);
      auto bias = random_vec(rng, rows);

      std::vector<double> ya(rows), yb(rows);
      a.matvec_bias(w.data(), x.data(), bias.data(), ya.data(), rows, cols);
      b.matvec_bias(w.data(), x.data(), bias.data(), yb.data(), rows, cols);
      CHECK(close_all(ya, yb));

      a.matvec_bias(w.data(), x.data(), nullptr, ya.data(), rows, cols);
      b.matvec_bias(w.data(), x.data(), nullptr, yb.data(), rows, cols);
      CHECK(close_all(ya, yb));

      std::vector<double> ta(cols), tb(cols);
      a.matvec_t(w.data(), g.data(), ta.data(), rows, cols);
      b.matvec_t(w.data(), g.data(), tb.data(), rows, cols);
      CHECK(close_all(ta, tb));

      auto wa = w, wb = w;
      a.rank_one_acc(wa.data(), g.data(), x.data(), rows, cols);
      b.rank_one_acc(wb.data(), g.data(), x.data(), rows, cols);
      CHECK(close_all(wa, wb));
    }
  }
  for (std::size_t n : {1u, 4u, 5u, 31u, 128u, 1001u}) {
    auto x = random_vec(rng, n);
    auto y = random_vec(rng, n);
    const double alpha = rng.uniform(-2.0, 2.0);

    auto ya = y, yb = y;
    a.axpy(n, alpha, x.data(), ya.data());
    b.axpy(n, alpha, x.data(), yb.data());
    CHECK(close_all(ya, yb));

    auto xa = x, xb = x;
    a.scale(n, alpha, xa.data());
    b.scale(n, alpha, xb.data());
    CHECK(close_all(xa, xb));

    CHECK(close(a.dot(n, x.data(), y.data()), b.dot(n, x.data(), y.data())));

    auto pa = x, pb = x;
    auto ma = random_vec(rng, n, 0.1), va = random_vec(rng, n, 0.0);
    for (auto& e : va) e = std::abs(e) + 0.01;
    auto mb = ma, vb = va;
    auto grad = random_vec(rng, n);
    a.adam_update(n, pa.data(), ma.data(), va.data(), grad.data(), 1e-3, 0.9, 0.999,
                  1e-8, 0.1, 0.001);
    b.adam_update(n, pb.data(), mb.data(), vb.data(), grad.data(), 1e-3, 0.9, 0.999,
                  1e-8, 0.1, 0.001);
    CHECK(close_all(pa, pb));
    CHECK(close_all(ma, mb));
    CHECK(close_all(va, vb));

    auto da = y, db = y;
    a.polyak(n, 0.125, x.data(), da.data());
    b.polyak(n, 0.125, x.data(), db.data());
    CHECK(close_all(da, db));

    std::vector<double> ra(n), rb(n);
    a.relu(n, x.data(), ra.data());
    b.relu(n, x.data(), rb.data());
    CHECK(ra == rb);

    auto post = random_vec(rng, n, 0.99);
    a.tanh_backward(n, post.data(), y.data(), ra.data());
    b.tanh_backward(n, post.data(), y.data(), rb.data());
    CHECK(close_all(ra, rb));

    a.relu_backward(n, x.data(), y.data(), ra.data());
    b.relu_backward(n, x.data(), y.data(), rb.data());
    CHECK(ra == rb);
  }
}

}  // namespace

TEST_CASE("scalar reference kernels: hand-checked values") {
  const auto& k = kernels::scalar_ops();
  // 2x2 identity times (3,-1)
  std::vector<double> w = {1, 0, 0, 1};
  std::vector<double> x = {3, -1};
  std::vector<double> y(2);
  k.matvec_bias(w.data(), x.data(), nullptr, y.data(), 2, 2);
  CHECK(y == std::vector<double>{3, -1});

  // [[1,2],[3,4]] times (1,1) + bias (10,20)
  w = {1, 2, 3, 4};
  std::vector<double> bias = {10, 20};
  x = {1, 1};
  k.matvec_bias(w.data(), x.data(), bias.data(), y.data(), 2, 2);
  CHECK(y == std::vector<double>{13, 27});

  // transpose product: W^T g with g=(1,1) -> column sums (4,6)
  std::vector<double> t(2);
  std::vector<double> g = {1, 1};
  k.matvec_t(w.data(), g.data(), t.data(), 2, 2);
  CHECK(t == std::vector<double>{4, 6});

  CHECK(k.dot(2, x.data(), g.data()) == 2.0);
}

TEST_CASE("dispatch honors explicit selection") {
  kernels::select(kernels::Mode::Scalar);
  CHECK(std::string(kernels::active().name) == "scalar");
  if (kernels::avx2_available()) {
    kernels::select(kernels::Mode::Avx2);
    CHECK(std::string(kernels::active().name) == "avx2");
  } else {
    CHECK_THROWS(kernels::select(kernels::Mode::Avx2));
  }
  kernels::select(kernels::Mode::Auto);
}

TEST_CASE("avx2 kernels match scalar reference") {
  if (!kernels::avx2_available()) return;
  check_pairwise(kernels::scalar_ops(), kernels::avx2_ops());
}

TEST_CASE("parse_mode round trip and rejection") {
  CHECK(kernels::parse_mode("auto") == kernels::Mode::Auto);
  CHECK(kernels::parse_mode("scalar") == kernels::Mode::Scalar);
  CHECK(kernels::parse_mode("avx2") == kernels::Mode::Avx2);
  CHECK_THROWS_AS(kernels::parse_mode("sse9"), std::invalid_argument);
}
