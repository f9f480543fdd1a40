#pragma once

// Central finite-difference gradient estimate for a scalar-valued black box.

#include <functional>
#include <span>
#include <vector>

namespace bac {

inline std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double original = point[i];
    point[i] = original + h;
    const double plus = f(point);
    point[i] = original - h;
    const double minus = f(point);
    point[i] = original;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

}  // namespace bac
