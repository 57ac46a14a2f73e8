#pragma once

// Independent test oracles: dense difference operators, finite differences,
// grid minimization, slope fits. These deliberately avoid the library's own
// fast paths so they can check them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ufw/prng.hpp"
#include "ufw/region.hpp"

namespace oracle {

using ufw::Matrix;
using ufw::Vector;

// Dense D^(r) built from the recursion D^(r+1)_n = D^(1)_{n-r} D^(r)_n by
// explicit matrix products.
inline Matrix dense_diff_matrix(int n, int r) {
  auto first_diff = [](int m) {
    Matrix D = Matrix::Zero(m - 1, m);
    for (int i = 0; i < m - 1; ++i) {
      D(i, i) = 1.0;
      D(i, i + 1) = -1.0;
    }
    return D;
  };
  Matrix D = first_diff(n);
  for (int k = 1; k < r; ++k) D = (first_diff(n - k) * D).eval();
  return D;
}

inline Vector random_vector(ufw::SplitMix64& rng, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline Matrix random_matrix(ufw::SplitMix64& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// Central finite difference of f along direction e at x.
inline double directional_derivative(const std::function<double(const Vector&)>& f,
                                     const Vector& x, const Vector& e, double h = 1e-5) {
  return (f(x + h * e) - f(x - h * e)) / (2.0 * h);
}

// Minimum of phi over a uniform grid on [0, alpha_max].
inline double grid_min(const std::function<double(double)>& phi, double alpha_max,
                       int points = 10000) {
  double best = phi(0.0);
  for (int i = 1; i <= points; ++i) {
    best = std::min(best, phi(alpha_max * static_cast<double>(i) / points));
  }
  return best;
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace oracle
