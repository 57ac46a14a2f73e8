#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ufw/region.hpp"

namespace ufw {

/// Generator spec for least-squares trend-filter instances. snr may be
/// +infinity, which selects the noiseless path.
struct TrendGenSpec {
  int N = 0;           // rows of the design matrix
  int n = 0;           // signal length
  int r = 1;           // difference order, 1 (piecewise constant) or 2 (piecewise linear)
  double snr = 1.0;    // ||A x*||^2 / (n sigma^2)
  int pieces = 5;
  std::uint64_t seed = 0;
};

struct TrendInstance {
  TrendGenSpec spec;
  Matrix A;
  Vector b;
  Vector x_star;
  double delta = 1.0;  // ||D^(r) x*||_1 after normalization
};

/// Generator spec for masked matrix-completion instances with column side
/// information.
struct MatrixGenSpec {
  int m = 0, n = 0;
  int r = 0;             // rank of the hidden low-rank part
  int r1 = 0;            // columns of the known side-information basis
  double snr = 1.0;      // entrywise signal variance over noise variance
  double nnzr = 1.0;     // observed fraction in (0, 1]
  double delta_rel = 1.0;  // delta relative to the projected low-rank part
  std::uint64_t seed = 0;
};

struct MatrixInstance {
  MatrixGenSpec spec;
  std::vector<std::pair<int, int>> omega;  // observed coordinates, sorted row-major
  Vector b_omega;                          // observed values, same order
  Matrix P1;                               // orthonormal side-information basis
  Matrix ground_truth;                     // noiseless signal P1 Z^T + U V^T
  double delta = 0.0;
};

/// Draws, in pinned order: the design matrix (column-major), the piece
/// values/slopes, then the noise. The signal is piecewise constant (r=1) or
/// continuous piecewise linear starting at 0 (r=2) over `pieces` equal-length
/// pieces, scaled so that ||D^(r) x*||_1 = 1; the noise variance solves
/// snr = ||A x*||^2 / (n sigma^2). Identical specs give bit-identical
/// instances.
TrendInstance gen_trend_instance(const TrendGenSpec& spec);

/// Draws, in pinned order: the basis seed matrix (column-major), Z, U, V, the
/// observation mask, then noise per observed entry in row-major order. The
/// mask holds exactly ceil(nnzr * m * n) distinct entries; delta equals
/// delta_rel times the nuclear norm of (I - P1 P1^T) U V^T. Identical specs
/// give bit-identical instances.
MatrixInstance gen_matrix_instance(const MatrixGenSpec& spec);

}  // namespace ufw
