#include "ufw/synth.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ufw/prng.hpp"
#include "ufw/trendfilter.hpp"

namespace ufw {

namespace {

void fill_normal(Matrix& M, SplitMix64& rng) {
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, j) = rng.normal();
}

// Piece p of `pieces` over indices [0, n): equal base length with the
// remainder spread over the leading pieces.
int piece_of(int index, int n, int pieces) {
  const int base = n / pieces;
  const int extra = n % pieces;
  const int cut = extra * (base + 1);
  if (index < cut) return index / (base + 1);
  return extra + (index - cut) / base;
}

}  // namespace

TrendInstance gen_trend_instance(const TrendGenSpec& spec) {
  if (spec.N < spec.pieces || spec.n < spec.pieces)
    throw std::invalid_argument("trend generator: N and n must be at least `pieces`");
  if (spec.pieces < 2) throw std::invalid_argument("trend generator: need at least 2 pieces");
  if (spec.r != 1 && spec.r != 2)
    throw std::invalid_argument("trend generator: order must be 1 or 2");
  if (spec.r >= spec.n) throw std::invalid_argument("trend generator: order must be < n");
  if (!(spec.snr > 0.0)) throw std::invalid_argument("trend generator: snr must be positive");

  SplitMix64 rng(spec.seed);
  TrendInstance inst;
  inst.spec = spec;

  inst.A.resize(spec.N, spec.n);
  fill_normal(inst.A, rng);

  Vector x = Vector::Zero(spec.n);
  if (spec.r == 1) {
    std::vector<double> level(spec.pieces);
    for (auto& v : level) v = rng.uniform(-0.5, 0.5);
    for (int i = 0; i < spec.n; ++i) x[i] = level[piece_of(i, spec.n, spec.pieces)];
  } else {
    std::vector<double> slope(spec.pieces);
    for (auto& v : slope) v = rng.uniform(-0.5, 0.5);
    x[0] = 0.0;
    for (int i = 1; i < spec.n; ++i)
      x[i] = x[i - 1] + slope[piece_of(i, spec.n, spec.pieces)];
  }
  const double dnorm = apply_diff(spec.r, x).lpNorm<1>();
  if (!(dnorm > 0.0))
    throw std::runtime_error("trend generator: degenerate signal, cannot normalize");
  x /= dnorm;
  inst.x_star = x;
  inst.delta = 1.0;

  Vector Ax = inst.A * x;
  double sigma = 0.0;
  if (std::isfinite(spec.snr)) {
    sigma = std::sqrt(Ax.squaredNorm() / (static_cast<double>(spec.n) * spec.snr));
  }
  inst.b = Ax;
  for (int i = 0; i < spec.N; ++i) inst.b[i] += sigma * rng.normal();
  return inst;
}

MatrixInstance gen_matrix_instance(const MatrixGenSpec& spec) {
  if (spec.m < 1 || spec.n < 1) throw std::invalid_argument("matrix generator: empty shape");
  const int mn_min = std::min(spec.m, spec.n);
  if (spec.r < 1 || spec.r > mn_min || spec.r1 < 1 || spec.r1 > mn_min)
    throw std::invalid_argument("matrix generator: ranks must lie in [1, min(m, n)]");
  if (!(spec.nnzr > 0.0) || spec.nnzr > 1.0)
    throw std::invalid_argument("matrix generator: nnzr must lie in (0, 1]");
  if (!(spec.delta_rel > 0.0))
    throw std::invalid_argument("matrix generator: delta_rel must be positive");
  if (!(spec.snr > 0.0)) throw std::invalid_argument("matrix generator: snr must be positive");

  SplitMix64 rng(spec.seed);
  MatrixInstance inst;
  inst.spec = spec;

  Matrix G(spec.m, spec.r1);
  fill_normal(G, rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  inst.P1 = qr.householderQ() * Matrix::Identity(spec.m, spec.r1);

  Matrix Z(spec.n, spec.r1);
  fill_normal(Z, rng);
  Matrix U(spec.m, spec.r);
  fill_normal(U, rng);
  Matrix V(spec.n, spec.r);
  fill_normal(V, rng);

  Matrix low_rank = U * V.transpose();
  inst.ground_truth = inst.P1 * Z.transpose() + low_rank;

  const double mean = inst.ground_truth.mean();
  const double var_signal =
      (inst.ground_truth.array() - mean).square().sum() / inst.ground_truth.size();
  const double sigma = std::isfinite(spec.snr) ? std::sqrt(var_signal / spec.snr) : 0.0;

  // Distinct uniform sample of ceil(nnzr * m n) row-major positions. The
  // small subtraction keeps non-representable products like 0.3 * 40000 from
  // rounding the count up.
  const long long total = static_cast<long long>(spec.m) * spec.n;
  long long count = static_cast<long long>(
      std::ceil(spec.nnzr * static_cast<double>(total) - 1e-9));
  count = std::clamp<long long>(count, 1, total);
  std::vector<long long> pool(total);
  std::iota(pool.begin(), pool.end(), 0);
  for (long long t = 0; t < count; ++t) {
    const long long j = t + static_cast<long long>(rng.next() % static_cast<std::uint64_t>(total - t));
    std::swap(pool[t], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());

  inst.omega.reserve(count);
  inst.b_omega.resize(count);
  for (long long t = 0; t < count; ++t) {
    const int i = static_cast<int>(pool[t] / spec.n);
    const int j = static_cast<int>(pool[t] % spec.n);
    inst.omega.emplace_back(i, j);
    inst.b_omega[t] = inst.ground_truth(i, j) + sigma * rng.normal();
  }

  Matrix projected = low_rank - inst.P1 * (inst.P1.transpose() * low_rank);
  Eigen::JacobiSVD<Matrix> svd(projected);
  inst.delta = spec.delta_rel * svd.singularValues().sum();
  return inst;
}

}  // namespace ufw
