#include "ufw/nucnorm.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ufw/errors.hpp"
#include "ufw/prng.hpp"

namespace ufw {

namespace {

struct PinvResult {
  Matrix pinv;
  int rank;
};

PinvResult pinv_with_rank(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv[0] > 0.0)) return {Matrix::Zero(M.cols(), M.rows()), 0};
  const double cutoff = static_cast<double>(std::max(M.rows(), M.cols())) * sv[0] * 1e-12;
  Vector inv = Vector::Zero(sv.size());
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) {
      inv[i] = 1.0 / sv[i];
      ++rank;
    }
  }
  return {svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose(), rank};
}

bool is_orthogonal_projection(const Matrix& M) {
  if (M.rows() != M.cols()) return false;
  const double scale = 1.0 + M.norm();
  if ((M - M.transpose()).norm() > 1e-10 * scale) return false;
  return (M * M - M).norm() <= 1e-10 * scale;
}

std::uint64_t content_seed(const Matrix& C) {
  return fnv1a64(C.data(), sizeof(double) * static_cast<std::size_t>(C.size()));
}

std::string point_key(const Matrix& X) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "svd:%016llx",
                static_cast<unsigned long long>(content_seed(X)));
  return buf;
}

SingularPair dense_pair(const Matrix& C, std::uint64_t seed, const Vector* start = nullptr,
                        double value_stag_abs = 0.0) {
  LinearOperator op;
  op.rows = C.rows();
  op.cols = C.cols();
  op.apply = [&C](const Vector& x) -> Vector { return C * x; };
  op.apply_adjoint = [&C](const Vector& x) -> Vector { return C.transpose() * x; };
  return leading_singular_pair(op, 1e-9, 2000, seed, start, value_stag_abs);
}

}  // namespace

Matrix pseudo_inverse(const Matrix& M) {
  if (M.size() == 0) throw std::invalid_argument("pseudo_inverse: empty matrix");
  if (!M.allFinite()) throw std::invalid_argument("pseudo_inverse: non-finite matrix");
  return pinv_with_rank(M).pinv;
}

SingularPair leading_singular_pair(const LinearOperator& op, double tol, int max_iters,
                                   std::uint64_t seed, const Vector* start,
                                   double value_stag_abs) {
  if (op.rows <= 0 || op.cols <= 0)
    throw std::invalid_argument("leading_singular_pair: empty operator");
  if (max_iters < 1) throw std::invalid_argument("leading_singular_pair: max_iters < 1");

  SplitMix64 rng(seed);
  Vector v(op.cols);
  if (start && start->size() == op.cols && start->allFinite() && start->norm() > 0.0) {
    v = *start;
  } else {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    if (v.norm() == 0.0) v.setOnes();
  }
  v.normalize();

  Vector u = Vector::Unit(op.rows, 0);
  double sigma = 0.0;
  double sigma_prev = -1.0;
  int restarts = 0;
  int stagnant = 0;

  for (int it = 0; it < max_iters; ++it) {
    Vector w = op.apply(v);
    sigma = w.norm();
    if (!std::isfinite(sigma))
      throw NumericalError("leading_singular_pair: iteration produced non-finite values");
    if (sigma == 0.0) {
      // v landed in the kernel; redraw a few times before concluding the
      // operator is zero.
      if (++restarts > 3) return {0.0, Vector::Unit(op.rows, 0), Vector::Unit(op.cols, 0)};
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
      if (v.norm() == 0.0) v.setOnes();
      v.normalize();
      continue;
    }
    u = w / sigma;
    Vector z = op.apply_adjoint(u);
    const double resid = (z - sigma * v).norm();
    if (resid <= tol * sigma) return {sigma, u, v};
    // sigma is a monotone Rayleigh estimate; once it stops moving the value
    // is settled even while near-degenerate singular vectors keep mixing.
    // The caller-supplied absolute floor lets an embedding algorithm accept
    // the value as soon as it is accurate enough for its own purposes.
    const double stag_gate = std::max(std::max(tol, 1e-10) * sigma, value_stag_abs);
    if (sigma_prev >= 0.0 && sigma - sigma_prev <= stag_gate) {
      if (++stagnant >= 12) return {sigma, u, v};
    } else {
      stagnant = 0;
    }
    const double zn = z.norm();
    if (zn == 0.0) return {sigma, u, v};
    sigma_prev = sigma;
    v = z / zn;
  }
  // The singular value settles quadratically even when a small spectral gap
  // keeps the vectors mixing; accept a stabilized value, reject a drifting
  // one.
  if (sigma_prev >= 0.0 &&
      std::abs(sigma - sigma_prev) <= std::max(100.0 * tol, 1e-6) * sigma)
    return {sigma, u, v};
  throw NumericalError("leading_singular_pair: no convergence within the iteration cap");
}

SingularPair leading_singular_pair(const Matrix& C, double tol, int max_iters) {
  LinearOperator op;
  op.rows = C.rows();
  op.cols = C.cols();
  op.apply = [&C](const Vector& x) -> Vector { return C * x; };
  op.apply_adjoint = [&C](const Vector& x) -> Vector { return C.transpose() * x; };
  return leading_singular_pair(op, tol, max_iters, content_seed(C));
}

GenNucNormRegion::GenNucNormRegion(int m, int n, double delta, int subspace_dim,
                                   bool projection_flag, std::variant<DenseOps, FactoredOps> ops)
    : DecomposedRegion(m * n, subspace_dim, delta),
      m_(m),
      n_(n),
      projection_flag_(projection_flag),
      ops_(std::move(ops)) {}

GenNucNormRegion GenNucNormRegion::build_dense(const Matrix& P, const Matrix& Q, double delta) {
  if (P.size() == 0 || Q.size() == 0)
    throw std::invalid_argument("nuclear-norm region: empty P or Q");
  if (!P.allFinite() || !Q.allFinite())
    throw std::invalid_argument("nuclear-norm region: non-finite P or Q");
  const int m = static_cast<int>(P.cols());
  const int n = static_cast<int>(Q.rows());

  DenseOps ops;
  ops.P = P;
  ops.Q = Q;
  int rank_p, rank_q;
  const bool p_proj = is_orthogonal_projection(P);
  const bool q_proj = is_orthogonal_projection(Q);
  if (p_proj) {
    ops.Pplus = P;
    rank_p = static_cast<int>(std::lround(P.trace()));
  } else {
    auto r = pinv_with_rank(P);
    ops.Pplus = std::move(r.pinv);
    rank_p = r.rank;
  }
  if (q_proj) {
    ops.Qplus = Q;
    rank_q = static_cast<int>(std::lround(Q.trace()));
  } else {
    auto r = pinv_with_rank(Q);
    ops.Qplus = std::move(r.pinv);
    rank_q = r.rank;
  }
  ops.PplusP = ops.Pplus * P;
  ops.QQplus = Q * ops.Qplus;

  const int sdim = m * n - rank_p * rank_q;
  return GenNucNormRegion(m, n, delta, sdim, p_proj && q_proj, std::move(ops));
}

GenNucNormRegion::GenNucNormRegion(const Matrix& P, const Matrix& Q, double delta)
    : GenNucNormRegion(build_dense(P, Q, delta)) {}

GenNucNormRegion GenNucNormRegion::with_side_information(Matrix P1, int cols, double delta) {
  if (P1.rows() <= 0 || cols <= 0)
    throw std::invalid_argument("nuclear-norm region: empty shape");
  if (!P1.allFinite()) throw std::invalid_argument("nuclear-norm region: non-finite P1");
  const int m = static_cast<int>(P1.rows());
  const int r1 = static_cast<int>(P1.cols());
  if (r1 > m) throw std::invalid_argument("nuclear-norm region: P1 has more columns than rows");
  if ((P1.transpose() * P1 - Matrix::Identity(r1, r1)).norm() > 1e-8 * (1.0 + std::sqrt(r1)))
    throw std::invalid_argument("nuclear-norm region: P1 columns are not orthonormal");
  const int sdim = m * cols - (m - r1) * cols;
  return GenNucNormRegion(m, cols, delta, sdim, true, FactoredOps{std::move(P1)});
}

Matrix GenNucNormRegion::project_complement_matrix(const Matrix& X) const {
  if (X.rows() != m_ || X.cols() != n_)
    throw std::invalid_argument("nuclear-norm region: matrix shape mismatch");
  if (const auto* f = std::get_if<FactoredOps>(&ops_)) {
    return X - f->P1 * (f->P1.transpose() * X);
  }
  const auto& d = std::get<DenseOps>(ops_);
  return d.PplusP * X * d.QQplus;
}

Matrix GenNucNormRegion::project_subspace_matrix(const Matrix& X) const {
  return X - project_complement_matrix(X);
}

Matrix GenNucNormRegion::lmo_matrix(const Matrix& C) const {
  return lmo_matrix_impl(C, nullptr, nullptr, 0.0);
}

Matrix GenNucNormRegion::lmo_matrix_impl(const Matrix& C, const Vector* start,
                                         Vector* v_used, double value_tolerance) const {
  // The oracle value is -delta * sigma1, so a tolerance on the value maps to
  // sigma drift; /25 leaves room for the tail of the stagnating sweep.
  const double stag_abs = value_tolerance > 0.0 ? value_tolerance / (delta() * 25.0) : 0.0;
  if (C.rows() != m_ || C.cols() != n_)
    throw std::invalid_argument("nuclear-norm lmo: matrix shape mismatch");
  if (!C.allFinite()) throw std::invalid_argument("nuclear-norm lmo: non-finite input");
  const std::uint64_t seed = content_seed(C);

  if (const auto* f = std::get_if<FactoredOps>(&ops_)) {
    const Matrix& P1 = f->P1;
    // Transformed gradient (I - P1 P1^T) C, applied matrix-free. A truly
    // sparse gradient keeps each matvec at O(nnz + (m+n) r1); at moderate
    // densities the materialized C-bar with dense matvecs is faster.
    const Eigen::Index nnz = (C.array() != 0.0).count();
    SingularPair pair;
    if (nnz * 20 <= C.size()) {
      Eigen::SparseMatrix<double> Cs(m_, n_);
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(static_cast<std::size_t>(nnz));
      for (int j = 0; j < n_; ++j)
        for (int i = 0; i < m_; ++i)
          if (C(i, j) != 0.0) trip.emplace_back(i, j, C(i, j));
      Cs.setFromTriplets(trip.begin(), trip.end());
      Matrix M1 = P1.transpose() * Cs;  // r1 x n
      LinearOperator op;
      op.rows = m_;
      op.cols = n_;
      op.apply = [&](const Vector& x) -> Vector { return Cs * x - P1 * (M1 * x); };
      op.apply_adjoint = [&](const Vector& x) -> Vector {
        return Vector(Cs.transpose() * x) - M1.transpose() * (P1.transpose() * x);
      };
      pair = leading_singular_pair(op, 1e-9, 2000, seed, start, stag_abs);
    } else {
      Matrix Cbar = C - P1 * (P1.transpose() * C);
      LinearOperator op;
      op.rows = m_;
      op.cols = n_;
      op.apply = [&](const Vector& x) -> Vector { return Cbar * x; };
      op.apply_adjoint = [&](const Vector& x) -> Vector { return Cbar.transpose() * x; };
      pair = leading_singular_pair(op, 1e-9, 2000, seed, start, stag_abs);
    }
    if (v_used && pair.sigma1 > 0.0) *v_used = pair.v1;
    if (pair.sigma1 == 0.0) return Matrix::Zero(m_, n_);
    return (-delta()) * pair.u1 * pair.v1.transpose();
  }

  const auto& d = std::get<DenseOps>(ops_);
  if (projection_flag_) {
    Matrix Cbar = d.P * C * d.Q;
    SingularPair pair = dense_pair(Cbar, seed, start, stag_abs);
    if (v_used && pair.sigma1 > 0.0) *v_used = pair.v1;
    if (pair.sigma1 == 0.0) return Matrix::Zero(m_, n_);
    return (-delta()) * pair.u1 * pair.v1.transpose();
  }
  Matrix Cbar = d.Pplus.transpose() * C * d.Qplus.transpose();  // k x l
  SingularPair pair = dense_pair(Cbar, seed, start, stag_abs);
  if (v_used && pair.sigma1 > 0.0) *v_used = pair.v1;
  if (pair.sigma1 == 0.0) return Matrix::Zero(m_, n_);
  Vector a = d.Pplus * pair.u1;
  Vector b = d.Qplus.transpose() * pair.v1;
  return (-delta()) * a * b.transpose();
}

Vector GenNucNormRegion::project_subspace(const Vector& x) const {
  check_dim(x);
  Eigen::Map<const Matrix> X(x.data(), m_, n_);
  Matrix R = X - project_complement_matrix(X);
  return Eigen::Map<const Vector>(R.data(), R.size());
}

Vector GenNucNormRegion::project_complement(const Vector& x) const {
  check_dim(x);
  Eigen::Map<const Matrix> X(x.data(), m_, n_);
  Matrix R = project_complement_matrix(X);
  return Eigen::Map<const Vector>(R.data(), R.size());
}

VertexHandle GenNucNormRegion::lmo(const Vector& c) const {
  check_dim(c);
  Eigen::Map<const Matrix> C(c.data(), m_, n_);
  Matrix X = lmo_matrix_impl(C, nullptr, nullptr, 0.0);
  VertexHandle h;
  h.key = point_key(X);
  h.point = Eigen::Map<const Vector>(X.data(), X.size());
  return h;
}

VertexHandle GenNucNormRegion::lmo(const Vector& c, LmoContext& ctx) const {
  check_dim(c);
  Eigen::Map<const Matrix> C(c.data(), m_, n_);
  const Vector* start = ctx.start_hint.size() > 0 ? &ctx.start_hint : nullptr;
  Vector v_used;
  Matrix X = lmo_matrix_impl(C, start, &v_used, ctx.value_tolerance);
  if (v_used.size() > 0) ctx.start_hint = std::move(v_used);
  ++ctx.call_index;
  VertexHandle h;
  h.key = point_key(X);
  h.point = Eigen::Map<const Vector>(X.data(), X.size());
  return h;
}

}  // namespace ufw
