#pragma once

#include <cstdint>
#include <functional>
#include <variant>

#include "ufw/region.hpp"

namespace ufw {

/// Moore-Penrose pseudoinverse via full SVD with singular values below
/// max(rows, cols) * sigma_1 * 1e-12 treated as zero. A zero matrix maps to
/// the zero matrix of transposed shape.
Matrix pseudo_inverse(const Matrix& M);

struct SingularPair {
  double sigma1 = 0.0;
  Vector u1;  // unit left singular vector
  Vector v1;  // unit right singular vector
};

/// Matrix-free linear map, so power iteration can exploit sparse or factored
/// operands.
struct LinearOperator {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::function<Vector(const Vector&)> apply;          // M v
  std::function<Vector(const Vector&)> apply_adjoint;  // M^T u
};

/// Leading singular triple by power iteration on M^T M with a seeded random
/// start (or a caller-supplied warm start). Converges when the pair residual
/// ||M^T u - sigma v|| drops below tol * sigma. Hitting max_iters is accepted
/// as long as the sigma estimate has stabilized: a tiny spectral gap keeps
/// the singular vectors mixing for a long time while sigma itself settles
/// quadratically; a sigma estimate still drifting at the cap raises the
/// numerical-failure error. A zero operator yields sigma1 = 0.
SingularPair leading_singular_pair(const LinearOperator& op, double tol = 1e-9,
                                   int max_iters = 2000, std::uint64_t seed = 0x9d2c5680u,
                                   const Vector* start = nullptr,
                                   double value_stag_abs = 0.0);
/// Dense convenience overload; the start seed is derived from the matrix
/// content, so equal inputs give bit-equal outputs.
SingularPair leading_singular_pair(const Matrix& C, double tol = 1e-9, int max_iters = 2000);

/// Feasible region of the generalized nuclear-norm constraint
/// ||P X Q||_* <= delta over m x n matrices. The subspace T is the kernel of
/// X -> P X Q; its complement projection is P+ P X Q Q+ with Moore-Penrose
/// inverses P+, Q+. The oracle solution is the rank-one matrix
/// -delta P+ u1 v1^T Q+ built from the leading singular pair of
/// (P+)^T C (Q+)^T.
///
/// When P and Q are themselves orthogonal projections the pseudoinverses
/// coincide with the matrices and the oracle reduces to -delta u1 v1^T with
/// the pair taken from P C Q (projection fast path). The bounded set S is a
/// continuum here, so vertex keys are serialization sentinels and the
/// away-step solver refuses this region.
///
/// Vectors cross the region interface flattened column-major.
class GenNucNormRegion final : public DecomposedRegion {
 public:
  /// General constructor: P is k x m, Q is n x l. Orthogonal-projection
  /// inputs are detected and skip the pseudoinverse computation.
  GenNucNormRegion(const Matrix& P, const Matrix& Q, double delta);

  /// Fast constructor for the column-side-information constraint
  /// ||(I - P1 P1^T) X||_* <= delta with Q = I: P1 must have orthonormal
  /// columns; the projection is applied in factored form and no m x m
  /// matrix is built.
  static GenNucNormRegion with_side_information(Matrix P1, int cols, double delta);

  int rows() const { return m_; }
  int cols() const { return n_; }
  bool projection_flag() const { return projection_flag_; }

  Matrix project_complement_matrix(const Matrix& X) const;
  Matrix project_subspace_matrix(const Matrix& X) const;
  /// Oracle minimizer of ⟨C, X⟩ over S; the achieved value is
  /// -delta * sigma1 of the transformed gradient.
  Matrix lmo_matrix(const Matrix& C) const;

  Vector project_subspace(const Vector& x) const override;
  Vector project_complement(const Vector& x) const override;
  VertexHandle lmo(const Vector& c) const override;
  /// Solver-loop form: the context carries the previous right singular
  /// vector as the next power-iteration start, which collapses the per-call
  /// sweep count once the gradient changes slowly.
  VertexHandle lmo(const Vector& c, LmoContext& ctx) const override;
  bool polyhedral_vertices() const override { return false; }
  Vector default_start() const override { return Vector::Zero(ambient_dim()); }

 private:
  struct DenseOps {
    Matrix P, Q;            // as given
    Matrix Pplus, Qplus;    // Moore-Penrose inverses
    Matrix PplusP, QQplus;  // the complement projectors' factors
  };
  struct FactoredOps {
    Matrix P1;  // P = I - P1 P1^T, Q = I, applied without forming P
  };

  GenNucNormRegion(int m, int n, double delta, int subspace_dim, bool projection_flag,
                   std::variant<DenseOps, FactoredOps> ops);

  static GenNucNormRegion build_dense(const Matrix& P, const Matrix& Q, double delta);
  Matrix lmo_matrix_impl(const Matrix& C, const Vector* start, Vector* v_used,
                         double value_tolerance) const;

  int m_, n_;
  bool projection_flag_;
  std::variant<DenseOps, FactoredOps> ops_;
};

}  // namespace ufw
