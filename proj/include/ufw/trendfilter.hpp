#pragma once

#include <vector>

#include "ufw/region.hpp"

namespace ufw {

/// r-fold first difference D^(r) x, computed by r in-place passes
/// ((D^(1) x)_i = x_i - x_{i+1}); no dense operator is formed. Output length
/// n - r. Requires 1 <= r < n.
Vector apply_diff(int order, const Vector& x);

/// Orthonormal basis (n x r, Householder QR) of the kernel of D^(r): the
/// discrete polynomials of degree < r. The raw columns before
/// orthonormalization are ones, then repeated suffix cumulative sums of ones.
Matrix diff_kernel_basis(int n, int order);

/// Exact integer check of the identity D^(i) U^i = [I, 0], where U is the
/// all-ones upper-triangular matrix (the suffix cumulative-sum operator).
/// Differencing i times undoes i rounds of suffix summation. Exposed as a
/// self-test; safe in 64-bit integers for n <= 50, i <= 4 and well beyond.
bool verify_diff_cumsum_identity(int n, int i);

/// Feasible region of order-r l1 trend filtering: the constraint
/// ||D^(r) x||_1 <= delta splits into the subspace T = ker(D^(r)) and the
/// bounded polytope S = {x in T-perp : ||D^(r) x||_1 <= delta}. S is a linear
/// image of the l1 ball of radius delta, with 2(n-r) vertices.
///
/// Vertex keys encode (index j, sign s) as a zero-padded index followed by
/// '+' or '-'; the vertex is the image of z = -s * delta * e_j under the
/// back-map, so the key of lmo(c) carries the sign of the reduced cost at j.
/// Key order is index-major with '+' before '-'.
class TrendFilterRegion final : public DecomposedRegion {
 public:
  /// Requires 1 <= order < n; orders above 8 are rejected (the reduced
  /// square system becomes too ill-conditioned to trust).
  TrendFilterRegion(int n, int order, double delta);

  int order() const { return order_; }
  /// Orthonormal kernel basis Q (n x r); project_subspace(x) = Q Q^T x.
  const Matrix& kernel_basis() const { return Q_; }

  Vector project_subspace(const Vector& x) const override;
  VertexHandle lmo(const Vector& c) const override;
  bool polyhedral_vertices() const override { return true; }
  std::optional<VertexHandle> identify_vertex(const Vector& point) const override;
  Vector default_start() const override;

  /// Canonical vertex for key (index, sign); sign is +1 or -1.
  VertexHandle vertex(int index, int sign) const;

  /// All 2(n-r) vertices in key order. Enumeration is meant for test
  /// oracles; it is guarded to n - r <= 64.
  std::vector<VertexHandle> enumerate_vertices() const;

  static std::string vertex_key(int index, int sign);

 private:
  int order_;
  Matrix Q_;  // n x r orthonormal kernel basis
  Matrix W_;  // r x (n-r): reduced solve B2^{-1} B1; gives both the reduced
              // cost map c -> c1 - W^T c2 and the back-map z -> tail block
};

}  // namespace ufw
