#include "ufw/trendfilter.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ufw {

namespace {

// y = U x (suffix cumulative sums), applied to the leading `len` entries.
void suffix_cumsum(Vector& x, Eigen::Index len) {
  for (Eigen::Index i = len - 2; i >= 0; --i) x[i] += x[i + 1];
}

// y = U^T x (prefix cumulative sums).
void prefix_cumsum(Vector& x, Eigen::Index len) {
  for (Eigen::Index i = 1; i < len; ++i) x[i] += x[i - 1];
}

// y = U^{-1} x: first differences against the next entry, last entry kept.
void inverse_suffix_cumsum(Vector& x, Eigen::Index len) {
  for (Eigen::Index i = 0; i + 1 < len; ++i) x[i] -= x[i + 1];
}

}  // namespace

Vector apply_diff(int order, const Vector& x) {
  const auto n = x.size();
  if (order < 1 || order >= n)
    throw std::invalid_argument("apply_diff: order must satisfy 1 <= r < n");
  Vector work = x;
  for (int pass = 0; pass < order; ++pass) {
    const Eigen::Index len = n - pass;
    for (Eigen::Index i = 0; i + 1 < len; ++i) work[i] = work[i] - work[i + 1];
  }
  return work.head(n - order);
}

Matrix diff_kernel_basis(int n, int order) {
  if (order < 1 || order >= n)
    throw std::invalid_argument("diff_kernel_basis: order must satisfy 1 <= r < n");
  Matrix raw(n, order);
  Vector col = Vector::Ones(n);
  raw.col(0) = col;
  for (int j = 1; j < order; ++j) {
    suffix_cumsum(col, n);
    raw.col(j) = col;
  }
  Eigen::HouseholderQR<Matrix> qr(raw);
  return qr.householderQ() * Matrix::Identity(n, order);
}

bool verify_diff_cumsum_identity(int n, int i) {
  if (i < 1 || i >= n)
    throw std::invalid_argument("verify_diff_cumsum_identity: need 1 <= i < n");
  using IMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

  IMat U = IMat::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) U(a, b) = 1;
  IMat Upow = IMat::Identity(n, n);
  for (int t = 0; t < i; ++t) Upow = (Upow * U).eval();

  // D^(i) built by the recursion D^(k+1)_n = D^(1)_{n-k} D^(k)_n.
  IMat D = IMat::Zero(n - 1, n);
  for (int a = 0; a < n - 1; ++a) {
    D(a, a) = 1;
    D(a, a + 1) = -1;
  }
  for (int k = 1; k < i; ++k) {
    const int rows = n - k;
    IMat D1 = IMat::Zero(rows - 1, rows);
    for (int a = 0; a < rows - 1; ++a) {
      D1(a, a) = 1;
      D1(a, a + 1) = -1;
    }
    D = (D1 * D).eval();
  }

  IMat M = D * Upow;  // expected [I_{n-i}, 0]
  for (int a = 0; a < n - i; ++a)
    for (int b = 0; b < n; ++b)
      if (M(a, b) != (a == b ? 1 : 0)) return false;
  return true;
}

TrendFilterRegion::TrendFilterRegion(int n, int order, double delta)
    : DecomposedRegion(n, order, delta), order_(order) {
  if (order < 1 || order >= n)
    throw std::invalid_argument("trend filter: order must satisfy 1 <= r < n");
  if (order > 8)
    throw std::invalid_argument("trend filter: orders above 8 are not supported");
  Q_ = diff_kernel_basis(n, order);

  // B = Q^T U^r, split as [B1, B2]; the vertices solve B1 z + B2 w = 0.
  Matrix G = Q_;
  for (int pass = 0; pass < order; ++pass) {
    for (int j = 0; j < order; ++j) {
      Vector c = G.col(j);
      prefix_cumsum(c, n);
      G.col(j) = c;
    }
  }
  Matrix B = G.transpose();  // r x n
  Matrix B2 = B.rightCols(order);
  Eigen::FullPivLU<Matrix> lu(B2);
  if (!lu.isInvertible())
    throw std::runtime_error("trend filter: reduced square system is singular");
  W_ = lu.solve(B.leftCols(n - order));
}

Vector TrendFilterRegion::project_subspace(const Vector& x) const {
  check_dim(x);
  return Q_ * (Q_.transpose() * x);
}

std::string TrendFilterRegion::vertex_key(int index, int sign) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%09d%c", index, sign >= 0 ? '+' : '-');
  return buf;
}

VertexHandle TrendFilterRegion::vertex(int index, int sign) const {
  const int n = ambient_dim();
  const int r = order_;
  if (index < 0 || index >= n - r) throw std::invalid_argument("trend filter: vertex index");
  Vector y = Vector::Zero(n);
  y[index] = -sign * delta();            // z = -s * delta * e_j
  y.tail(r) = sign * delta() * W_.col(index);  // w = -W z
  for (int pass = 0; pass < r; ++pass) suffix_cumsum(y, n);  // x = U^r [z; w]
  return {vertex_key(index, sign), std::move(y)};
}

VertexHandle TrendFilterRegion::lmo(const Vector& c) const {
  check_dim(c);
  if (!c.allFinite()) throw std::invalid_argument("trend filter lmo: non-finite input");
  const int n = ambient_dim();
  const int r = order_;

  Vector cbar = c;
  for (int pass = 0; pass < r; ++pass) prefix_cumsum(cbar, n);  // (U^r)^T c
  Vector ctilde = cbar.head(n - r) - W_.transpose() * cbar.tail(r);

  // argmax |ctilde_i|, ties to the smallest index.
  Eigen::Index j = 0;
  double best = std::abs(ctilde[0]);
  for (Eigen::Index i = 1; i < ctilde.size(); ++i) {
    const double a = std::abs(ctilde[i]);
    if (a > best) {
      best = a;
      j = i;
    }
  }
  const int sign = ctilde[j] >= 0.0 ? +1 : -1;  // sign(0) = +1
  return vertex(static_cast<int>(j), sign);
}

std::optional<VertexHandle> TrendFilterRegion::identify_vertex(const Vector& point) const {
  if (point.size() != ambient_dim()) return std::nullopt;
  const int n = ambient_dim();
  const int r = order_;
  Vector y = point;
  for (int pass = 0; pass < r; ++pass) inverse_suffix_cumsum(y, n);
  Eigen::Index j = 0;
  double best = std::abs(y[0]);
  for (Eigen::Index i = 1; i < n - r; ++i) {
    if (std::abs(y[i]) > best) {
      best = std::abs(y[i]);
      j = i;
    }
  }
  if (best == 0.0) return std::nullopt;
  const int sign = y[j] < 0.0 ? +1 : -1;  // z_j = -s * delta
  VertexHandle cand = vertex(static_cast<int>(j), sign);
  if ((cand.point - point).norm() <= 1e-8 * (1.0 + point.norm())) return cand;
  return std::nullopt;
}

Vector TrendFilterRegion::default_start() const { return vertex(0, +1).point; }

std::vector<VertexHandle> TrendFilterRegion::enumerate_vertices() const {
  const int count = ambient_dim() - order_;
  if (count > 64)
    throw std::invalid_argument("trend filter: vertex enumeration guarded to n - r <= 64");
  std::vector<VertexHandle> out;
  out.reserve(2 * count);
  for (int j = 0; j < count; ++j) {
    out.push_back(vertex(j, +1));
    out.push_back(vertex(j, -1));
  }
  return out;
}

}  // namespace ufw
