#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ufw/region.hpp"

namespace ufw {

struct LineSearchResult {
  double alpha;  // minimizer in [0, alpha_max]
  double value;  // f(y + alpha * d)
};

/// Smooth convex objective: value, gradient, and exact line search along a
/// ray. Objectives are immutable and shareable; evaluation allocates no
/// shared mutable state.
class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;

  virtual int dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  /// Fused evaluation; overridden where value and gradient share work.
  virtual void value_and_gradient(const Vector& x, double& f, Vector& g) const {
    f = value(x);
    g = gradient(x);
  }

  /// Exact minimization of f(y + alpha d) over alpha in [0, alpha_max].
  /// The default is golden-section search (interval tolerance
  /// 1e-12 * max(1, alpha_max), at most 200 shrink steps); quadratic
  /// objectives override with the closed form.
  virtual LineSearchResult exact_linesearch(const Vector& y, const Vector& d,
                                            double alpha_max) const;

  /// Gradient step size the objective recommends (1/operator-norm style), if
  /// it knows one.
  virtual std::optional<double> default_step_size() const { return std::nullopt; }
};

/// f(x) = ||b - A x||_2^2 with gradient 2 A^T (A x - b).
class LeastSquaresObjective final : public SmoothObjective {
 public:
  LeastSquaresObjective(Matrix A, Vector b);

  int dim() const override { return static_cast<int>(A_.cols()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  void value_and_gradient(const Vector& x, double& f, Vector& g) const override;
  LineSearchResult exact_linesearch(const Vector& y, const Vector& d,
                                    double alpha_max) const override;
  /// 1 / ||A||_op^2, the squared operator norm estimated by power iteration
  /// (relative tolerance 1e-6, at most 500 iterations, fixed seed).
  std::optional<double> default_step_size() const override;

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  double operator_norm_sq() const;

 private:
  Matrix A_;
  Vector b_;
};

/// f(X) = ||P_Omega(X - B)||_F^2 over matrices stored as flattened
/// column-major vectors of length rows*cols. Only the observed entries of B
/// are stored; the gradient 2 P_Omega(X - B) is zero off Omega.
class MaskedFrobeniusObjective final : public SmoothObjective {
 public:
  /// `omega` holds (row, col) coordinates sorted row-major; `b_omega` the
  /// observed values in the same order.
  MaskedFrobeniusObjective(int rows, int cols, std::vector<std::pair<int, int>> omega,
                           Vector b_omega);

  int dim() const override { return rows_ * cols_; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  void value_and_gradient(const Vector& x, double& f, Vector& g) const override;
  LineSearchResult exact_linesearch(const Vector& y, const Vector& d,
                                    double alpha_max) const override;
  /// The gradient map 2 P_Omega(.) has Lipschitz constant 2.
  std::optional<double> default_step_size() const override { return 0.5; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<std::pair<int, int>>& omega() const { return omega_; }
  const Vector& b_omega() const { return b_omega_; }

 private:
  int rows_, cols_;
  std::vector<std::pair<int, int>> omega_;
  std::vector<Eigen::Index> linear_;  // column-major indices into the flat vector
  Vector b_omega_;
};

/// Recommended gradient step size for the given objective; throws
/// std::invalid_argument when the objective has no estimate (callers then
/// must supply eta themselves).
double estimate_step_eta(const SmoothObjective& objective);

/// Squared operator norm of A by power iteration on A^T A. Deterministic
/// seeded start; throws on a zero matrix.
double power_iteration_sq_norm(const Matrix& A, double rel_tol = 1e-6, int max_iters = 500,
                               std::uint64_t seed = 0x1b21a0d5u);

}  // namespace ufw
