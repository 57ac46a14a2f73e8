#include "ufw/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ufw/prng.hpp"

namespace ufw {

namespace {

void require_finite_ray(const Vector& y, const Vector& d, double alpha_max) {
  if (!y.allFinite() || !d.allFinite())
    throw std::invalid_argument("linesearch: non-finite point or direction");
  if (!(alpha_max > 0.0) || !std::isfinite(alpha_max))
    throw std::invalid_argument("linesearch: alpha_max must be positive and finite");
}

}  // namespace

LineSearchResult SmoothObjective::exact_linesearch(const Vector& y, const Vector& d,
                                                   double alpha_max) const {
  require_finite_ray(y, d, alpha_max);
  const auto phi = [&](double a) { return value(y + a * d); };

  const double tol = 1e-12 * std::max(1.0, alpha_max);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = alpha_max;
  double c = b - invphi * (b - a);
  double e = a + invphi * (b - a);
  double fc = phi(c), fe = phi(e);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc < fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - invphi * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + invphi * (b - a);
      fe = phi(e);
    }
  }
  // The interval endpoints 0 and alpha_max are common exact minimizers
  // (clipped steps); compare them against the interior candidate.
  double best_a = 0.5 * (a + b);
  double best_f = phi(best_a);
  const double f0 = phi(0.0);
  if (f0 <= best_f) {
    best_a = 0.0;
    best_f = f0;
  }
  const double fmax = phi(alpha_max);
  if (fmax < best_f) {
    best_a = alpha_max;
    best_f = fmax;
  }
  return {best_a, best_f};
}

LeastSquaresObjective::LeastSquaresObjective(Matrix A, Vector b)
    : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != b_.size())
    throw std::invalid_argument("least squares: A rows and b length differ");
  if (A_.rows() == 0 || A_.cols() == 0)
    throw std::invalid_argument("least squares: empty design matrix");
}

double LeastSquaresObjective::value(const Vector& x) const {
  return (b_ - A_ * x).squaredNorm();
}

Vector LeastSquaresObjective::gradient(const Vector& x) const {
  return 2.0 * (A_.transpose() * (A_ * x - b_));
}

void LeastSquaresObjective::value_and_gradient(const Vector& x, double& f, Vector& g) const {
  Vector r = A_ * x - b_;
  f = r.squaredNorm();
  g.noalias() = 2.0 * (A_.transpose() * r);
}

LineSearchResult LeastSquaresObjective::exact_linesearch(const Vector& y, const Vector& d,
                                                         double alpha_max) const {
  require_finite_ray(y, d, alpha_max);
  Vector Ad = A_ * d;
  Vector r = b_ - A_ * y;
  const double den = Ad.squaredNorm();
  const double num = Ad.dot(r);
  double alpha;
  if (den <= 0.0) {
    alpha = num > 0.0 ? alpha_max : 0.0;
  } else {
    alpha = std::clamp(num / den, 0.0, alpha_max);
  }
  return {alpha, (r - alpha * Ad).squaredNorm()};
}

std::optional<double> LeastSquaresObjective::default_step_size() const {
  return 1.0 / operator_norm_sq();
}

double LeastSquaresObjective::operator_norm_sq() const {
  return power_iteration_sq_norm(A_);
}

MaskedFrobeniusObjective::MaskedFrobeniusObjective(int rows, int cols,
                                                   std::vector<std::pair<int, int>> omega,
                                                   Vector b_omega)
    : rows_(rows), cols_(cols), omega_(std::move(omega)), b_omega_(std::move(b_omega)) {
  if (rows_ <= 0 || cols_ <= 0) throw std::invalid_argument("masked objective: empty shape");
  if (static_cast<Eigen::Index>(omega_.size()) != b_omega_.size())
    throw std::invalid_argument("masked objective: omega and value lengths differ");
  linear_.reserve(omega_.size());
  for (const auto& [i, j] : omega_) {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
      throw std::invalid_argument("masked objective: coordinate out of range");
    linear_.push_back(static_cast<Eigen::Index>(i) + static_cast<Eigen::Index>(j) * rows_);
  }
}

double MaskedFrobeniusObjective::value(const Vector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("masked objective: bad vector length");
  double s = 0.0;
  for (std::size_t t = 0; t < linear_.size(); ++t) {
    const double r = x[linear_[t]] - b_omega_[static_cast<Eigen::Index>(t)];
    s += r * r;
  }
  return s;
}

Vector MaskedFrobeniusObjective::gradient(const Vector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("masked objective: bad vector length");
  Vector g = Vector::Zero(dim());
  for (std::size_t t = 0; t < linear_.size(); ++t) {
    g[linear_[t]] = 2.0 * (x[linear_[t]] - b_omega_[static_cast<Eigen::Index>(t)]);
  }
  return g;
}

void MaskedFrobeniusObjective::value_and_gradient(const Vector& x, double& f, Vector& g) const {
  if (x.size() != dim()) throw std::invalid_argument("masked objective: bad vector length");
  g.setZero(dim());
  f = 0.0;
  for (std::size_t t = 0; t < linear_.size(); ++t) {
    const double r = x[linear_[t]] - b_omega_[static_cast<Eigen::Index>(t)];
    f += r * r;
    g[linear_[t]] = 2.0 * r;
  }
}

LineSearchResult MaskedFrobeniusObjective::exact_linesearch(const Vector& y, const Vector& d,
                                                            double alpha_max) const {
  require_finite_ray(y, d, alpha_max);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < linear_.size(); ++t) {
    const double r = y[linear_[t]] - b_omega_[static_cast<Eigen::Index>(t)];
    const double dd = d[linear_[t]];
    num -= r * dd;
    den += dd * dd;
  }
  double alpha;
  if (den <= 0.0) {
    alpha = num > 0.0 ? alpha_max : 0.0;
  } else {
    alpha = std::clamp(num / den, 0.0, alpha_max);
  }
  double val = 0.0;
  for (std::size_t t = 0; t < linear_.size(); ++t) {
    const double r = y[linear_[t]] + alpha * d[linear_[t]] - b_omega_[static_cast<Eigen::Index>(t)];
    val += r * r;
  }
  return {alpha, val};
}

double estimate_step_eta(const SmoothObjective& objective) {
  const auto eta = objective.default_step_size();
  if (!eta)
    throw std::invalid_argument(
        "estimate_step_eta: objective provides no step-size estimate; pass eta explicitly");
  return *eta;
}

double power_iteration_sq_norm(const Matrix& A, double rel_tol, int max_iters,
                               std::uint64_t seed) {
  if (A.size() == 0) throw std::invalid_argument("power iteration: empty matrix");
  SplitMix64 rng(seed);
  Vector v(A.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  const double vn = v.norm();
  if (vn == 0.0) v.setOnes();
  v.normalize();

  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector Av = A * v;
    const double next = Av.squaredNorm();
    if (next == 0.0) break;  // v in the kernel; handled below
    Vector w = A.transpose() * Av;
    const double wn = w.norm();
    if (wn == 0.0) break;
    v = w / wn;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("power iteration: operator norm is zero (or not finite)");
  return lambda;
}

}  // namespace ufw
