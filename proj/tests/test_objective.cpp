#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "ufw/objective.hpp"

using ufw::LeastSquaresObjective;
using ufw::MaskedFrobeniusObjective;
using ufw::Matrix;
using ufw::Vector;

namespace {

// Smooth convex non-quadratic objective to exercise the golden-section path.
class QuarticObjective final : public ufw::SmoothObjective {
 public:
  explicit QuarticObjective(int n) : n_(n) {}
  int dim() const override { return n_; }
  double value(const Vector& x) const override { return x.array().square().square().sum(); }
  Vector gradient(const Vector& x) const override { return 4.0 * x.array().cube().matrix(); }

 private:
  int n_;
};

MaskedFrobeniusObjective small_masked() {
  std::vector<std::pair<int, int>> omega{{0, 0}, {0, 2}, {1, 1}, {2, 0}, {3, 2}};
  Vector b(5);
  b << 1.0, -2.0, 0.5, 3.0, -1.0;
  return MaskedFrobeniusObjective(4, 3, omega, b);
}

}  // namespace

TEST_CASE("least squares: value, gradient, fused evaluation") {
  ufw::SplitMix64 rng(101);
  Matrix A = oracle::random_matrix(rng, 12, 7);
  Vector b = oracle::random_vector(rng, 12);
  LeastSquaresObjective f(A, b);

  for (int t = 0; t < 50; ++t) {
    Vector x = oracle::random_vector(rng, 7);
    CHECK(f.value(x) >= 0.0);
    double fv;
    Vector g;
    f.value_and_gradient(x, fv, g);
    CHECK(fv == doctest::Approx(f.value(x)).epsilon(1e-14));
    CHECK((g - f.gradient(x)).norm() <= 1e-12 * (1.0 + g.norm()));

    Vector e = oracle::random_vector(rng, 7).normalized();
    const double fd = oracle::directional_derivative(
        [&](const Vector& p) { return f.value(p); }, x, e);
    CHECK(std::abs(fd - g.dot(e)) <= 1e-4 * (1.0 + std::abs(fv)));
  }

  // Convexity sample check: first-order lower bound.
  for (int t = 0; t < 50; ++t) {
    Vector x = oracle::random_vector(rng, 7);
    Vector y = oracle::random_vector(rng, 7);
    const double fx = f.value(x);
    CHECK(f.value(y) >= fx + f.gradient(x).dot(y - x) - 1e-8 * (1.0 + std::abs(fx)));
  }

  // The gradient vanishes at a least-squares solution.
  Vector xs = A.colPivHouseholderQr().solve(b);
  CHECK(f.gradient(xs).norm() <= 1e-9 * (1.0 + b.norm()));
}

TEST_CASE("masked objective: gradient lives on the mask") {
  auto f = small_masked();
  ufw::SplitMix64 rng(102);
  Vector x = oracle::random_vector(rng, 12);
  Vector g = f.gradient(x);
  CHECK(f.value(x) >= 0.0);
  // Off-mask coordinates: 12 entries, 5 observed.
  int nonzero = 0;
  for (int i = 0; i < 12; ++i) nonzero += g[i] != 0.0 ? 1 : 0;
  CHECK(nonzero <= 5);

  for (int t = 0; t < 50; ++t) {
    Vector p = oracle::random_vector(rng, 12);
    Vector e = oracle::random_vector(rng, 12).normalized();
    const double fd = oracle::directional_derivative(
        [&](const Vector& q) { return f.value(q); }, p, e);
    CHECK(std::abs(fd - f.gradient(p).dot(e)) <= 1e-4 * (1.0 + std::abs(f.value(p))));
  }

  double fv;
  Vector g2;
  f.value_and_gradient(x, fv, g2);
  CHECK(fv == doctest::Approx(f.value(x)).epsilon(1e-14));
  CHECK((g2 - g).norm() == 0.0);
}

TEST_CASE("step-size estimates") {
  LeastSquaresObjective id3(Matrix::Identity(3, 3), Vector::Zero(3));
  CHECK(ufw::estimate_step_eta(id3) == doctest::Approx(1.0).epsilon(1e-9));

  CHECK(ufw::estimate_step_eta(small_masked()) == 0.5);

  ufw::SplitMix64 rng(103);
  Matrix A = oracle::random_matrix(rng, 50, 20);
  LeastSquaresObjective f(A, Vector::Zero(50));
  Eigen::JacobiSVD<Matrix> svd(A);
  const double sigma1 = svd.singularValues()[0];
  CHECK(ufw::estimate_step_eta(f) ==
        doctest::Approx(1.0 / (sigma1 * sigma1)).epsilon(1e-4));

  CHECK_THROWS_AS(ufw::power_iteration_sq_norm(Matrix::Zero(4, 4)), std::invalid_argument);
  QuarticObjective q(3);
  CHECK_THROWS_AS(ufw::estimate_step_eta(q), std::invalid_argument);
}

TEST_CASE("closed-form line search on quadratics") {
  // f(x) = ||x||^2 as least squares with A = I, b = 0.
  LeastSquaresObjective f(Matrix::Identity(1, 1), Vector::Zero(1));
  Vector y1 = Vector::Constant(1, 1.0), d = Vector::Constant(1, -1.0);
  auto r1 = f.exact_linesearch(y1, d, 1.0);
  CHECK(r1.alpha == doctest::Approx(1.0));
  CHECK(r1.value == doctest::Approx(0.0));

  Vector y2 = Vector::Constant(1, 2.0);
  auto r2 = f.exact_linesearch(y2, d, 1.0);
  CHECK(r2.alpha == 1.0);  // clipped at the boundary
  CHECK(r2.value == doctest::Approx(1.0));

  // Flat direction (A d = 0 is impossible for A = I, so craft a rank-one A).
  Matrix A(2, 2);
  A << 1, 0, 0, 0;
  LeastSquaresObjective g(A, Vector::Zero(2));
  Vector y(2), flat(2);
  y << 1, 1;
  flat << 0, 1;
  auto r3 = g.exact_linesearch(y, flat, 5.0);
  CHECK(r3.alpha == 0.0);

  CHECK_THROWS_AS(f.exact_linesearch(y1, d, 0.0), std::invalid_argument);
  Vector nd = Vector::Constant(1, std::nan(""));
  CHECK_THROWS_AS(f.exact_linesearch(y1, nd, 1.0), std::invalid_argument);
}

TEST_CASE("line search against a dense grid") {
  ufw::SplitMix64 rng(104);

  Matrix A = oracle::random_matrix(rng, 15, 6);
  Vector b = oracle::random_vector(rng, 15);
  LeastSquaresObjective ls(A, b);
  QuarticObjective quartic(6);
  auto masked = small_masked();

  for (int t = 0; t < 20; ++t) {
    Vector y = oracle::random_vector(rng, 6);
    Vector d = oracle::random_vector(rng, 6);
    const double amax = 0.25 + 2.0 * rng.uniform01();
    for (const ufw::SmoothObjective* f :
         std::initializer_list<const ufw::SmoothObjective*>{&ls, &quartic}) {
      auto res = f->exact_linesearch(y, d, amax);
      CHECK(res.alpha >= 0.0);
      CHECK(res.alpha <= amax);
      const double fy = f->value(y);
      CHECK(res.value <= fy + 1e-12 * (1.0 + std::abs(fy)));
      const double gmin = oracle::grid_min(
          [&](double a) { return f->value(y + a * d); }, amax);
      CHECK(res.value <= gmin + 1e-10 * (1.0 + std::abs(fy)));
      CHECK(res.value == doctest::Approx(f->value(y + res.alpha * d)).epsilon(1e-12));
    }
  }

  for (int t = 0; t < 20; ++t) {
    Vector y = oracle::random_vector(rng, 12);
    Vector d = oracle::random_vector(rng, 12);
    auto res = masked.exact_linesearch(y, d, 1.0);
    const double fy = masked.value(y);
    CHECK(res.value <= fy + 1e-12 * (1.0 + std::abs(fy)));
    const double gmin =
        oracle::grid_min([&](double a) { return masked.value(y + a * d); }, 1.0);
    CHECK(res.value <= gmin + 1e-10 * (1.0 + std::abs(fy)));
  }
}
