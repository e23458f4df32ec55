#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mlmpc/linalg.hpp"
#include "mlmpc/rng.hpp"

using namespace mlmpc;

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

Matrix random_stable(Rng& rng, int n, double radius) {
  Matrix a = random_matrix(rng, n, n);
  const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
  return a * (radius / rho);
}

Matrix random_spd(Rng& rng, int n) {
  Matrix m = random_matrix(rng, n, n);
  return m.transpose() * m + Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("dlyap with zero dynamics returns the cost itself") {
  Matrix a = Matrix::Zero(3, 3);
  Rng rng(1);
  Matrix q = random_spd(rng, 3);
  CHECK(((dlyap(a, q) - q).norm()) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("dlyap matches the scalar geometric series") {
  Matrix a(1, 1), q(1, 1);
  a << 0.5;
  q << 1.0;
  // sum over k of 0.25^k
  CHECK(dlyap(a, q)(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("dlyap satisfies its defining equation on random stable systems") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng.integer(4));
    Matrix a = random_stable(rng, n, 0.3 + 0.6 * rng.uniform());
    Matrix q = random_spd(rng, n);
    Matrix x = dlyap(a, q);
    const double residual =
        (a.transpose() * x * a + q - x).norm() / std::max(1.0, x.norm());
    CHECK(residual < 1e-10);
    CHECK((x - x.transpose()).norm() < 1e-9);
  }
}

TEST_CASE("dlyap refuses unstable dynamics") {
  Matrix a(2, 2), q(2, 2);
  a << 1.2, 0.0, 0.0, 0.3;
  q.setIdentity();
  CHECK_THROWS_AS(dlyap(a, q), std::domain_error);
}

TEST_CASE("dlyap rejects mismatched shapes") {
  CHECK_THROWS_AS(dlyap(Matrix::Zero(2, 2), Matrix::Zero(3, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(dlyap(Matrix::Zero(2, 3), Matrix::Zero(2, 3)),
                  std::invalid_argument);
}

TEST_CASE("gramians of a one-state system have closed forms") {
  Matrix a(1, 1), b(1, 1), c(1, 1);
  a << 0.5;
  b << 1.0;
  c << 1.0;
  // Wc = b^2 / (1 - a^2) = 4/3, same for Wo by symmetry.
  CHECK(controllability_gramian(a, b)(0, 0) ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(observability_gramian(a, c)(0, 0) ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  auto h = hankel_singular_values(a, b, c);
  REQUIRE(h.size() == 1);
  CHECK(h[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("gramians satisfy their Lyapunov equations") {
  Rng rng(11);
  Matrix a = random_stable(rng, 3, 0.8);
  Matrix b = random_matrix(rng, 3, 2);
  Matrix c = random_matrix(rng, 2, 3);
  Matrix wc = controllability_gramian(a, b);
  Matrix wo = observability_gramian(a, c);
  CHECK((a * wc * a.transpose() + b * b.transpose() - wc).norm() < 1e-10);
  CHECK((a.transpose() * wo * a + c.transpose() * c - wo).norm() < 1e-10);
}

TEST_CASE("hankel singular values are invariant under state transformations") {
  Rng rng(13);
  Matrix a = random_stable(rng, 3, 0.7);
  Matrix b = random_matrix(rng, 3, 1);
  Matrix c = random_matrix(rng, 1, 3);
  Matrix t = random_matrix(rng, 3, 3) + 3.0 * Matrix::Identity(3, 3);
  Matrix ti = t.inverse();

  auto h0 = hankel_singular_values(a, b, c);
  auto h1 = hankel_singular_values(t * a * ti, t * b, c * ti);
  REQUIRE(h0.size() == h1.size());
  for (std::size_t i = 0; i < h0.size(); ++i) {
    CHECK(h1[i] == doctest::Approx(h0[i]).epsilon(1e-8));
  }
  for (std::size_t i = 1; i < h0.size(); ++i) CHECK(h0[i - 1] >= h0[i]);
}
