#include "mlmpc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlmpc {

Matrix dlyap(const Matrix& A, const Matrix& Q) {
  const auto n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw std::invalid_argument("dlyap: A and Q must be square and same size");
  // Without Schur stability the fixed point exists for most A but is
  // indefinite and meaningless as a Gramian or cost-to-go.
  if (Eigen::EigenSolver<Matrix>(A).eigenvalues().cwiseAbs().maxCoeff() >= 1.0)
    throw std::domain_error("dlyap: A must be Schur stable");

  // vec(A' X A) = (A' kron A') vec(X); solve (I - A' kron A') vec(X) = vec(Q).
  Matrix K(n * n, n * n);
  const Matrix At = A.transpose();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      K.block(i * n, j * n, n, n) = At(i, j) * At;
  Matrix M = Matrix::Identity(n * n, n * n) - K;

  Eigen::Map<const Vector> q(Q.data(), n * n);
  Vector x = M.partialPivLu().solve(q);
  if (!x.allFinite())
    throw std::domain_error("dlyap: no finite solution (is A Schur stable?)");

  Matrix X = Eigen::Map<Matrix>(x.data(), n, n);
  return 0.5 * (X + X.transpose());  // symmetrize roundoff
}

Matrix controllability_gramian(const Matrix& A, const Matrix& B) {
  // Wc = A Wc A' + B B'  ==  dlyap form with A transposed.
  return dlyap(A.transpose(), B * B.transpose());
}

Matrix observability_gramian(const Matrix& A, const Matrix& C) {
  return dlyap(A, C.transpose() * C);
}

std::vector<double> hankel_singular_values(const Matrix& A, const Matrix& B,
                                           const Matrix& C) {
  const Matrix Wc = controllability_gramian(A, B);
  const Matrix Wo = observability_gramian(A, C);
  Eigen::EigenSolver<Matrix> es(Wc * Wo);
  std::vector<double> sv;
  sv.reserve(static_cast<std::size_t>(A.rows()));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    // Wc*Wo is similar to a symmetric PSD matrix; imaginary parts are noise.
    sv.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i).real())));
  }
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

}  // namespace mlmpc
