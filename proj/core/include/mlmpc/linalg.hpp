#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mlmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Solves X = A' X A + Q by Kronecker vectorization; intended for the small
// state dimensions used here (n^2 x n^2 dense solve).
Matrix dlyap(const Matrix& A, const Matrix& Q);

// Controllability and observability Gramians of a Schur-stable discrete
// system, from the corresponding Lyapunov equations.
Matrix controllability_gramian(const Matrix& A, const Matrix& B);
Matrix observability_gramian(const Matrix& A, const Matrix& C);

// Hankel singular values: sqrt of the eigenvalues of Wc * Wo, descending.
std::vector<double> hankel_singular_values(const Matrix& A, const Matrix& B,
                                           const Matrix& C);

}  // namespace mlmpc
