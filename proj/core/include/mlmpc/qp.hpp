#pragma once

#include <optional>

#include "mlmpc/linalg.hpp"

namespace mlmpc {

// minimize 1/2 x'Hx + f'x  subject to  lo <= x <= hi,  a_lo <= A x <= a_hi.
// H must be symmetric positive definite. Bounds may pin a variable
// (lo_i == hi_i); rows are two-sided inequalities.
struct QpProblem {
  Matrix H;
  Vector f;
  Vector lo, hi;
  Matrix A;       // 0 x n when absent
  Vector a_lo, a_hi;
};

struct KktCertificate {
  double stationarity = 0.0;    // ||H x + f - active-normal combination||_inf
  double feasibility = 0.0;     // worst bound / row violation
  double complementarity = 0.0; // worst |multiplier * slack|
  double max() const;
};

struct QpResult {
  Vector x;
  Vector bound_mult;  // per variable, signed: >0 pushes at upper, <0 at lower
  Vector row_mult;    // per row, same convention
  int iterations = 0;
  bool converged = false;
  KktCertificate kkt;
};

// Primal active-set method. `x0` must be feasible when given; for box-only
// problems the clipped unconstrained minimizer is used by default.
QpResult solve_qp(const QpProblem& problem,
                  const std::optional<Vector>& x0 = std::nullopt);

QpResult solve_box_qp(const Matrix& H, const Vector& f, const Vector& lo,
                      const Vector& hi);

// Recomputes the certificate of a candidate solution against the problem.
KktCertificate check_kkt(const QpProblem& problem, const QpResult& result);

}  // namespace mlmpc
