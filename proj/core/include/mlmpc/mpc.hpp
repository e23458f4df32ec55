#pragma once

#include <optional>

#include "mlmpc/dynamics.hpp"
#include "mlmpc/qp.hpp"

namespace mlmpc {

struct ControlPolicy {
  Vector u;                 // N scalar inputs
  double objective = 0.0;
  KktCertificate kkt;       // QP certificates (linear problems)
  double projected_gradient = 0.0;  // NLP convergence measure (CSTR)
  int iterations = 0;
};

struct LinearMpcProblem {
  LinearSystem sys;
  int N = 5;
  Matrix Q, R, Qt;
  double u_min = -0.5, u_max = 0.5;
  bool quad_constraint = false;  // adds u_k^2 <= x'x on the first input

  // The three benchmark problems; Qt from the discrete Lyapunov equation.
  static LinearMpcProblem singular();          // N = 5,  |u| <= 0.5
  static LinearMpcProblem bemporad();          // N = 10, |u| <= 2
  static LinearMpcProblem quad_constrained();  // N = 6,  |u| <= 2, u_k^2 <= x'x
};

// Qt = A' Qt A + Q; requires spectral radius < 1.
Matrix terminal_cost(const Matrix& A, const Matrix& Q);

// Condensed QP of the finite-horizon problem at state x: the states are
// eliminated and the decision variable is the input sequence.
QpProblem condensed_qp(const LinearMpcProblem& prob, const Vector& x);

ControlPolicy solve_linear_mpc(const LinearMpcProblem& prob, const Vector& x);

// The quadratic constraint involves only u_k with the state as parameter, so
// it tightens the first input's box to |u_k| <= min(u_max, ||x||); the solve
// stays a box QP and keeps exact certificates.
ControlPolicy solve_quadratic_constrained_mpc(const LinearMpcProblem& prob,
                                              const Vector& x);

// Rolls the model forward and accumulates the objective exactly as the
// solver defines it (including the constant current-state term).
double evaluate_cost(const LinearMpcProblem& prob, const Vector& x,
                     const Vector& u);

struct CstrMpcProblem {
  CstrParams params;
  int N = 20;
  double u_min = -2.0, u_max = 2.0;
  double rate_bound = 0.5;
  double dt = 0.05;
  int substeps = 10;
  double r0 = 0.5;  // nondimensional C_B setpoint
};

// Thrown when no start converges; carries the best policy found.
struct SolverFailure : std::runtime_error {
  explicit SolverFailure(const std::string& what, ControlPolicy best)
      : std::runtime_error(what), best_effort(std::move(best)) {}
  ControlPolicy best_effort;
};

// SQP with Gauss-Newton Hessian on the condensed 20-input problem; rate
// constraints are linear inequalities in the QP subproblem. Multi-start:
// warm (when provided), constant 0, and both saturated constants; best
// objective wins, ties broken by smaller ||u||.
ControlPolicy solve_cstr_mpc(const CstrMpcProblem& prob, const CstrState& s,
                             const std::optional<Vector>& warm = std::nullopt);

double evaluate_cstr_cost(const CstrMpcProblem& prob, const CstrState& s,
                          const Vector& u);

// Gradient of the rollout objective via tangent propagation; exposed for the
// finite-difference property check.
Vector cstr_cost_gradient(const CstrMpcProblem& prob, const CstrState& s,
                          const Vector& u);

}  // namespace mlmpc
