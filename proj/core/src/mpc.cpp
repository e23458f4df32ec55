#include "mlmpc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mlmpc {

Matrix terminal_cost(const Matrix& A, const Matrix& Q) {
  Eigen::EigenSolver<Matrix> es(A);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    if (std::abs(es.eigenvalues()(i)) >= 1.0)
      throw std::domain_error("terminal_cost: A must be Schur stable");
  return dlyap(A, Q);
}

namespace {

LinearMpcProblem make_problem(const LinearSystem& sys, int N, double box) {
  LinearMpcProblem p;
  p.sys = sys;
  p.N = N;
  p.Q = Matrix::Identity(2, 2);
  p.R = Matrix::Constant(1, 1, 0.01);
  p.Qt = terminal_cost(sys.A, p.Q);
  p.u_min = -box;
  p.u_max = box;
  return p;
}

}  // namespace

LinearMpcProblem LinearMpcProblem::singular() {
  return make_problem(LinearSystem::singularly_perturbed(), 5, 0.5);
}

LinearMpcProblem LinearMpcProblem::bemporad() {
  return make_problem(LinearSystem::bemporad(), 10, 2.0);
}

LinearMpcProblem LinearMpcProblem::quad_constrained() {
  LinearMpcProblem p = make_problem(LinearSystem::bemporad(), 6, 2.0);
  p.quad_constraint = true;
  return p;
}

QpProblem condensed_qp(const LinearMpcProblem& prob, const Vector& x) {
  const auto n = prob.sys.A.rows();
  const int N = prob.N;
  if (prob.sys.B.cols() != 1)
    throw std::invalid_argument("condensed_qp: single-input problems only");
  if (x.size() != n) throw std::invalid_argument("condensed_qp: state size");

  // x_{i} = A^i x + sum_j A^(i-1-j) B u_j stacked for i = 1..N.
  Matrix Gx(N * n, n), Gu = Matrix::Zero(N * n, N);
  std::vector<Matrix> Apow(N + 1);
  Apow[0] = Matrix::Identity(n, n);
  for (int i = 1; i <= N; ++i) Apow[i] = Apow[i - 1] * prob.sys.A;
  for (int i = 1; i <= N; ++i) {
    Gx.block((i - 1) * n, 0, n, n) = Apow[i];
    for (int j = 0; j < i; ++j)
      Gu.block((i - 1) * n, j, n, 1) = Apow[i - 1 - j] * prob.sys.B;
  }

  Matrix Qb = Matrix::Zero(N * n, N * n);
  for (int i = 1; i < N; ++i) Qb.block((i - 1) * n, (i - 1) * n, n, n) = prob.Q;
  Qb.block((N - 1) * n, (N - 1) * n, n, n) = prob.Qt;

  QpProblem qp;
  qp.H = 2.0 * (Gu.transpose() * Qb * Gu +
                prob.R(0, 0) * Matrix::Identity(N, N));
  qp.H = 0.5 * (qp.H + qp.H.transpose().eval());
  qp.f = 2.0 * Gu.transpose() * (Qb * (Gx * x));
  qp.lo = Vector::Constant(N, prob.u_min);
  qp.hi = Vector::Constant(N, prob.u_max);
  qp.A = Matrix::Zero(0, N);
  qp.a_lo = Vector::Zero(0);
  qp.a_hi = Vector::Zero(0);
  return qp;
}

namespace {

ControlPolicy finish_linear(const LinearMpcProblem& prob, const Vector& x,
                            QpResult&& r) {
  ControlPolicy p;
  p.u = std::move(r.x);
  p.objective = evaluate_cost(prob, x, p.u);
  p.kkt = r.kkt;
  p.iterations = r.iterations;
  return p;
}

}  // namespace

ControlPolicy solve_linear_mpc(const LinearMpcProblem& prob, const Vector& x) {
  return finish_linear(prob, x, solve_qp(condensed_qp(prob, x)));
}

ControlPolicy solve_quadratic_constrained_mpc(const LinearMpcProblem& prob,
                                              const Vector& x) {
  QpProblem qp = condensed_qp(prob, x);
  if (prob.quad_constraint) {
    const double bound = std::min(prob.u_max, x.norm());
    qp.lo(0) = -bound;
    qp.hi(0) = bound;
  }
  return finish_linear(prob, x, solve_qp(qp));
}

double evaluate_cost(const LinearMpcProblem& prob, const Vector& x,
                     const Vector& u) {
  if (u.size() != prob.N) throw std::invalid_argument("evaluate_cost: policy length");
  double cost = 0.0;
  Vector xi = x;
  for (int i = 0; i < prob.N; ++i) {
    cost += xi.dot(prob.Q * xi) + prob.R(0, 0) * u(i) * u(i);
    xi = prob.sys.A * xi + prob.sys.B * u.segment(i, 1);
  }
  cost += xi.dot(prob.Qt * xi);
  return cost;
}

namespace {

struct CstrRollout {
  double cost = 0.0;
  Vector residuals;  // cb_hat_i - r0, i = 1..N
  Matrix jacobian;   // d residuals / d u (lower triangular)
};

CstrRollout cstr_rollout(const CstrMpcProblem& prob, const CstrState& s,
                         const Vector& u, bool with_jacobian) {
  const int N = prob.N;
  CstrRollout out;
  out.residuals = Vector::Zero(N);
  if (with_jacobian) out.jacobian = Matrix::Zero(N, N);

  CstrState x = s;
  Eigen::Matrix<double, 2, Eigen::Dynamic> Su;  // d x_i / d u
  if (with_jacobian) Su = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, N);

  for (int i = 0; i < N; ++i) {
    if (with_jacobian) {
      CstrStepTangent t = integrate_cstr_tangent(prob.params, x, u(i), prob.dt,
                                                 prob.substeps);
      Su = t.a * Su;
      Su.col(i) += t.b;
      x = t.next;
      // cb = ca0_hat - ca, so d(residual)/du = -d(ca)/du.
      out.jacobian.row(i) = -Su.row(0);
    } else {
      x = integrate_cstr(prob.params, x, u(i), prob.dt, prob.substeps);
    }
    const double r = x.cb_hat() - prob.r0;
    out.residuals(i) = r;
    out.cost += r * r;
  }
  return out;
}

// Projection of v onto the feasible polytope {box, rate}; used for the
// projected-gradient convergence measure.
Vector project_feasible(const CstrMpcProblem& prob, const Vector& v,
                        const Vector& feasible_start) {
  const int N = prob.N;
  QpProblem qp;
  qp.H = 2.0 * Matrix::Identity(N, N);
  qp.f = -2.0 * v;
  qp.lo = Vector::Constant(N, prob.u_min);
  qp.hi = Vector::Constant(N, prob.u_max);
  qp.A = Matrix::Zero(N - 1, N);
  for (int i = 0; i + 1 < N; ++i) {
    qp.A(i, i) = 1.0;
    qp.A(i, i + 1) = -1.0;
  }
  qp.a_lo = Vector::Constant(N - 1, -prob.rate_bound);
  qp.a_hi = Vector::Constant(N - 1, prob.rate_bound);
  return solve_qp(qp, feasible_start).x;
}

struct SqpOutcome {
  ControlPolicy policy;
  bool converged = false;
};

SqpOutcome sqp_from_start(const CstrMpcProblem& prob, const CstrState& s,
                          Vector u) {
  const int N = prob.N;
  constexpr int kMaxIter = 80;
  constexpr double kPgTol = 1e-5;

  QpProblem sub;
  sub.A = Matrix::Zero(N - 1, N);
  for (int i = 0; i + 1 < N; ++i) {
    sub.A(i, i) = 1.0;
    sub.A(i, i + 1) = -1.0;
  }

  CstrRollout roll = cstr_rollout(prob, s, u, true);
  SqpOutcome out;
  int iter = 0;
  double pg = std::numeric_limits<double>::infinity();
  for (; iter < kMaxIter; ++iter) {
    const Vector g = 2.0 * roll.jacobian.transpose() * roll.residuals;
    pg = (project_feasible(prob, u - g, u) - u).lpNorm<Eigen::Infinity>();
    if (pg < kPgTol) {
      out.converged = true;
      break;
    }

    sub.H = 2.0 * (roll.jacobian.transpose() * roll.jacobian).eval() +
            1e-8 * Matrix::Identity(N, N);
    sub.H = 0.5 * (sub.H + sub.H.transpose().eval());
    sub.f = g - sub.H * u;  // quadratic model in absolute coordinates
    sub.lo = Vector::Constant(N, prob.u_min);
    sub.hi = Vector::Constant(N, prob.u_max);
    sub.a_lo = Vector::Constant(N - 1, -prob.rate_bound);
    sub.a_hi = Vector::Constant(N - 1, prob.rate_bound);
    const Vector d = solve_qp(sub, u).x - u;
    const double slope = g.dot(d);
    if (d.lpNorm<Eigen::Infinity>() < 1e-14 || slope > -1e-16) break;

    // Backtracking line search; the feasible set is convex so every trial
    // point stays feasible.
    double alpha = 1.0;
    CstrRollout trial;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      trial = cstr_rollout(prob, s, u + alpha * d, true);
      if (trial.cost <= roll.cost + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    u += alpha * d;
    roll = std::move(trial);
  }

  out.policy.u = u;
  out.policy.objective = roll.cost;
  out.policy.projected_gradient = pg;
  out.policy.iterations = iter;
  return out;
}

}  // namespace

ControlPolicy solve_cstr_mpc(const CstrMpcProblem& prob, const CstrState& s,
                             const std::optional<Vector>& warm) {
  std::vector<Vector> starts;
  if (warm.has_value()) {
    if (warm->size() != prob.N)
      throw std::invalid_argument("solve_cstr_mpc: warm start length");
    starts.push_back(*warm);
  }
  starts.push_back(Vector::Zero(prob.N));
  starts.push_back(Vector::Constant(prob.N, prob.u_max));
  starts.push_back(Vector::Constant(prob.N, prob.u_min));

  std::optional<SqpOutcome> best;
  bool any_converged = false;
  for (const Vector& u0 : starts) {
    SqpOutcome o = sqp_from_start(prob, s, u0);
    any_converged = any_converged || o.converged;
    const bool better =
        !best || (o.converged && !best->converged) ||
        (o.converged == best->converged &&
         (o.policy.objective < best->policy.objective - 1e-12 ||
          (std::abs(o.policy.objective - best->policy.objective) <= 1e-12 &&
           o.policy.u.norm() < best->policy.u.norm())));
    if (better) best = std::move(o);
  }
  if (!any_converged)
    throw SolverFailure("solve_cstr_mpc: no start reached the projected-gradient tolerance",
                        best->policy);
  return best->policy;
}

double evaluate_cstr_cost(const CstrMpcProblem& prob, const CstrState& s,
                          const Vector& u) {
  if (u.size() != prob.N)
    throw std::invalid_argument("evaluate_cstr_cost: policy length");
  return cstr_rollout(prob, s, u, false).cost;
}

Vector cstr_cost_gradient(const CstrMpcProblem& prob, const CstrState& s,
                          const Vector& u) {
  if (u.size() != prob.N)
    throw std::invalid_argument("cstr_cost_gradient: policy length");
  CstrRollout roll = cstr_rollout(prob, s, u, true);
  return 2.0 * roll.jacobian.transpose() * roll.residuals;
}

}  // namespace mlmpc
