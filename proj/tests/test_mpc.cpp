#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mlmpc/mpc.hpp"
#include "mlmpc/rng.hpp"

using namespace mlmpc;

namespace {

// Objective recomputed from scratch so the library rollout has an
// independent witness.
double rollout_cost(const LinearMpcProblem& p, Vector x, const Vector& u) {
  double c = 0.0;
  for (int i = 0; i < p.N; ++i) {
    c += x.dot(p.Q * x) + p.R(0, 0) * u(i) * u(i);
    x = p.sys.A * x + p.sys.B * Vector::Constant(1, u(i));
  }
  return c + x.dot(p.Qt * x);
}

Vector random_policy(const LinearMpcProblem& p, Rng& rng) {
  Vector u(p.N);
  for (int i = 0; i < p.N; ++i) u(i) = rng.uniform(p.u_min, p.u_max);
  return u;
}

bool cstr_feasible(const CstrMpcProblem& p, const Vector& u) {
  for (int i = 0; i < u.size(); ++i) {
    if (u(i) < p.u_min - 1e-12 || u(i) > p.u_max + 1e-12) return false;
    if (i + 1 < u.size() && std::abs(u(i + 1) - u(i)) > p.rate_bound + 1e-12)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("terminal cost solves the discrete Lyapunov equation") {
  const Matrix Q = Matrix::Identity(2, 2);
  CHECK((terminal_cost(Matrix::Zero(2, 2), Q) - Q).norm() < 1e-14);

  const Matrix Qt1 = terminal_cost(Matrix::Constant(1, 1, 0.5),
                                   Matrix::Identity(1, 1));
  CHECK(Qt1(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  const Matrix A = LinearSystem::bemporad().A;
  const Matrix Qt = terminal_cost(A, Q);
  CHECK((A.transpose() * Qt * A + Q - Qt).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((Qt - Qt.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(terminal_cost(Matrix::Identity(2, 2), Q), std::domain_error);
}

TEST_CASE("the benchmark problems carry their published shapes") {
  const auto sp = LinearMpcProblem::singular();
  CHECK(sp.N == 5);
  CHECK(sp.u_max == 0.5);
  CHECK(sp.R(0, 0) == 0.01);
  CHECK_FALSE(sp.quad_constraint);

  const auto bp = LinearMpcProblem::bemporad();
  CHECK(bp.N == 10);
  CHECK(bp.u_max == 2.0);

  const auto qp = LinearMpcProblem::quad_constrained();
  CHECK(qp.N == 6);
  CHECK(qp.u_max == 2.0);
  CHECK(qp.quad_constraint);
}

TEST_CASE("evaluate_cost equals an independent rollout") {
  Rng rng(11);
  for (const auto& prob :
       {LinearMpcProblem::singular(), LinearMpcProblem::bemporad()}) {
    for (int trial = 0; trial < 5; ++trial) {
      Vector x(2);
      x << rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0);
      const Vector u = random_policy(prob, rng);
      CHECK(evaluate_cost(prob, x, u) ==
            doctest::Approx(rollout_cost(prob, x, u)).epsilon(1e-9));
    }
  }
  Vector x(2);
  x.setZero();
  CHECK_THROWS_AS(evaluate_cost(LinearMpcProblem::singular(), x, Vector::Zero(4)),
                  std::invalid_argument);
}

TEST_CASE("the condensed quadratic reproduces objective differences") {
  Rng rng(12);
  for (const auto& prob :
       {LinearMpcProblem::singular(), LinearMpcProblem::bemporad()}) {
    Vector x(2);
    x << 1.3, -0.7;
    const QpProblem qp = condensed_qp(prob, x);
    const double base = evaluate_cost(prob, x, Vector::Zero(prob.N));
    for (int trial = 0; trial < 8; ++trial) {
      const Vector u = random_policy(prob, rng);
      const double quad = 0.5 * u.dot(qp.H * u) + qp.f.dot(u);
      CHECK(evaluate_cost(prob, x, u) - base ==
            doctest::Approx(quad).epsilon(1e-9));
    }
    CHECK((qp.H - qp.H.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("at the origin the optimal policy is zero with zero cost") {
  Vector x = Vector::Zero(2);
  for (const auto& prob :
       {LinearMpcProblem::singular(), LinearMpcProblem::bemporad()}) {
    const ControlPolicy p = solve_linear_mpc(prob, x);
    CHECK(p.u.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(p.objective < 1e-20);
  }
}

TEST_CASE("an interior solution matches the dense normal equations") {
  const auto prob = LinearMpcProblem::singular();
  Vector x(2);
  x << 0.02, -0.015;
  const QpProblem qp = condensed_qp(prob, x);
  const Vector dense = qp.H.ldlt().solve(-qp.f);
  REQUIRE(dense.cwiseAbs().maxCoeff() < prob.u_max);  // genuinely interior

  const ControlPolicy p = solve_linear_mpc(prob, x);
  CHECK((p.u - dense).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(p.kkt.max() < 1e-6);
}

TEST_CASE("a distant state saturates the first input exactly") {
  const auto prob = LinearMpcProblem::singular();
  Vector x(2);
  x << 3.0, 3.0;
  const ControlPolicy p = solve_linear_mpc(prob, x);
  CHECK(std::abs(p.u(0)) == prob.u_max);  // snapped, not merely close
  CHECK(p.kkt.max() < 1e-6);
}

TEST_CASE("no random feasible policy beats the solver") {
  Rng rng(13);
  for (const auto& prob :
       {LinearMpcProblem::singular(), LinearMpcProblem::bemporad()}) {
    for (int trial = 0; trial < 3; ++trial) {
      Vector x(2);
      x << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
      const ControlPolicy p = solve_linear_mpc(prob, x);
      for (int c = 0; c < 100; ++c) {
        const Vector u = random_policy(prob, rng);
        CHECK(p.objective <= evaluate_cost(prob, x, u) + 1e-9);
      }
    }
  }
}

TEST_CASE("the control law is piecewise affine along a line of states") {
  const auto prob = LinearMpcProblem::bemporad();
  Vector xa(2), xb(2);
  xa << -4.0, -1.5;
  xb << 4.0, 1.5;

  const int n = 161;
  std::vector<double> u0(n);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    const Vector x = (1.0 - t) * xa + t * xb;
    u0[i] = solve_linear_mpc(prob, x).u(0);
  }

  int kinks = 0;
  for (int i = 1; i + 1 < n; ++i) {
    const double d2 = u0[i + 1] - 2.0 * u0[i] + u0[i - 1];
    if (std::abs(d2) >= 1e-5)
      ++kinks;
  }
  CHECK(kinks >= 1);    // the active set changes along this segment
  CHECK(kinks <= 20);   // but only at isolated breakpoints
}

TEST_CASE("the quadratic constraint pins the policy to zero at the origin") {
  const auto prob = LinearMpcProblem::quad_constrained();
  const ControlPolicy p = solve_quadratic_constrained_mpc(prob, Vector::Zero(2));
  CHECK(p.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.objective == 0.0);
}

TEST_CASE("far from the origin the quadratic constraint is inactive") {
  const auto prob = LinearMpcProblem::quad_constrained();
  Vector x(2);
  x << 4.0, -2.5;
  REQUIRE(x.norm() > prob.u_max);
  const ControlPolicy with = solve_quadratic_constrained_mpc(prob, x);
  const ControlPolicy without = solve_linear_mpc(prob, x);
  CHECK((with.u - without.u).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("near the origin the first input rides the ||x|| bound") {
  const auto prob = LinearMpcProblem::quad_constrained();
  int active = 0;
  for (int i = 0; i < 12; ++i) {
    const double th = 2.0 * M_PI * i / 12;
    Vector x(2);
    x << 0.4 * std::cos(th), 0.4 * std::sin(th);
    const ControlPolicy p = solve_quadratic_constrained_mpc(prob, x);
    CHECK(std::abs(p.u(0)) <= x.norm() + 1e-6);
    if (std::abs(std::abs(p.u(0)) - x.norm()) <= 1e-6) ++active;
  }
  CHECK(active >= 1);
}

TEST_CASE("holding the reactor at its setpoint equilibrium costs nothing") {
  CstrMpcProblem prob;
  const CstrState s{0.5, 3.0 / 7.0};  // exact equilibrium for tc_hat = -17/21
  const ControlPolicy p = solve_cstr_mpc(prob, s);
  CHECK(p.objective < 1e-6);
  CHECK(p.u(0) == doctest::Approx(-17.0 / 21.0).epsilon(0.05));
  CHECK(p.projected_gradient < 1e-5);
}

TEST_CASE("reactor policies respect box and rate limits") {
  CstrMpcProblem prob;
  for (const CstrState s : {CstrState{1.0, 0.0}, CstrState{0.2, 0.6}}) {
    const ControlPolicy p = solve_cstr_mpc(prob, s);
    CHECK(cstr_feasible(prob, p.u));
    CHECK(p.objective ==
          doctest::Approx(evaluate_cstr_cost(prob, s, p.u)).epsilon(1e-12));
  }
}

TEST_CASE("feasible probes around the reactor optimum do not improve it") {
  CstrMpcProblem prob;
  const CstrState s{0.7, 0.2};
  const ControlPolicy p = solve_cstr_mpc(prob, s);
  int probed = 0;
  for (int k : {0, prob.N / 2, prob.N - 1}) {
    for (double d : {0.01, -0.01}) {
      Vector u = p.u;
      u(k) += d;
      if (!cstr_feasible(prob, u)) continue;
      ++probed;
      CHECK(evaluate_cstr_cost(prob, s, u) >= p.objective - 1e-6);
    }
  }
  CHECK(probed >= 1);
}

TEST_CASE("warm starts are validated and never hurt") {
  CstrMpcProblem prob;
  const CstrState s{0.8, 0.1};
  CHECK_THROWS_AS(solve_cstr_mpc(prob, s, Vector::Zero(3)),
                  std::invalid_argument);

  const ControlPolicy cold = solve_cstr_mpc(prob, s);
  const ControlPolicy warm = solve_cstr_mpc(prob, s, cold.u);
  CHECK(warm.objective <= cold.objective + 1e-9);
}

TEST_CASE("the rollout gradient matches central differences") {
  CstrMpcProblem prob;
  const CstrState s{0.6, 0.3};
  Vector u(prob.N);
  for (int i = 0; i < prob.N; ++i) u(i) = -1.0 + 0.04 * i;
  REQUIRE(cstr_feasible(prob, u));

  const Vector g = cstr_cost_gradient(prob, s, u);
  Vector fd(prob.N);
  const double h = 1e-6;
  for (int i = 0; i < prob.N; ++i) {
    Vector up = u, um = u;
    up(i) += h;
    um(i) -= h;
    fd(i) = (evaluate_cstr_cost(prob, s, up) -
             evaluate_cstr_cost(prob, s, um)) / (2.0 * h);
  }
  CHECK((g - fd).norm() / fd.norm() < 1e-5);
}

TEST_CASE("the reactor objective is a pure tracking sum") {
  CstrMpcProblem prob;
  const CstrState s{0.9, 0.05};
  const Vector u = Vector::Zero(prob.N);
  double expect = 0.0;
  CstrState x = s;
  for (int i = 0; i < prob.N; ++i) {
    x = integrate_cstr(prob.params, x, u(i), prob.dt, prob.substeps);
    const double r = x.cb_hat() - prob.r0;
    expect += r * r;
  }
  CHECK(evaluate_cstr_cost(prob, s, u) == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(evaluate_cstr_cost(prob, s, Vector::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("solver failure reports carry the best policy found") {
  ControlPolicy best;
  best.u = Vector::Constant(3, 0.25);
  best.objective = 7.5;
  const SolverFailure f("no start converged", best);
  CHECK(f.best_effort.objective == 7.5);
  CHECK(f.best_effort.u(1) == 0.25);
  CHECK(std::string(f.what()) == "no start converged");
}
