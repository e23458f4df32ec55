#include "mlmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mlmpc {

namespace {

// Working-set member: variable bound (id < n) or general row (id - n).
// side: -1 at lower, +1 at upper, 0 pinned (lo == hi, never dropped).
struct ActiveEntry {
  int id;
  int side;
};

constexpr double kStepTol = 1e-12;
constexpr double kMultTol = 1e-10;
constexpr double kDirTol = 1e-13;

}  // namespace

double KktCertificate::max() const {
  return std::max({stationarity, feasibility, complementarity});
}

QpResult solve_qp(const QpProblem& problem, const std::optional<Vector>& x0) {
  const Matrix& H = problem.H;
  const Vector& f = problem.f;
  const int n = static_cast<int>(H.rows());
  const int m = static_cast<int>(problem.A.rows());
  if (H.cols() != n || f.size() != n || problem.lo.size() != n ||
      problem.hi.size() != n)
    throw std::invalid_argument("solve_qp: inconsistent dimensions");
  if (m > 0 && (problem.A.cols() != n || problem.a_lo.size() != m ||
                problem.a_hi.size() != m))
    throw std::invalid_argument("solve_qp: inconsistent row dimensions");
  if ((problem.hi - problem.lo).minCoeff() < 0.0)
    throw std::invalid_argument("solve_qp: lo > hi");

  Vector x;
  if (x0.has_value()) {
    x = *x0;
    if (x.size() != n) throw std::invalid_argument("solve_qp: x0 size");
  } else {
    x = H.llt().solve(-f);
  }
  for (int j = 0; j < n; ++j)
    x(j) = std::min(problem.hi(j), std::max(problem.lo(j), x(j)));
  if (m > 0) {
    Vector ax = problem.A * x;
    for (int i = 0; i < m; ++i)
      if (ax(i) < problem.a_lo(i) - 1e-9 || ax(i) > problem.a_hi(i) + 1e-9)
        throw std::invalid_argument(
            "solve_qp: starting point violates a general row; pass feasible x0");
  }

  std::vector<ActiveEntry> active;
  std::vector<int> var_state(n, 0), row_state(m, 0);  // 0 free, else side
  auto activate = [&](int id, int side) {
    active.push_back({id, side});
    (id < n ? var_state[id] : row_state[id - n]) = side;
  };
  for (int j = 0; j < n; ++j) {
    if (problem.hi(j) - problem.lo(j) <= 0.0)
      activate(j, 0);
    else if (x(j) >= problem.hi(j))
      activate(j, +1);
    else if (x(j) <= problem.lo(j))
      activate(j, -1);
  }

  Vector mu;  // multipliers of the current working set
  const int max_iter = 40 * (n + m) + 20;
  QpResult result;

  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const int k = static_cast<int>(active.size());
    Matrix C(k, n);
    for (int a = 0; a < k; ++a) {
      if (active[a].id < n)
        C.row(a) = Vector::Unit(n, active[a].id);
      else
        C.row(a) = problem.A.row(active[a].id - n);
    }

    Vector g = H * x + f;
    Matrix kkt = Matrix::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = H;
    if (k > 0) {
      kkt.topRightCorner(n, k) = C.transpose();
      kkt.bottomLeftCorner(k, n) = C;
    }
    Vector rhs = Vector::Zero(n + k);
    rhs.head(n) = -g;
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) {
      // Dependent working set; discard the most recent inequality member.
      for (int a = k - 1; a >= 0; --a) {
        if (active[a].side != 0) {
          (active[a].id < n ? var_state[active[a].id]
                            : row_state[active[a].id - n]) = 0;
          active.erase(active.begin() + a);
          break;
        }
      }
      continue;
    }
    Vector sol = lu.solve(rhs);
    Vector p = sol.head(n);
    mu = sol.tail(k);

    if (p.lpNorm<Eigen::Infinity>() <= kStepTol * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      // Stationary on the working set; check multiplier signs.
      // At an upper-side constraint KKT requires mu >= 0, at lower mu <= 0.
      int worst = -1;
      double worst_violation = kMultTol * (1.0 + g.lpNorm<Eigen::Infinity>());
      for (int a = 0; a < k; ++a) {
        if (active[a].side == 0) continue;
        double violation = active[a].side > 0 ? -mu(a) : mu(a);
        if (violation > worst_violation) {
          worst_violation = violation;
          worst = a;
        }
      }
      if (worst < 0) {
        result.converged = true;
        break;
      }
      (active[worst].id < n ? var_state[active[worst].id]
                            : row_state[active[worst].id - n]) = 0;
      active.erase(active.begin() + worst);
      continue;
    }

    // Ratio test against every inactive bound and row side.
    double alpha = 1.0;
    int block_id = -1, block_side = 0;
    for (int j = 0; j < n; ++j) {
      if (var_state[j] != 0) continue;
      if (p(j) > kDirTol) {
        double a = (problem.hi(j) - x(j)) / p(j);
        if (a < alpha) { alpha = a; block_id = j; block_side = +1; }
      } else if (p(j) < -kDirTol) {
        double a = (problem.lo(j) - x(j)) / p(j);
        if (a < alpha) { alpha = a; block_id = j; block_side = -1; }
      }
    }
    for (int i = 0; i < m; ++i) {
      if (row_state[i] != 0) continue;
      double r = problem.A.row(i).dot(p);
      double axi = problem.A.row(i).dot(x);
      if (r > kDirTol) {
        double a = (problem.a_hi(i) - axi) / r;
        if (a < alpha) { alpha = a; block_id = n + i; block_side = +1; }
      } else if (r < -kDirTol) {
        double a = (problem.a_lo(i) - axi) / r;
        if (a < alpha) { alpha = a; block_id = n + i; block_side = -1; }
      }
    }
    alpha = std::max(alpha, 0.0);
    x += alpha * p;
    if (block_id >= 0) activate(block_id, block_side);
    // The KKT solve zeroes p on the working set only to roundoff; re-snapping
    // every active bound keeps those coordinates exactly on their bounds.
    for (const ActiveEntry& e : active)
      if (e.id < n)
        x(e.id) = e.side > 0 ? problem.hi(e.id) : problem.lo(e.id);
  }
  result.iterations = iter;

  result.x = x;
  result.bound_mult = Vector::Zero(n);
  result.row_mult = Vector::Zero(m);
  for (std::size_t a = 0; a < active.size(); ++a) {
    if (static_cast<int>(a) >= mu.size()) break;
    if (active[a].id < n)
      result.bound_mult(active[a].id) = mu(a);
    else
      result.row_mult(active[a].id - n) = mu(a);
  }
  result.kkt = check_kkt(problem, result);
  return result;
}

QpResult solve_box_qp(const Matrix& H, const Vector& f, const Vector& lo,
                      const Vector& hi) {
  QpProblem p;
  p.H = H;
  p.f = f;
  p.lo = lo;
  p.hi = hi;
  p.A = Matrix::Zero(0, H.rows());
  p.a_lo = Vector::Zero(0);
  p.a_hi = Vector::Zero(0);
  return solve_qp(p);
}

KktCertificate check_kkt(const QpProblem& problem, const QpResult& result) {
  const int n = static_cast<int>(problem.H.rows());
  const int m = static_cast<int>(problem.A.rows());
  const Vector& x = result.x;

  Vector g = problem.H * x + problem.f + result.bound_mult;
  if (m > 0) g += problem.A.transpose() * result.row_mult;

  KktCertificate cert;
  cert.stationarity = g.lpNorm<Eigen::Infinity>();

  for (int j = 0; j < n; ++j) {
    cert.feasibility = std::max({cert.feasibility, problem.lo(j) - x(j),
                                 x(j) - problem.hi(j)});
    double mult = result.bound_mult(j);
    if (problem.hi(j) - problem.lo(j) <= 0.0) continue;  // pinned: any sign
    double slack = mult > 0 ? problem.hi(j) - x(j) : x(j) - problem.lo(j);
    cert.complementarity = std::max(cert.complementarity, std::abs(mult * slack));
  }
  for (int i = 0; i < m; ++i) {
    double axi = problem.A.row(i).dot(x);
    cert.feasibility = std::max({cert.feasibility, problem.a_lo(i) - axi,
                                 axi - problem.a_hi(i)});
    double mult = result.row_mult(i);
    double slack = mult > 0 ? problem.a_hi(i) - axi : axi - problem.a_lo(i);
    cert.complementarity = std::max(cert.complementarity, std::abs(mult * slack));
  }
  cert.feasibility = std::max(cert.feasibility, 0.0);
  return cert;
}

}  // namespace mlmpc
