#include "mlmpc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlmpc {

LinearSystem LinearSystem::singularly_perturbed() {
  LinearSystem s;
  s.A = Matrix{{0.4079, 0.4031}, {0.4157, 0.4109}};
  s.B = Matrix{{0.7071}, {0.7071}};
  s.C = Matrix::Identity(2, 2);
  return s;
}

LinearSystem LinearSystem::bemporad() {
  LinearSystem s;
  s.A = Matrix{{0.7326, -0.0861}, {0.1722, 0.9909}};
  s.B = Matrix{{0.0609}, {0.0064}};
  s.C = Matrix::Identity(2, 2);
  return s;
}

Vector step_linear(const LinearSystem& sys, const Vector& x, const Vector& u) {
  if (x.size() != sys.A.rows() || u.size() != sys.B.cols())
    throw std::invalid_argument("step_linear: dimension mismatch");
  return sys.A * x + sys.B * u;
}

LinearDiagnostics linear_diagnostics(const LinearSystem& sys) {
  LinearDiagnostics d;
  Eigen::EigenSolver<Matrix> es(sys.A);
  double rho = 0.0;
  for (Eigen::Index i = 0; i < sys.A.rows(); ++i) {
    d.eigenvalue_moduli.push_back(std::abs(es.eigenvalues()(i)));
    rho = std::max(rho, d.eigenvalue_moduli.back());
  }
  std::sort(d.eigenvalue_moduli.begin(), d.eigenvalue_moduli.end(),
            std::greater<double>());
  if (rho >= 1.0)
    throw std::domain_error(
        "linear_diagnostics: spectral radius >= 1, Gramians undefined");
  d.hankel = hankel_singular_values(sys.A, sys.B, sys.C);
  return d;
}

std::pair<double, double> cstr_rhs(const CstrParams& p, double ca, double tr,
                                   double tc) {
  if (tr <= 0.0 || tc <= 0.0)
    throw std::domain_error("cstr_rhs: absolute temperature must be positive");
  const double k = p.k0 * std::exp(-p.e_over_r / tr);
  const double ca_dot = p.q_over_v * (p.ca0 - ca) - k * ca;
  const double tr_dot = p.q_over_v * (p.t0 - tr) - p.dh_rhocp * k * ca +
                        p.ua_rhocpv * (tc - tr);
  return {ca_dot, tr_dot};
}

namespace {

// Nondimensional RHS and its Jacobian; the canonical internal form.
struct NondimRhs {
  double f1, f2;        // d(ca_hat)/dt, d(tr_hat)/dt
  double j11, j12, j21, j22;
  double dj_du2;        // d f2 / d tc_hat (f1 does not depend on the input)
};

NondimRhs nondim_rhs(const CstrParams& p, const NondimMap& m, double ca_hat,
                     double tr_hat, double tc_hat) {
  const double tr = m.temp_from_hat(tr_hat);
  const double k = p.k0 * std::exp(-p.e_over_r / tr);
  const double kp_hat = k * p.e_over_r * m.temp_scale / (tr * tr);  // dk/d tr_hat
  const double ca0_hat = m.conc_to_hat(p.ca0);
  const double t0_hat = m.temp_to_hat(p.t0);
  const double heat = -p.dh_rhocp * m.conc_scale / m.temp_scale;

  NondimRhs r;
  r.f1 = p.q_over_v * (ca0_hat - ca_hat) - k * ca_hat;
  r.f2 = p.q_over_v * (t0_hat - tr_hat) + heat * k * ca_hat +
         p.ua_rhocpv * (tc_hat - tr_hat);
  r.j11 = -p.q_over_v - k;
  r.j12 = -kp_hat * ca_hat;
  r.j21 = heat * k;
  r.j22 = -p.q_over_v + heat * kp_hat * ca_hat - p.ua_rhocpv;
  r.dj_du2 = p.ua_rhocpv;
  return r;
}

}  // namespace

Eigen::Matrix2d cstr_jacobian(const CstrParams& p, const CstrState& s,
                              double tc_hat) {
  NondimRhs r = nondim_rhs(p, NondimMap{}, s.ca_hat, s.tr_hat, tc_hat);
  Eigen::Matrix2d j;
  j << r.j11, r.j12, r.j21, r.j22;
  return j;
}

CstrState integrate_cstr(const CstrParams& p, const CstrState& s, double tc_hat,
                         double dt, int substeps) {
  if (dt <= 0.0 || substeps < 1)
    throw std::invalid_argument("integrate_cstr: dt and substeps must be positive");
  const NondimMap m;
  const double h = dt / substeps;
  double ca = s.ca_hat, tr = s.tr_hat;
  for (int i = 0; i < substeps; ++i) {
    const NondimRhs k1 = nondim_rhs(p, m, ca, tr, tc_hat);
    const NondimRhs k2 = nondim_rhs(p, m, ca + 0.5 * h * k1.f1, tr + 0.5 * h * k1.f2, tc_hat);
    const NondimRhs k3 = nondim_rhs(p, m, ca + 0.5 * h * k2.f1, tr + 0.5 * h * k2.f2, tc_hat);
    const NondimRhs k4 = nondim_rhs(p, m, ca + h * k3.f1, tr + h * k3.f2, tc_hat);
    ca += h / 6.0 * (k1.f1 + 2.0 * k2.f1 + 2.0 * k3.f1 + k4.f1);
    tr += h / 6.0 * (k1.f2 + 2.0 * k2.f2 + 2.0 * k3.f2 + k4.f2);
    if (!std::isfinite(ca) || !std::isfinite(tr))
      throw std::domain_error("integrate_cstr: state diverged");
  }
  return {ca, tr};
}

CstrStepTangent integrate_cstr_tangent(const CstrParams& p, const CstrState& s,
                                       double tc_hat, double dt, int substeps) {
  if (dt <= 0.0 || substeps < 1)
    throw std::invalid_argument("integrate_cstr_tangent: dt and substeps must be positive");
  const NondimMap m;
  const double h = dt / substeps;

  Eigen::Vector2d x(s.ca_hat, s.tr_hat);
  // T = d(x)/d(x0, u): starts at [I | 0] and is advanced through each stage.
  Eigen::Matrix<double, 2, 3> T;
  T << 1, 0, 0, 0, 1, 0;

  auto stage = [&](const Eigen::Vector2d& xs, const Eigen::Matrix<double, 2, 3>& Ts) {
    const NondimRhs r = nondim_rhs(p, m, xs(0), xs(1), tc_hat);
    Eigen::Matrix2d J;
    J << r.j11, r.j12, r.j21, r.j22;
    Eigen::Vector2d f(r.f1, r.f2);
    Eigen::Matrix<double, 2, 3> K = J * Ts;
    K(1, 2) += r.dj_du2;
    return std::make_pair(f, K);
  };

  for (int i = 0; i < substeps; ++i) {
    const auto [f1, K1] = stage(x, T);
    const auto [f2, K2] = stage(x + 0.5 * h * f1, T + 0.5 * h * K1);
    const auto [f3, K3] = stage(x + 0.5 * h * f2, T + 0.5 * h * K2);
    const auto [f4, K4] = stage(x + h * f3, T + h * K3);
    x += h / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
    T += h / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
    if (!x.allFinite())
      throw std::domain_error("integrate_cstr_tangent: state diverged");
  }

  CstrStepTangent out;
  out.next = {x(0), x(1)};
  out.a = T.leftCols<2>();
  out.b = T.col(2);
  return out;
}

namespace {

// Steady-state locus parametrized by reactor temperature: at steady state
// C_A is determined by T_r, and the energy balance is linear in T_c.
double steady_ca(const CstrParams& p, double tr) {
  const double k = p.k0 * std::exp(-p.e_over_r / tr);
  return p.q_over_v * p.ca0 / (p.q_over_v + k);
}

double steady_tc(const CstrParams& p, double tr) {
  const double k = p.k0 * std::exp(-p.e_over_r / tr);
  return tr + (p.q_over_v * (tr - p.t0) + p.dh_rhocp * k * steady_ca(p, tr)) /
                  p.ua_rhocpv;
}

double steady_tc_slope(const CstrParams& p, double tr) {
  const double k = p.k0 * std::exp(-p.e_over_r / tr);
  const double kp = k * p.e_over_r / (tr * tr);
  const double ca = steady_ca(p, tr);
  const double ca_p = -p.q_over_v * p.ca0 * kp /
                      ((p.q_over_v + k) * (p.q_over_v + k));
  return 1.0 + (p.q_over_v + p.dh_rhocp * (kp * ca + k * ca_p)) / p.ua_rhocpv;
}

constexpr double kTrLow = 150.0, kTrHigh = 800.0;  // K, generous bracket
constexpr int kTrScan = 4000;

bool is_stable(const CstrParams& p, const CstrState& s, double tc_hat) {
  const Eigen::Matrix2d j = cstr_jacobian(p, s, tc_hat);
  const double tr = j.trace(), det = j.determinant();
  const double disc = tr * tr - 4.0 * det;
  double re_max;
  if (disc >= 0.0)
    re_max = 0.5 * (tr + std::sqrt(disc));
  else
    re_max = 0.5 * tr;
  return re_max < -1e-9;
}

}  // namespace

std::vector<SteadyStates> compute_steady_states(
    const CstrParams& p, const std::vector<double>& tc_hat_grid) {
  const NondimMap m;
  std::vector<SteadyStates> out;
  out.reserve(tc_hat_grid.size());
  for (double tc_hat : tc_hat_grid) {
    const double tc = m.temp_from_hat(tc_hat);
    SteadyStates entry;
    entry.tc_hat = tc_hat;
    auto g = [&](double tr) { return steady_tc(p, tr) - tc; };
    double prev_tr = kTrLow, prev_g = g(prev_tr);
    for (int i = 1; i <= kTrScan; ++i) {
      const double tr = kTrLow + (kTrHigh - kTrLow) * i / kTrScan;
      const double gi = g(tr);
      if (prev_g == 0.0 || (prev_g < 0.0) != (gi < 0.0)) {
        double a = prev_tr, b = tr;
        for (int it = 0; it < 80; ++it) {  // bisection to roundoff
          const double mid = 0.5 * (a + b);
          if ((g(a) < 0.0) != (g(mid) < 0.0))
            b = mid;
          else
            a = mid;
        }
        const double tr_root = 0.5 * (a + b);
        CstrState s{m.conc_to_hat(steady_ca(p, tr_root)), m.temp_to_hat(tr_root)};
        entry.branches.push_back({s, is_stable(p, s, tc_hat)});
      }
      prev_tr = tr;
      prev_g = gi;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

BifurcationScan bifurcation_scan(const CstrParams& p, double tc_hat_lo,
                                 double tc_hat_hi, int count) {
  if (count < 2) throw std::invalid_argument("bifurcation_scan: count >= 2");
  const NondimMap m;
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i)
    grid[i] = tc_hat_lo + (tc_hat_hi - tc_hat_lo) * i / (count - 1);

  BifurcationScan scan;
  scan.points = compute_steady_states(p, grid);

  // Folds: zeros of d tc / d T_r along the locus.
  double prev_tr = kTrLow, prev_s = steady_tc_slope(p, prev_tr);
  for (int i = 1; i <= kTrScan; ++i) {
    const double tr = kTrLow + (kTrHigh - kTrLow) * i / kTrScan;
    const double si = steady_tc_slope(p, tr);
    if ((prev_s < 0.0) != (si < 0.0)) {
      double a = prev_tr, b = tr;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (a + b);
        if ((steady_tc_slope(p, a) < 0.0) != (steady_tc_slope(p, mid) < 0.0))
          b = mid;
        else
          a = mid;
      }
      const double tr_fold = 0.5 * (a + b);
      const double tc_hat = m.temp_to_hat(steady_tc(p, tr_fold));
      if (tc_hat >= tc_hat_lo && tc_hat <= tc_hat_hi) {
        const double conv = 1.0 - steady_ca(p, tr_fold) / p.ca0;
        scan.folds.push_back({tc_hat, conv});
      }
    }
    prev_tr = tr;
    prev_s = si;
  }
  return scan;
}

}  // namespace mlmpc
