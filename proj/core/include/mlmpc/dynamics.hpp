#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "mlmpc/linalg.hpp"

namespace mlmpc {

struct LinearSystem {
  Matrix A, B, C;

  // The two benchmark plants. Both are 2-state single-input with full state
  // output (C = I).
  static LinearSystem singularly_perturbed();
  static LinearSystem bemporad();
};

Vector step_linear(const LinearSystem& sys, const Vector& x, const Vector& u);

struct LinearDiagnostics {
  std::vector<double> eigenvalue_moduli;  // |eig(A)|, descending
  std::vector<double> hankel;             // Hankel singular values, descending
};

// Requires Schur stability (spectral radius < 1) for the Gramians.
LinearDiagnostics linear_diagnostics(const LinearSystem& sys);

struct CstrParams {
  double e_over_r = 6000.0;           // activation temperature, K
  double k0 = std::exp(17.5);         // pre-exponential factor, 1/s
  double dh_rhocp = -16.0;            // heat of reaction ΔH/(ρCp), K·L/mol; < 0 exothermic
  double ua_rhocpv = 0.3;             // heat transfer UA/(ρCp·V), 1/s
  double q_over_v = 1.0;              // dilution rate q/V, 1/s
  double ca0 = 10.0;                  // inlet concentration, mol/L
  double t0 = 300.0;                  // inlet temperature, K
};

struct NondimMap {
  double conc_scale = 10.0;    // mol/L
  double temp_offset = 300.0;  // K
  double temp_scale = 100.0;   // K

  double conc_to_hat(double c) const { return c / conc_scale; }
  double conc_from_hat(double c_hat) const { return c_hat * conc_scale; }
  double temp_to_hat(double t) const { return (t - temp_offset) / temp_scale; }
  double temp_from_hat(double t_hat) const { return t_hat * temp_scale + temp_offset; }
};

// Nondimensional reactor state. The product concentration is implied by the
// stoichiometric invariant C_B = C_A0 - C_A.
struct CstrState {
  double ca_hat = 0.0;
  double tr_hat = 0.0;

  double cb_hat(double ca0_hat = 1.0) const { return ca0_hat - ca_hat; }
};

// Dimensional time derivatives (mol/L/s, K/s) of (C_A, T_r) at coolant
// temperature tc (K), with Arrhenius rate k = k0 exp(-E/(R T_r)).
std::pair<double, double> cstr_rhs(const CstrParams& p, double ca, double tr,
                                   double tc);

// Advances one sampling interval under constant nondimensional coolant input
// tc_hat, RK4 with fixed substeps.
CstrState integrate_cstr(const CstrParams& p, const CstrState& s, double tc_hat,
                         double dt = 0.05, int substeps = 10);

// Same step plus the exact tangent of the step map: a = d(next)/d(state),
// b = d(next)/d(tc_hat), propagated through every RK4 stage.
struct CstrStepTangent {
  CstrState next;
  Eigen::Matrix2d a;
  Eigen::Vector2d b;
};
CstrStepTangent integrate_cstr_tangent(const CstrParams& p, const CstrState& s,
                                       double tc_hat, double dt = 0.05,
                                       int substeps = 10);

// Jacobian of the nondimensional RHS with respect to (ca_hat, tr_hat).
Eigen::Matrix2d cstr_jacobian(const CstrParams& p, const CstrState& s,
                              double tc_hat);

struct SteadyBranch {
  CstrState state;
  bool stable = false;
};

struct SteadyStates {
  double tc_hat = 0.0;
  std::vector<SteadyBranch> branches;
};

// All real steady states at each coolant level, found by bracketing the
// reduced scalar steady-state equation in reactor temperature; stability from
// the continuous-time Jacobian (Re(eig) < -1e-9).
std::vector<SteadyStates> compute_steady_states(
    const CstrParams& p, const std::vector<double>& tc_hat_grid);

struct FoldPoint {
  double tc_hat = 0.0;
  double conversion = 0.0;  // cb_hat where the branches collide
};

struct BifurcationScan {
  std::vector<SteadyStates> points;
  std::vector<FoldPoint> folds;
};

// Scans tc_hat over [lo, hi]; folds located exactly as the turning points of
// the steady-state locus parametrized by reactor temperature.
BifurcationScan bifurcation_scan(const CstrParams& p, double tc_hat_lo,
                                 double tc_hat_hi, int count);

}  // namespace mlmpc
