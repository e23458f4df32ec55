#pragma once

#include <optional>

#include "mlmpc/approx.hpp"
#include "mlmpc/mpc.hpp"
#include "mlmpc/sampling.hpp"

namespace mlmpc {

// Two-stage explicit controller: x* -> manifold coordinates -> policy,
// followed by deterministic feasibility repair (box clip, then a forward
// rate-limit pass).
struct ExplicitController {
  Approximator state_to_manifold;
  Approximator manifold_to_policy;
  Parametrization tag = Parametrization::kAlpha;
  int N = 20;
  double u_min = -2.0, u_max = 2.0, rate_bound = 0.5;
};

Vector clip_policy(const Vector& u, double u_min, double u_max, double rate_bound);

ControlPolicy predict_policy(const ExplicitController& c, const Vector& x_star);
double control_law(const ExplicitController& c, const Vector& x_star);

// Inverse problem: policy -> manifold -> x*. Confidence is withdrawn when
// the policy pushes against a box bound, where the inverse map is not
// single-valued.
struct InverseObserver {
  Approximator policy_to_manifold;
  Approximator manifold_to_state;
  double u_min = -2.0, u_max = 2.0;
  double saturation_tol = 1e-3;
};

struct StateEstimate {
  Vector x_star;
  bool confident = true;
};

StateEstimate observe_state(const InverseObserver& o, const Vector& policy);

bool policy_saturated(const Vector& policy, double u_min, double u_max,
                      double tol);

struct ReferenceSchedule {
  // (start step, reference) segments; the first must start at 0.
  std::vector<std::pair<int, double>> segments = {{0, 0.5}};

  double at(int step) const;
};

// Parses "0:0.5,60:0.3,120:0.7" into segments; starts must begin at 0 and
// strictly increase.
ReferenceSchedule parse_schedule(const std::string& text);

struct ClosedLoopTrace {
  std::vector<CstrState> states;      // true plant states, one per step
  std::vector<double> references;
  std::vector<double> actions;
  std::vector<double> implicit_actions;  // empty unless computed alongside
  std::vector<CstrState> noise;       // per-step observation noise draws
  double sigma = 0.0;
  std::uint64_t seed = 0;
  bool diverged = false;
};

// Steps the plant under observation noise: at each step the controller sees
// the true state plus N(0, sigma^2) per nondimensional component, forms x*,
// applies its action, and the true plant integrates one sample.
// `use_implicit` selects the implicit MPC itself as the acting controller.
ClosedLoopTrace simulate_closed_loop(const CstrMpcProblem& prob,
                                     const ExplicitController& controller,
                                     const ReferenceSchedule& schedule,
                                     double sigma, int steps, std::uint64_t seed,
                                     const CstrState& start,
                                     bool use_implicit = false);

struct ComparisonMetrics {
  double tracking_mse_explicit = 0.0;
  double tracking_mse_implicit = 0.0;
  double tracking_mse_explicit_settled = 0.0;  // after per-segment transient
  double tracking_mse_implicit_settled = 0.0;
  double mean_action_deviation = 0.0;
  double max_action_deviation = 0.0;
  int transient_steps = 20;
};

ComparisonMetrics compare_controllers(const ClosedLoopTrace& trace_explicit,
                                      const ClosedLoopTrace& trace_implicit,
                                      int transient_steps = 20);

}  // namespace mlmpc
