#include "mlmpc/controller.hpp"

#include <cmath>
#include <stdexcept>

#include "mlmpc/rng.hpp"

namespace mlmpc {

Vector clip_policy(const Vector& u, double u_min, double u_max,
                   double rate_bound) {
  Vector out = u.cwiseMax(u_min).cwiseMin(u_max);
  for (Eigen::Index i = 1; i < out.size(); ++i) {
    out(i) = std::clamp(out(i), out(i - 1) - rate_bound, out(i - 1) + rate_bound);
  }
  return out;
}

ControlPolicy predict_policy(const ExplicitController& c, const Vector& x_star) {
  const Matrix phi = predict(c.state_to_manifold, x_star.transpose());
  const Matrix u_raw = predict(c.manifold_to_policy, phi);
  if (u_raw.cols() != c.N) {
    throw std::runtime_error("predict_policy: policy head width mismatch");
  }
  ControlPolicy pol;
  pol.u = clip_policy(u_raw.row(0).transpose(), c.u_min, c.u_max, c.rate_bound);
  return pol;
}

double control_law(const ExplicitController& c, const Vector& x_star) {
  return predict_policy(c, x_star).u(0);
}

bool policy_saturated(const Vector& policy, double u_min, double u_max,
                      double tol) {
  for (Eigen::Index i = 0; i < policy.size(); ++i) {
    if (policy(i) <= u_min + tol || policy(i) >= u_max - tol) return true;
  }
  return false;
}

StateEstimate observe_state(const InverseObserver& o, const Vector& policy) {
  const Matrix phi = predict(o.policy_to_manifold, policy.transpose());
  const Matrix x = predict(o.manifold_to_state, phi);
  StateEstimate est;
  est.x_star = x.row(0).transpose();
  est.confident = !policy_saturated(policy, o.u_min, o.u_max, o.saturation_tol);
  return est;
}

double ReferenceSchedule::at(int step) const {
  if (segments.empty() || segments.front().first != 0) {
    throw std::logic_error("ReferenceSchedule: first segment must start at 0");
  }
  double r = segments.front().second;
  for (const auto& [start, value] : segments) {
    if (step >= start) r = value;
  }
  return r;
}

ClosedLoopTrace simulate_closed_loop(const CstrMpcProblem& prob,
                                     const ExplicitController& controller,
                                     const ReferenceSchedule& schedule,
                                     double sigma, int steps, std::uint64_t seed,
                                     const CstrState& start, bool use_implicit) {
  if (steps < 1) throw std::invalid_argument("simulate_closed_loop: steps < 1");
  ClosedLoopTrace trace;
  trace.sigma = sigma;
  trace.seed = seed;
  trace.states.reserve(static_cast<std::size_t>(steps) + 1);
  trace.states.push_back(start);

  // The noise stream depends only on the seed, so explicit and implicit
  // runs over the same seed see identical observations.
  Rng rng(seed);
  CstrState s = start;
  std::optional<Vector> warm;
  for (int k = 0; k < steps; ++k) {
    const double r0 = schedule.at(k);
    CstrState noise{sigma * rng.normal(), sigma * rng.normal()};
    trace.noise.push_back(noise);
    CstrState observed = s;
    observed.ca_hat += noise.ca_hat;
    observed.tr_hat += noise.tr_hat;

    double u = 0.0;
    if (use_implicit) {
      CstrMpcProblem local = prob;
      local.r0 = r0;
      ControlPolicy pol;
      try {
        pol = solve_cstr_mpc(local, observed, warm);
      } catch (const SolverFailure& failure) {
        pol = failure.best_effort;
      }
      u = pol.u(0);
      Vector shifted(pol.u.size());
      shifted.head(pol.u.size() - 1) = pol.u.tail(pol.u.size() - 1);
      shifted(pol.u.size() - 1) = pol.u(pol.u.size() - 1);
      warm = shifted;
    } else {
      const AugmentedState x_star = augment(observed, r0, controller.tag,
                                            prob.params);
      u = control_law(controller, x_star.values);
    }

    try {
      s = integrate_cstr(prob.params, s, u, prob.dt, prob.substeps);
    } catch (const std::domain_error&) {
      // The plant left the model's validity region mid-step; there is no
      // state to record, so the trace ends at the last valid one.
      trace.diverged = true;
      break;
    }
    if (std::abs(s.ca_hat) > 1e3 || std::abs(s.tr_hat) > 1e3) {
      trace.diverged = true;
      trace.references.push_back(r0);
      trace.actions.push_back(u);
      trace.states.push_back(s);
      break;
    }
    trace.references.push_back(r0);
    trace.actions.push_back(u);
    trace.states.push_back(s);
  }
  return trace;
}

ComparisonMetrics compare_controllers(const ClosedLoopTrace& trace_explicit,
                                      const ClosedLoopTrace& trace_implicit,
                                      int transient_steps) {
  const auto n = std::min(trace_explicit.actions.size(),
                          trace_implicit.actions.size());
  if (n == 0) throw std::invalid_argument("compare_controllers: empty traces");
  ComparisonMetrics m;
  m.transient_steps = transient_steps;

  auto accumulate = [&](const ClosedLoopTrace& t, double& full, double& settled) {
    double sum = 0.0, sum_settled = 0.0;
    int n_settled = 0;
    int since_change = transient_steps;  // first segment also gets a transient
    double prev_ref = t.references.empty() ? 0.0 : t.references.front();
    for (std::size_t k = 0; k < n; ++k) {
      if (k == 0 || t.references[k] != prev_ref) {
        since_change = 0;
        prev_ref = t.references[k];
      } else {
        ++since_change;
      }
      // Tracking error measured on the true plant state reached by this step.
      const double cb = t.states[k + 1].cb_hat();
      const double err = cb - t.references[k];
      sum += err * err;
      if (since_change >= transient_steps) {
        sum_settled += err * err;
        ++n_settled;
      }
    }
    full = sum / static_cast<double>(n);
    settled = n_settled > 0 ? sum_settled / n_settled : 0.0;
  };
  accumulate(trace_explicit, m.tracking_mse_explicit,
             m.tracking_mse_explicit_settled);
  accumulate(trace_implicit, m.tracking_mse_implicit,
             m.tracking_mse_implicit_settled);

  double dev_sum = 0.0, dev_max = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d =
        std::abs(trace_explicit.actions[k] - trace_implicit.actions[k]);
    dev_sum += d;
    dev_max = std::max(dev_max, d);
  }
  m.mean_action_deviation = dev_sum / static_cast<double>(n);
  m.max_action_deviation = dev_max;
  return m;
}

}  // namespace mlmpc
