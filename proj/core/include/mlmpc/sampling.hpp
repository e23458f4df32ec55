#pragma once

#include <string>
#include <vector>

#include "mlmpc/mpc.hpp"

namespace mlmpc {

enum class Parametrization { kAlpha, kBeta, kGamma };

std::string to_string(Parametrization tag);
Parametrization parametrization_from_string(const std::string& name);

// Augmented state x*: plant-derived coordinates with the reference appended
// as the last element. alpha = [ca_hat, tr_hat, r0]; beta = [reaction rate,
// heating rate, r0] in nondimensional form; gamma concatenates both around
// the shared r0.
struct AugmentedState {
  Vector values;
  Parametrization tag = Parametrization::kAlpha;

  double r0() const { return values(values.size() - 1); }
};

AugmentedState augment(const CstrState& s, double r0, Parametrization tag,
                       const CstrParams& p = {});

// Paired states and policies with a reproducible train/test split.
struct PolicyDataset {
  Matrix X_star;  // n x d augmented states (or plain states for the grids)
  Matrix U_star;  // n x N policies
  std::vector<int> train_idx, test_idx;
  std::uint64_t seed = 0;
  int excluded = 0;  // rows dropped due to solver failures

  Matrix train_X() const;
  Matrix train_U() const;
  Matrix test_X() const;
  Matrix test_U() const;
};

// Cartesian product of per-dimension linspace points, row-major (last
// dimension fastest).
Matrix grid_sample(const std::vector<std::pair<double, double>>& bounds,
                   const std::vector<int>& counts);

// One MPC solve per grid row; regulation problems carry no reference, so
// X_star holds the raw states.
PolicyDataset generate_linear_dataset(const LinearMpcProblem& prob,
                                      const Matrix& grid, unsigned jobs = 0);

struct CstrSamplingConfig {
  double ca_lo = 0.1, ca_hi = 0.9;
  double tr_lo = 0.0, tr_hi = 0.55;
  double r0_lo = 0.1, r0_hi = 0.9;
  int n_init = 200;
  int rollout = 20;
  std::uint64_t seed = 0;
};

// Receding-horizon rollouts: sample an initial state and a constant
// reference per rollout, then repeatedly solve, record (x, r0, u*), apply
// the first input, and integrate one sample. X_star rows are [ca, tr, r0]
// (the alpha parametrization; others derive from it via augment).
PolicyDataset generate_cstr_dataset(const CstrMpcProblem& prob,
                                    const CstrSamplingConfig& config,
                                    unsigned jobs = 0);

// Applies a parametrization to the [ca, tr, r0] rows of a CSTR dataset.
Matrix augment_rows(const Matrix& x_star, Parametrization tag,
                    const CstrParams& p = {});

// Seed-reproducible disjoint exhaustive partition.
void split(PolicyDataset& ds, int n_train, std::uint64_t seed);

}  // namespace mlmpc
