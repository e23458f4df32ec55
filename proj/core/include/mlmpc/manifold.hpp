#pragma once

#include <vector>

#include "mlmpc/linalg.hpp"

namespace mlmpc {

struct InformedMetricConfig {
  double epsilon = 1.0;   // input-space scale
  double xi = 1.0;        // function-space scale
  int policy_prefix = 0;  // policy steps used as f(z); 0 = 2*dim(x*)+1, capped at N
};

// d = ||dz||^2 / epsilon + ||df||^2 / xi
double informed_distance(const Vector& z_i, const Vector& z_j, const Vector& f_i,
                         const Vector& f_j, const InformedMetricConfig& cfg);

// Number of leading policy columns entering the metric. Slicing is
// idempotent, so callers and dmaps may both apply it.
int effective_policy_prefix(const InformedMetricConfig& cfg, Eigen::Index x_dim,
                            Eigen::Index f_cols);

// epsilon = median ||dz||^2 / c_in, xi = median ||df||^2 / c_fn over a random
// subsample of at most 10^6 pairs; the defaults weight the median
// function-space term 100x the input-space term.
std::pair<double, double> tune_scales(const Matrix& X, const Matrix& F,
                                      double c_in = 0.1, double c_fn = 10.0,
                                      std::uint64_t seed = 0);

struct ManifoldEmbedding {
  std::vector<double> eigenvalues;  // descending, trivial pair removed
  Matrix phi;                       // unit-norm eigenvectors, one per column
  std::vector<int> kept;            // nonredundant column indices, ascending
  double epsilon = 0.0, xi = 0.0;
  double scaling_exponent = 0.0;    // k in phi * lambda^k

  // Selected coordinates, scaled by lambda^k.
  Matrix coordinates() const;
};

// Diffusion map with density normalization W~ = P^-a W P^-a and Markov
// operator A = D^-1 W~, eigendecomposed through the symmetric conjugate.
// The constant eigenvector is discarded; signs follow the
// largest-magnitude-entry-positive convention.
ManifoldEmbedding dmaps(const Matrix& X, const Matrix& F,
                        const InformedMetricConfig& cfg, int n_eigs = 10,
                        double alpha = 1.0);

struct LlrReport {
  std::vector<double> residuals;  // R_1 = 1 by convention
  double threshold = 0.2;
  std::vector<int> selected;      // 0-based indices with R >= threshold
};

// Leave-one-out local linear regression of phi_k on phi_1..phi_{k-1},
// Gaussian weights with bandwidth = median pairwise distance / 3. Residuals
// below the threshold mark harmonics of earlier eigenvectors.
LlrReport llr_residuals(const ManifoldEmbedding& embedding, int n_eigs,
                        double threshold = 0.2);

struct PcaEmbedding {
  Vector mean;
  Matrix components;       // right singular vectors, one per column
  Vector singular_values;  // descending
  Matrix scores;           // mean-centered data projected on the components
};

PcaEmbedding pca(const Matrix& X_concat);

struct ReparametrizationDemo {
  double r_squared_phi = 0.0;     // cubic fit of q on phi_1
  double r_squared_direct = 0.0;  // same-degree fit of q on (p1, p2)
  Matrix points;                  // grid, one row per point
  Vector q;
  Vector phi1;
};

// Self-contained demonstration: a grid over [-10, 10]^2, a scalar field
// q = 10 sin(sqrt(p1^2 + p2^2)) + p2, and an informed embedding that makes q
// a simple function of the leading coordinate.
ReparametrizationDemo demo_informed_reparametrization(int grid_per_dim = 32);

}  // namespace mlmpc
