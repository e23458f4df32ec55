#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <variant>
#include <vector>

#include "mlmpc/linalg.hpp"

namespace mlmpc {

// Per-dimension [0,1] min-max scaling fitted on training data. Out-of-range
// inputs at transform time are clamped; callers may pass a counter to track
// how often that happens.
struct Scaler {
  Vector min, max;

  static Scaler fit(const Matrix& X);
  Matrix transform(const Matrix& X, long* clamped = nullptr) const;
  Matrix inverse(const Matrix& Y) const;
};

// Ordinary least squares on per-dimension power features
// [1, x1, x1^2, ..., x1^deg, x2, ...]; no cross terms.
struct PolyModel {
  int degree = 3;
  int in_dim = 0, out_dim = 0;
  Scaler in_scaler;
  Matrix theta;  // feature_count x out_dim
};

Matrix poly_features(const Matrix& X, int degree);
PolyModel fit_poly(const Matrix& X, const Matrix& Y, int degree = 3);
Matrix predict_poly(const PolyModel& m, const Matrix& X);

// Matern 3/2 with ARD distance r = sqrt(sum_d theta_d^2 (a_d - b_d)^2):
// sigma2 * (1 + sqrt(3) r) exp(-sqrt(3) r).
double matern_kernel(const Vector& a, const Vector& b, const Vector& theta,
                     double sigma2);

struct GpFitConfig {
  int restarts = 3;       // beyond the default initialization
  int max_iter = 150;
  std::uint64_t seed = 0;
  double jitter = 1e-10;
  // When positive and below n, hyperparameters are tuned on that many
  // randomly chosen rows; the returned model still conditions on every row.
  int hyper_subsample = 0;
};

// Independent GP per output column; hyperparameters from NLML minimization
// with analytic gradients (L-BFGS, multi-start).
struct GpModel {
  struct Head {
    Vector theta;        // per-dimension inverse lengthscales
    double sigma2 = 1.0; // signal variance
    double noise2 = 1e-4;
    Vector alpha;        // K^-1 y, training weights
    Matrix chol;         // lower Cholesky factor of K; rebuilt on load
    double y_mean = 0.0, y_std = 1.0;
    double nlml = 0.0;
  };
  Matrix X_train;  // scaled inputs
  Scaler in_scaler;
  std::vector<Head> heads;
  double jitter = 1e-10;
};

GpModel fit_gp(const Matrix& X, const Matrix& Y, const GpFitConfig& cfg = {});
Matrix predict_gp(const GpModel& m, const Matrix& X);
// Predictive mean and variance for one output head.
std::pair<Vector, Vector> predict_gp_var(const GpModel& m, const Matrix& X,
                                         int head);
// Negative log marginal likelihood and its gradient in log-parameter space
// (log theta_1..d, log sigma_f, log sigma_n); exposed for gradient checks.
double gp_nlml(const Matrix& X, const Vector& y, const Vector& log_params,
               double jitter, Vector* grad = nullptr);

// Exact leave-one-out residuals in original units, loo_i = alpha_i /
// (K^-1)_ii; the honest generalization error of an interaction-free refit.
Vector gp_loo_residuals(const GpModel& m, int head);

struct MlpFitConfig {
  std::vector<int> hidden = {20, 20, 20, 20, 20, 20, 20, 20};
  int epochs = 2000;
  int batch = 128;
  double lr = 1e-3;
  double init_gain = 6.0;  // weight bound sqrt(init_gain / fan_in)
  std::uint64_t seed = 0;
};

// ReLU everywhere including the output layer, which is why targets are
// scaled into [0,1]. Trained with Adam on mean squared error.
struct MlpModel {
  std::vector<Matrix> W;  // layer weights, row = output unit
  std::vector<Vector> b;
  Scaler in_scaler, out_scaler;
  std::vector<double> loss_curve;  // epoch-mean training MSE
};

MlpModel fit_mlp(const Matrix& X, const Matrix& Y, const MlpFitConfig& cfg = {});
Matrix predict_mlp(const MlpModel& m, const Matrix& X);
// A ReLU output that starts dead stays dead, so a handful of seeds are tried,
// the MLP analog of the GP's hyperparameter restarts. Returns the first fit
// whose required output columns vary on the training data (all columns when
// required_outputs < 0, else the first required_outputs of them), falling
// back to the attempt with the fewest dead columns.
MlpModel fit_mlp_multistart(const Matrix& X, const Matrix& Y,
                            MlpFitConfig cfg = {}, int max_tries = 8,
                            int required_outputs = -1);
// MSE and gradients for one batch in scaled space; exposed for the
// finite-difference check.
double mlp_loss_grad(const MlpModel& m, const Matrix& Xs, const Matrix& Ys,
                     std::vector<Matrix>* dW, std::vector<Vector>* db);

// Any fitted map between two of the pipeline's spaces.
using Approximator = std::variant<PolyModel, GpModel, MlpModel>;

Matrix predict(const Approximator& m, const Matrix& X);

// Versioned JSON container; reloaded models reproduce predictions to 1e-12.
nlohmann::json to_json(const Approximator& m);
Approximator approximator_from_json(const nlohmann::json& j);

}  // namespace mlmpc
