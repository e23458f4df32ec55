#include "mlmpc/approx.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mlmpc/io.hpp"
#include "mlmpc/rng.hpp"

namespace mlmpc {
namespace {

constexpr int kFormatVersion = 1;

// Shared L-BFGS driver for the GP hyperparameter search. Two-loop recursion
// with Armijo backtracking; returns the best point seen.
template <typename Objective>
std::pair<Vector, double> lbfgs_minimize(const Objective& fn, Vector x,
                                         int max_iter) {
  const int memory = 8;
  std::vector<Vector> s_hist, y_hist;
  Vector grad(x.size());
  double f = fn(x, &grad);
  Vector best_x = x;
  double best_f = f;

  for (int iter = 0; iter < max_iter; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < 1e-7) break;

    Vector q = grad;
    const auto h = static_cast<int>(s_hist.size());
    std::vector<double> alpha_hist(static_cast<std::size_t>(h));
    for (int i = h - 1; i >= 0; --i) {
      const double rho =
          1.0 / y_hist[static_cast<std::size_t>(i)].dot(s_hist[static_cast<std::size_t>(i)]);
      alpha_hist[static_cast<std::size_t>(i)] =
          rho * s_hist[static_cast<std::size_t>(i)].dot(q);
      q -= alpha_hist[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
    }
    if (h > 0) {
      const auto& s = s_hist.back();
      const auto& yv = y_hist.back();
      q *= s.dot(yv) / yv.squaredNorm();
    }
    for (int i = 0; i < h; ++i) {
      const double rho =
          1.0 / y_hist[static_cast<std::size_t>(i)].dot(s_hist[static_cast<std::size_t>(i)]);
      const double beta = rho * y_hist[static_cast<std::size_t>(i)].dot(q);
      q += (alpha_hist[static_cast<std::size_t>(i)] - beta) *
           s_hist[static_cast<std::size_t>(i)];
    }
    Vector dir = -q;
    double descent = grad.dot(dir);
    if (!(descent < 0.0)) {
      dir = -grad;
      descent = -grad.squaredNorm();
    }

    double step = 1.0;
    Vector x_new;
    Vector grad_new(x.size());
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + step * dir;
      f_new = fn(x_new, &grad_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * descent) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Vector s = x_new - x;
    const Vector yv = grad_new - grad;
    if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
      }
    }
    x = x_new;
    grad = grad_new;
    f = f_new;
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
    if (s.norm() < 1e-12 * (1.0 + x.norm())) break;
  }
  return {best_x, best_f};
}

Matrix matern_gram(const Matrix& X, const Vector& theta, double sigma2) {
  const Matrix Xw = X * theta.asDiagonal();
  const Vector sq = Xw.rowwise().squaredNorm();
  Matrix d2 = sq.replicate(1, Xw.rows()) + sq.transpose().replicate(Xw.rows(), 1) -
              2.0 * Xw * Xw.transpose();
  const Matrix r = d2.cwiseMax(0.0).cwiseSqrt();
  const double s3 = std::sqrt(3.0);
  return (sigma2 * (1.0 + s3 * r.array()) * (-s3 * r.array()).exp()).matrix();
}

Matrix matern_cross(const Matrix& Xq, const Matrix& Xt, const Vector& theta,
                    double sigma2) {
  const Matrix Aw = Xq * theta.asDiagonal();
  const Matrix Bw = Xt * theta.asDiagonal();
  Matrix d2 = Aw.rowwise().squaredNorm().replicate(1, Bw.rows()) +
              Bw.rowwise().squaredNorm().transpose().replicate(Aw.rows(), 1) -
              2.0 * Aw * Bw.transpose();
  const Matrix r = d2.cwiseMax(0.0).cwiseSqrt();
  const double s3 = std::sqrt(3.0);
  return (sigma2 * (1.0 + s3 * r.array()) * (-s3 * r.array()).exp()).matrix();
}

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.integer(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
}

}  // namespace

Scaler Scaler::fit(const Matrix& X) {
  if (X.rows() < 1) throw std::invalid_argument("Scaler: empty data");
  Scaler s;
  s.min = X.colwise().minCoeff().transpose();
  s.max = X.colwise().maxCoeff().transpose();
  return s;
}

Matrix Scaler::transform(const Matrix& X, long* clamped) const {
  if (X.cols() != min.size()) {
    throw std::invalid_argument("Scaler: dimension mismatch");
  }
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double lo = min(c), hi = max(c);
    const double range = hi - lo > 1e-300 ? hi - lo : 1.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      double v = X(r, c);
      if (v < lo || v > hi) {
        if (clamped != nullptr) ++*clamped;
        v = std::clamp(v, lo, hi);
      }
      out(r, c) = (v - lo) / range;
    }
  }
  return out;
}

Matrix Scaler::inverse(const Matrix& Y) const {
  if (Y.cols() != min.size()) {
    throw std::invalid_argument("Scaler: dimension mismatch");
  }
  Matrix out(Y.rows(), Y.cols());
  for (Eigen::Index c = 0; c < Y.cols(); ++c) {
    const double lo = min(c), hi = max(c);
    const double range = hi - lo > 1e-300 ? hi - lo : 1.0;
    out.col(c) = Y.col(c).array() * range + lo;
  }
  return out;
}

Matrix poly_features(const Matrix& X, int degree) {
  if (degree < 1) throw std::invalid_argument("poly_features: degree < 1");
  Matrix F(X.rows(), 1 + X.cols() * degree);
  F.col(0).setOnes();
  Eigen::Index col = 1;
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    Vector p = X.col(d);
    F.col(col++) = p;
    for (int e = 2; e <= degree; ++e) {
      p = p.cwiseProduct(X.col(d));
      F.col(col++) = p;
    }
  }
  return F;
}

PolyModel fit_poly(const Matrix& X, const Matrix& Y, int degree) {
  if (X.rows() != Y.rows() || X.rows() < 1) {
    throw std::invalid_argument("fit_poly: row mismatch");
  }
  PolyModel m;
  m.degree = degree;
  m.in_dim = static_cast<int>(X.cols());
  m.out_dim = static_cast<int>(Y.cols());
  m.in_scaler = Scaler::fit(X);
  const Matrix F = poly_features(m.in_scaler.transform(X), degree);
  const Eigen::ColPivHouseholderQR<Matrix> qr(F);
  if (qr.rank() == F.cols()) {
    m.theta = qr.solve(Y);
  } else {
    // Rank-deficient feature matrix; ridge keeps the fit defined.
    std::cerr << "fit_poly: rank-deficient features (rank " << qr.rank()
              << " of " << F.cols() << "), applying ridge 1e-10\n";
    Matrix G = F.transpose() * F;
    G.diagonal().array() += 1e-10;
    m.theta = G.ldlt().solve(F.transpose() * Y);
  }
  return m;
}

Matrix predict_poly(const PolyModel& m, const Matrix& X) {
  return poly_features(m.in_scaler.transform(X), m.degree) * m.theta;
}

double matern_kernel(const Vector& a, const Vector& b, const Vector& theta,
                     double sigma2) {
  const double r = (theta.asDiagonal() * (a - b)).norm();
  const double s3 = std::sqrt(3.0);
  return sigma2 * (1.0 + s3 * r) * std::exp(-s3 * r);
}

double gp_nlml(const Matrix& X, const Vector& y, const Vector& log_params,
               double jitter, Vector* grad) {
  const auto n = X.rows();
  const auto d = X.cols();
  if (log_params.size() != d + 2) {
    throw std::invalid_argument("gp_nlml: expected d + 2 log parameters");
  }
  const Vector theta = log_params.head(d).array().exp();
  const double sigma_f2 = std::exp(2.0 * log_params(d));
  const double sigma_n2 = std::exp(2.0 * log_params(d + 1));

  const Matrix Xw = X * theta.asDiagonal();
  const Vector sq = Xw.rowwise().squaredNorm();
  Matrix d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
              2.0 * Xw * Xw.transpose();
  const Matrix r = d2.cwiseMax(0.0).cwiseSqrt();
  const double s3 = std::sqrt(3.0);
  const Matrix expr = (-s3 * r.array()).exp().matrix();
  const Matrix K = (sigma_f2 * (1.0 + s3 * r.array()) * expr.array()).matrix();
  Matrix Kn = K;
  Kn.diagonal().array() += sigma_n2 + jitter;

  const Eigen::LLT<Matrix> llt(Kn);
  if (llt.info() != Eigen::Success) {
    if (grad != nullptr) grad->setZero(log_params.size());
    return std::numeric_limits<double>::infinity();
  }
  const Vector alpha = llt.solve(y);
  const double nlml = 0.5 * y.dot(alpha) +
                      Matrix(llt.matrixL()).diagonal().array().log().sum() +
                      0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
  if (grad != nullptr) {
    grad->resize(log_params.size());
    const Matrix Kinv = llt.solve(Matrix::Identity(n, n));
    const Matrix A = alpha * alpha.transpose() - Kinv;
    // dK/dr for the Matern 3/2 collapses to -3 sigma_f^2 r exp(-sqrt(3) r).
    const Matrix dK_dr = (-3.0 * sigma_f2 * r.array() * expr.array()).matrix();
    const Matrix inv_r =
        (r.array() > 0.0).select(r.cwiseInverse(), Matrix::Zero(n, n));
    for (Eigen::Index dd = 0; dd < d; ++dd) {
      const Vector c = Xw.col(dd);
      const Matrix dif = c.replicate(1, n) - c.transpose().replicate(n, 1);
      const Matrix dr = dif.cwiseProduct(dif).cwiseProduct(inv_r);
      (*grad)(dd) = -0.5 * A.cwiseProduct(dK_dr.cwiseProduct(dr)).sum();
    }
    (*grad)(d) = -0.5 * A.cwiseProduct(2.0 * K).sum();
    (*grad)(d + 1) = -sigma_n2 * A.trace();
  }
  return nlml;
}

GpModel fit_gp(const Matrix& X, const Matrix& Y, const GpFitConfig& cfg) {
  if (X.rows() != Y.rows() || X.rows() < 2) {
    throw std::invalid_argument("fit_gp: need >= 2 matching rows");
  }
  GpModel m;
  m.jitter = cfg.jitter;
  m.in_scaler = Scaler::fit(X);
  m.X_train = m.in_scaler.transform(X);
  const auto d = X.cols();
  const auto n = X.rows();

  Rng rng(cfg.seed);
  // Hyperparameter search may run on a row subsample; the cubic-cost solves
  // inside the objective dominate everything else at a few thousand rows.
  // Conditioning below always uses the full set.
  Matrix X_hyper = m.X_train;
  std::vector<Eigen::Index> sub;
  if (cfg.hyper_subsample > 0 && cfg.hyper_subsample < n) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (int i = 0; i < cfg.hyper_subsample; ++i) {
      const auto j = i + static_cast<Eigen::Index>(rng.integer(
                             static_cast<std::uint64_t>(n - i)));
      std::swap(idx[static_cast<std::size_t>(i)],
                idx[static_cast<std::size_t>(j)]);
    }
    sub.assign(idx.begin(), idx.begin() + cfg.hyper_subsample);
    X_hyper.resize(cfg.hyper_subsample, d);
    for (std::size_t i = 0; i < sub.size(); ++i) {
      X_hyper.row(static_cast<Eigen::Index>(i)) = m.X_train.row(sub[i]);
    }
  }

  for (Eigen::Index c = 0; c < Y.cols(); ++c) {
    const Vector y_raw = Y.col(c);
    const double y_mean = y_raw.mean();
    double y_std = std::sqrt((y_raw.array() - y_mean).square().sum() /
                             static_cast<double>(y_raw.size()));
    if (y_std < 1e-300) y_std = 1.0;
    const Vector y = (y_raw.array() - y_mean) / y_std;
    Vector y_hyper = y;
    if (!sub.empty()) {
      y_hyper.resize(static_cast<Eigen::Index>(sub.size()));
      for (std::size_t i = 0; i < sub.size(); ++i) {
        y_hyper(static_cast<Eigen::Index>(i)) = y(sub[i]);
      }
    }

    auto objective = [&](const Vector& lp, Vector* g) {
      return gp_nlml(X_hyper, y_hyper, lp, cfg.jitter, g);
    };

    Vector best_lp;
    double best_f = std::numeric_limits<double>::infinity();
    for (int t = 0; t <= cfg.restarts; ++t) {
      Vector lp0(d + 2);
      if (t == 0) {
        lp0.setZero();
        lp0(d + 1) = std::log(0.05);
      } else {
        for (Eigen::Index i = 0; i < d; ++i) lp0(i) = 0.5 * rng.normal();
        lp0(d) = 0.3 * rng.normal();
        lp0(d + 1) = std::log(0.05) + 0.5 * rng.normal();
      }
      auto [lp, f] = lbfgs_minimize(objective, lp0, cfg.max_iter);
      if (f < best_f) {
        best_f = f;
        best_lp = lp;
      }
    }
    if (!best_lp.size()) {
      throw std::runtime_error("fit_gp: all hyperparameter starts failed");
    }

    GpModel::Head head;
    head.theta = best_lp.head(d).array().exp();
    head.sigma2 = std::exp(2.0 * best_lp(d));
    head.noise2 = std::exp(2.0 * best_lp(d + 1));
    head.y_mean = y_mean;
    head.y_std = y_std;
    head.nlml = best_f;
    const Matrix K = matern_gram(m.X_train, head.theta, head.sigma2);
    Eigen::LLT<Matrix> llt;
    for (double j = cfg.jitter;; j *= 10.0) {
      Matrix Kn = K;
      Kn.diagonal().array() += head.noise2 + j;
      llt.compute(Kn);
      if (llt.info() == Eigen::Success) break;
      if (j > 1e-4) {
        throw std::runtime_error("fit_gp: final kernel not positive definite");
      }
    }
    head.chol = llt.matrixL();
    head.alpha = llt.solve(y);
    m.heads.push_back(std::move(head));
  }
  return m;
}

Matrix predict_gp(const GpModel& m, const Matrix& X) {
  const Matrix Xs = m.in_scaler.transform(X);
  Matrix out(X.rows(), static_cast<Eigen::Index>(m.heads.size()));
  for (std::size_t h = 0; h < m.heads.size(); ++h) {
    const auto& head = m.heads[h];
    const Matrix Kq = matern_cross(Xs, m.X_train, head.theta, head.sigma2);
    out.col(static_cast<Eigen::Index>(h)) =
        (Kq * head.alpha).array() * head.y_std + head.y_mean;
  }
  return out;
}

std::pair<Vector, Vector> predict_gp_var(const GpModel& m, const Matrix& X,
                                         int head_idx) {
  const auto& head = m.heads.at(static_cast<std::size_t>(head_idx));
  const Matrix Xs = m.in_scaler.transform(X);
  const Matrix Kq = matern_cross(Xs, m.X_train, head.theta, head.sigma2);
  const Vector mean = (Kq * head.alpha).array() * head.y_std + head.y_mean;
  const Matrix V =
      head.chol.triangularView<Eigen::Lower>().solve(Kq.transpose());
  Vector var(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    var(i) = std::max(head.sigma2 - V.col(i).squaredNorm(), 0.0) * head.y_std *
             head.y_std;
  }
  return {mean, var};
}

Vector gp_loo_residuals(const GpModel& m, int head_idx) {
  const auto& head = m.heads.at(static_cast<std::size_t>(head_idx));
  const auto n = m.X_train.rows();
  const Matrix L = head.chol;
  const Matrix Linv =
      L.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  const Vector kinv_diag = Linv.colwise().squaredNorm().transpose();
  Vector loo(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    loo(i) = head.alpha(i) / kinv_diag(i) * head.y_std;
  }
  return loo;
}

double mlp_loss_grad(const MlpModel& m, const Matrix& Xs, const Matrix& Ys,
                     std::vector<Matrix>* dW, std::vector<Vector>* db) {
  const auto layers = m.W.size();
  std::vector<Matrix> acts(layers + 1);
  acts[0] = Xs;
  for (std::size_t l = 0; l < layers; ++l) {
    acts[l + 1] = ((acts[l] * m.W[l].transpose()).rowwise() +
                   m.b[l].transpose())
                      .cwiseMax(0.0);
  }
  const Matrix diff = acts[layers] - Ys;
  const double loss = diff.squaredNorm() / static_cast<double>(diff.size());
  if (dW != nullptr && db != nullptr) {
    dW->resize(layers);
    db->resize(layers);
    Matrix g = 2.0 * diff / static_cast<double>(diff.size());
    for (std::size_t l = layers; l-- > 0;) {
      g = g.cwiseProduct((acts[l + 1].array() > 0.0).cast<double>().matrix());
      (*dW)[l] = g.transpose() * acts[l];
      (*db)[l] = g.colwise().sum().transpose();
      if (l > 0) g = g * m.W[l];
    }
  }
  return loss;
}

MlpModel fit_mlp(const Matrix& X, const Matrix& Y, const MlpFitConfig& cfg) {
  if (X.rows() != Y.rows() || X.rows() < 1) {
    throw std::invalid_argument("fit_mlp: row mismatch");
  }
  if (cfg.epochs < 1 || cfg.batch < 1) {
    throw std::invalid_argument("fit_mlp: epochs and batch must be >= 1");
  }
  MlpModel m;
  m.in_scaler = Scaler::fit(X);
  m.out_scaler = Scaler::fit(Y);
  const Matrix Xs = m.in_scaler.transform(X);
  const Matrix Ys = m.out_scaler.transform(Y);

  std::vector<int> dims;
  dims.push_back(static_cast<int>(X.cols()));
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(static_cast<int>(Y.cols()));

  Rng rng(cfg.seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    // He-style bound; the narrower sqrt(1/fan_in) starves deep ReLU stacks
    // and leaves output units dead from the first step.
    const double s = std::sqrt(cfg.init_gain / fan_in);
    Matrix W(fan_out, fan_in);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = rng.uniform(-s, s);
    }
    m.W.push_back(std::move(W));
    m.b.push_back(Vector::Zero(fan_out));
  }

  std::vector<Matrix> mW, vW, gW;
  std::vector<Vector> mb, vb, gb;
  for (const auto& W : m.W) {
    mW.push_back(Matrix::Zero(W.rows(), W.cols()));
    vW.push_back(Matrix::Zero(W.rows(), W.cols()));
  }
  for (const auto& b : m.b) {
    mb.push_back(Vector::Zero(b.size()));
    vb.push_back(Vector::Zero(b.size()));
  }
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;

  const auto n = static_cast<int>(Xs.rows());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  m.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (int start = 0; start < n; start += cfg.batch) {
      const int size = std::min(cfg.batch, n - start);
      Matrix Xb(size, Xs.cols()), Yb(size, Ys.cols());
      for (int i = 0; i < size; ++i) {
        Xb.row(i) = Xs.row(order[static_cast<std::size_t>(start + i)]);
        Yb.row(i) = Ys.row(order[static_cast<std::size_t>(start + i)]);
      }
      epoch_loss += mlp_loss_grad(m, Xb, Yb, &gW, &gb);
      ++batches;
      ++t;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
      for (std::size_t l = 0; l < m.W.size(); ++l) {
        mW[l] = beta1 * mW[l] + (1.0 - beta1) * gW[l];
        vW[l] = beta2 * vW[l] + (1.0 - beta2) * gW[l].cwiseProduct(gW[l]);
        m.W[l] -= cfg.lr * (mW[l] / bc1)
                      .cwiseQuotient(((vW[l] / bc2).cwiseSqrt().array() + eps)
                                         .matrix());
        mb[l] = beta1 * mb[l] + (1.0 - beta1) * gb[l];
        vb[l] = beta2 * vb[l] + (1.0 - beta2) * gb[l].cwiseProduct(gb[l]);
        m.b[l] -= cfg.lr * (mb[l] / bc1)
                      .cwiseQuotient(((vb[l] / bc2).cwiseSqrt().array() + eps)
                                         .matrix());
      }
    }
    const double mean_loss = epoch_loss / batches;
    // Overflowed weights can hide behind a finite loss: max(0, nan) is 0, so
    // a net whose parameters went non-finite predicts zeros ever after.
    bool healthy = std::isfinite(mean_loss);
    for (std::size_t l = 0; healthy && l < m.W.size(); ++l) {
      healthy = m.W[l].allFinite() && m.b[l].allFinite();
    }
    if (!healthy) {
      throw std::runtime_error(
          "fit_mlp: training diverged (non-finite loss or weights); try a lower lr");
    }
    m.loss_curve.push_back(mean_loss);
  }
  return m;
}

Matrix predict_mlp(const MlpModel& m, const Matrix& X) {
  Matrix a = m.in_scaler.transform(X);
  for (std::size_t l = 0; l < m.W.size(); ++l) {
    a = ((a * m.W[l].transpose()).rowwise() + m.b[l].transpose()).cwiseMax(0.0);
  }
  return m.out_scaler.inverse(a);
}

MlpModel fit_mlp_multistart(const Matrix& X, const Matrix& Y, MlpFitConfig cfg,
                            int max_tries, int required_outputs) {
  if (max_tries < 1) {
    throw std::invalid_argument("fit_mlp_multistart: max_tries must be >= 1");
  }
  const Eigen::Index need =
      required_outputs < 0 ? Y.cols()
                           : std::min<Eigen::Index>(required_outputs, Y.cols());
  MlpModel best;
  Eigen::Index best_alive = -1;
  for (int t = 0; t < max_tries; ++t, ++cfg.seed) {
    MlpModel m = fit_mlp(X, Y, cfg);
    const Matrix pred = predict_mlp(m, X);
    Eigen::Index alive = 0;
    for (Eigen::Index c = 0; c < need; ++c) {
      const double sd_p =
          std::sqrt((pred.col(c).array() - pred.col(c).mean()).square().mean());
      const double sd_y =
          std::sqrt((Y.col(c).array() - Y.col(c).mean()).square().mean());
      // A constant target column is always satisfied; a varying one needs a
      // prediction with nonvanishing spread.
      if (sd_y < 1e-12 || sd_p > 1e-6 * sd_y) ++alive;
    }
    if (alive == need) return m;
    if (alive > best_alive) {
      best_alive = alive;
      best = std::move(m);
    }
  }
  std::cerr << "fit_mlp_multistart: no seed in [" << cfg.seed - max_tries
            << ", " << cfg.seed << ") revived every required output; keeping "
            << best_alive << "/" << need << " alive\n";
  return best;
}

Matrix predict(const Approximator& m, const Matrix& X) {
  return std::visit(
      [&](const auto& model) -> Matrix {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, PolyModel>) {
          return predict_poly(model, X);
        } else if constexpr (std::is_same_v<T, GpModel>) {
          return predict_gp(model, X);
        } else {
          return predict_mlp(model, X);
        }
      },
      m);
}

namespace {

nlohmann::json scaler_to_json(const Scaler& s) {
  return {{"min", vector_to_json(s.min)}, {"max", vector_to_json(s.max)}};
}

Scaler scaler_from_json(const nlohmann::json& j) {
  Scaler s;
  s.min = vector_from_json(j.at("min"));
  s.max = vector_from_json(j.at("max"));
  return s;
}

}  // namespace

nlohmann::json to_json(const Approximator& m) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  if (const auto* p = std::get_if<PolyModel>(&m)) {
    j["kind"] = "poly";
    j["degree"] = p->degree;
    j["in_dim"] = p->in_dim;
    j["out_dim"] = p->out_dim;
    j["in_scaler"] = scaler_to_json(p->in_scaler);
    j["theta"] = matrix_to_json(p->theta);
  } else if (const auto* g = std::get_if<GpModel>(&m)) {
    j["kind"] = "gp";
    j["jitter"] = g->jitter;
    j["in_scaler"] = scaler_to_json(g->in_scaler);
    j["X_train"] = matrix_to_json(g->X_train);
    auto& heads = j["heads"] = nlohmann::json::array();
    for (const auto& h : g->heads) {
      heads.push_back({{"theta", vector_to_json(h.theta)},
                       {"sigma2", h.sigma2},
                       {"noise2", h.noise2},
                       {"alpha", vector_to_json(h.alpha)},
                       {"y_mean", h.y_mean},
                       {"y_std", h.y_std},
                       {"nlml", h.nlml}});
    }
  } else {
    const auto& n = std::get<MlpModel>(m);
    j["kind"] = "mlp";
    j["in_scaler"] = scaler_to_json(n.in_scaler);
    j["out_scaler"] = scaler_to_json(n.out_scaler);
    auto& layers = j["layers"] = nlohmann::json::array();
    for (std::size_t l = 0; l < n.W.size(); ++l) {
      layers.push_back(
          {{"W", matrix_to_json(n.W[l])}, {"b", vector_to_json(n.b[l])}});
    }
    j["loss_curve"] = n.loss_curve;
  }
  return j;
}

Approximator approximator_from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("approximator_from_json: unsupported format version");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "poly") {
    PolyModel p;
    p.degree = j.at("degree").get<int>();
    p.in_dim = j.at("in_dim").get<int>();
    p.out_dim = j.at("out_dim").get<int>();
    p.in_scaler = scaler_from_json(j.at("in_scaler"));
    p.theta = matrix_from_json(j.at("theta"));
    return p;
  }
  if (kind == "gp") {
    GpModel g;
    g.jitter = j.at("jitter").get<double>();
    g.in_scaler = scaler_from_json(j.at("in_scaler"));
    g.X_train = matrix_from_json(j.at("X_train"));
    for (const auto& hj : j.at("heads")) {
      GpModel::Head h;
      h.theta = vector_from_json(hj.at("theta"));
      h.sigma2 = hj.at("sigma2").get<double>();
      h.noise2 = hj.at("noise2").get<double>();
      h.alpha = vector_from_json(hj.at("alpha"));
      h.y_mean = hj.at("y_mean").get<double>();
      h.y_std = hj.at("y_std").get<double>();
      h.nlml = hj.at("nlml").get<double>();
      Matrix Kn = matern_gram(g.X_train, h.theta, h.sigma2);
      Kn.diagonal().array() += h.noise2 + g.jitter;
      const Eigen::LLT<Matrix> llt(Kn);
      if (llt.info() != Eigen::Success) {
        throw std::runtime_error("approximator_from_json: kernel reload failed");
      }
      h.chol = llt.matrixL();
      g.heads.push_back(std::move(h));
    }
    return g;
  }
  if (kind == "mlp") {
    MlpModel n;
    n.in_scaler = scaler_from_json(j.at("in_scaler"));
    n.out_scaler = scaler_from_json(j.at("out_scaler"));
    for (const auto& lj : j.at("layers")) {
      n.W.push_back(matrix_from_json(lj.at("W")));
      n.b.push_back(vector_from_json(lj.at("b")));
    }
    n.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    return n;
  }
  throw std::runtime_error("approximator_from_json: unknown kind '" + kind + "'");
}

}  // namespace mlmpc
