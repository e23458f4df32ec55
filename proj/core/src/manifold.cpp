#include "mlmpc/manifold.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mlmpc/approx.hpp"
#include "mlmpc/rng.hpp"

namespace mlmpc {
namespace {

Matrix squared_distances(const Matrix& X) {
  const Vector sq = X.rowwise().squaredNorm();
  Matrix d2 = sq.replicate(1, X.rows()) + sq.transpose().replicate(X.rows(), 1) -
              2.0 * X * X.transpose();
  return d2.cwiseMax(0.0);
}

}  // namespace

double informed_distance(const Vector& z_i, const Vector& z_j, const Vector& f_i,
                         const Vector& f_j, const InformedMetricConfig& cfg) {
  return (z_i - z_j).squaredNorm() / cfg.epsilon +
         (f_i - f_j).squaredNorm() / cfg.xi;
}

int effective_policy_prefix(const InformedMetricConfig& cfg, Eigen::Index x_dim,
                            Eigen::Index f_cols) {
  const Eigen::Index want =
      cfg.policy_prefix > 0 ? cfg.policy_prefix : 2 * x_dim + 1;
  return static_cast<int>(std::min(want, f_cols));
}

std::pair<double, double> tune_scales(const Matrix& X, const Matrix& F,
                                      double c_in, double c_fn,
                                      std::uint64_t seed) {
  const auto n = X.rows();
  if (n < 2 || F.rows() != n) {
    throw std::invalid_argument("tune_scales: need matching X/F with >= 2 rows");
  }
  const std::uint64_t all_pairs =
      static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
  const auto n_pairs = static_cast<std::size_t>(
      std::min<std::uint64_t>(1000000, all_pairs));
  std::vector<double> dz, df;
  dz.reserve(n_pairs);
  df.reserve(n_pairs);
  Rng rng(seed);
  while (dz.size() < n_pairs) {
    const auto i = static_cast<Eigen::Index>(rng.integer(static_cast<std::uint64_t>(n)));
    const auto j = static_cast<Eigen::Index>(rng.integer(static_cast<std::uint64_t>(n)));
    if (i == j) continue;
    dz.push_back((X.row(i) - X.row(j)).squaredNorm());
    df.push_back((F.row(i) - F.row(j)).squaredNorm());
  }
  auto median = [](std::vector<double>& v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
      const double lo = *std::max_element(
          v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
      m = 0.5 * (m + lo);
    }
    return m;
  };
  const double eps = median(dz) / c_in;
  const double xi = median(df) / c_fn;
  if (!(eps > 0.0) || !(xi > 0.0)) {
    throw std::runtime_error("tune_scales: degenerate data, zero median distance");
  }
  return {eps, xi};
}

Matrix ManifoldEmbedding::coordinates() const {
  Matrix out(phi.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const int k = kept[c];
    out.col(static_cast<Eigen::Index>(c)) =
        phi.col(k) * std::pow(eigenvalues[static_cast<std::size_t>(k)],
                              scaling_exponent);
  }
  return out;
}

ManifoldEmbedding dmaps(const Matrix& X, const Matrix& F,
                        const InformedMetricConfig& cfg, int n_eigs,
                        double alpha) {
  const auto n = X.rows();
  if (n < 10 || F.rows() != n) {
    throw std::invalid_argument("dmaps: need matching X/F with >= 10 rows");
  }
  if (!(cfg.epsilon > 0.0) || !(cfg.xi > 0.0)) {
    throw std::invalid_argument("dmaps: scales must be positive");
  }
  if (n_eigs < 1 || n_eigs >= n - 1) {
    throw std::invalid_argument("dmaps: n_eigs out of range");
  }
  const int prefix = effective_policy_prefix(cfg, X.cols(), F.cols());
  const Matrix Fp = F.leftCols(prefix);

  Matrix W = (-(squared_distances(X) / cfg.epsilon +
                squared_distances(Fp) / cfg.xi))
                 .array()
                 .exp()
                 .matrix();
  const Vector P = W.rowwise().sum();
  // Density normalization cancels the sampling distribution at alpha = 1.
  const Vector Pa = P.array().pow(alpha).matrix();
  W = W.cwiseQuotient(Pa * Pa.transpose());
  const Vector D = W.rowwise().sum();
  const Vector Ds = D.cwiseSqrt();
  Matrix S = W.cwiseQuotient(Ds * Ds.transpose());
  S = 0.5 * (S + S.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("dmaps: eigendecomposition failed");
  }
  // Ascending from Eigen; take the top n_eigs + 1 and drop the constant one.
  ManifoldEmbedding emb;
  emb.epsilon = cfg.epsilon;
  emb.xi = cfg.xi;
  emb.eigenvalues.resize(static_cast<std::size_t>(n_eigs));
  emb.phi.resize(n, n_eigs);
  for (int k = 0; k < n_eigs; ++k) {
    const Eigen::Index src = n - 2 - k;
    emb.eigenvalues[static_cast<std::size_t>(k)] = es.eigenvalues()(src);
    Vector v = es.eigenvectors().col(src).cwiseQuotient(Ds);
    v /= v.norm();
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    emb.phi.col(k) = v;
  }
  emb.kept.resize(static_cast<std::size_t>(n_eigs));
  std::iota(emb.kept.begin(), emb.kept.end(), 0);
  return emb;
}

LlrReport llr_residuals(const ManifoldEmbedding& embedding, int n_eigs,
                        double threshold) {
  const Matrix& phi = embedding.phi;
  const auto m = phi.rows();
  n_eigs = static_cast<int>(std::min<Eigen::Index>(n_eigs, phi.cols()));
  LlrReport report;
  report.threshold = threshold;
  report.residuals.assign(static_cast<std::size_t>(n_eigs), 1.0);

  for (int k = 1; k < n_eigs; ++k) {
    // Standardized regressors keep the bandwidth meaningful across columns
    // of very different magnitudes.
    Matrix Z = phi.leftCols(k);
    const Vector mu = Z.colwise().mean().transpose();
    Z.rowwise() -= mu.transpose();
    for (Eigen::Index c = 0; c < k; ++c) {
      const double sd = std::sqrt(Z.col(c).squaredNorm() / static_cast<double>(m));
      if (sd > 1e-300) Z.col(c) /= sd;
    }
    const Matrix d2 = squared_distances(Z);
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) dist.push_back(std::sqrt(d2(i, j)));
    }
    const auto mid = dist.size() / 2;
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid),
                     dist.end());
    double bw = dist[mid];
    if (dist.size() % 2 == 0) {
      bw = 0.5 * (bw + *std::max_element(
                           dist.begin(),
                           dist.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    bw /= 3.0;
    const double bw2 = std::max(bw * bw, 1e-300);

    Matrix A(m, k + 1);
    A.col(0).setOnes();
    A.rightCols(k) = Z;
    const Vector y = phi.col(k);
    double sse = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      Vector w = (-d2.col(i) / bw2).array().exp().matrix();
      w(i) = 0.0;  // leave-one-out
      const Matrix Aw = w.asDiagonal() * A;
      Matrix G = A.transpose() * Aw;
      G.diagonal().array() += 1e-10;
      const Vector coef = G.ldlt().solve(Aw.transpose() * y);
      const double pred = A.row(i) * coef;
      sse += (y(i) - pred) * (y(i) - pred);
    }
    const double denom = (y.array() - y.mean()).square().sum();
    report.residuals[static_cast<std::size_t>(k)] =
        std::sqrt(sse / std::max(denom, 1e-300));
  }
  for (int k = 0; k < n_eigs; ++k) {
    if (report.residuals[static_cast<std::size_t>(k)] >= threshold) {
      report.selected.push_back(k);
    }
  }
  return report;
}

PcaEmbedding pca(const Matrix& X_concat) {
  if (X_concat.rows() < 2) {
    throw std::invalid_argument("pca: need >= 2 rows");
  }
  PcaEmbedding out;
  out.mean = X_concat.colwise().mean().transpose();
  const Matrix centered = X_concat.rowwise() - out.mean.transpose();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.components = svd.matrixV();
  out.singular_values = svd.singularValues();
  out.scores = centered * out.components;
  return out;
}

ReparametrizationDemo demo_informed_reparametrization(int grid_per_dim) {
  if (grid_per_dim < 4) {
    throw std::invalid_argument("demo: grid too small");
  }
  const auto n = static_cast<Eigen::Index>(grid_per_dim) * grid_per_dim;
  ReparametrizationDemo demo;
  demo.points.resize(n, 2);
  demo.q.resize(n);
  Eigen::Index row = 0;
  for (int i = 0; i < grid_per_dim; ++i) {
    for (int j = 0; j < grid_per_dim; ++j, ++row) {
      const double p1 = -10.0 + 20.0 * i / (grid_per_dim - 1);
      const double p2 = -10.0 + 20.0 * j / (grid_per_dim - 1);
      demo.points(row, 0) = p1;
      demo.points(row, 1) = p2;
      demo.q(row) = 10.0 * std::sin(std::sqrt(p1 * p1 + p2 * p2)) + p2;
    }
  }
  InformedMetricConfig cfg;
  cfg.policy_prefix = 1;
  std::tie(cfg.epsilon, cfg.xi) = tune_scales(demo.points, demo.q);
  const ManifoldEmbedding emb = dmaps(demo.points, demo.q, cfg, 4);
  demo.phi1 = emb.phi.col(0);

  auto r_squared = [&](const Matrix& inputs) {
    const PolyModel fit = fit_poly(inputs, demo.q, 3);
    const Vector resid = demo.q - predict_poly(fit, inputs).col(0);
    return 1.0 - resid.squaredNorm() /
                     (demo.q.array() - demo.q.mean()).square().sum();
  };
  demo.r_squared_phi = r_squared(demo.phi1);
  demo.r_squared_direct = r_squared(demo.points);
  return demo;
}

}  // namespace mlmpc
