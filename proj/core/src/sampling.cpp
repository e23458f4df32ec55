#include "mlmpc/sampling.hpp"

#include <numeric>
#include <stdexcept>

#include "mlmpc/parallel.hpp"
#include "mlmpc/rng.hpp"

namespace mlmpc {
namespace {

Matrix select_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i) = m.row(idx[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace

std::string to_string(Parametrization tag) {
  switch (tag) {
    case Parametrization::kAlpha: return "alpha";
    case Parametrization::kBeta: return "beta";
    case Parametrization::kGamma: return "gamma";
  }
  throw std::logic_error("unknown parametrization");
}

Parametrization parametrization_from_string(const std::string& name) {
  if (name == "alpha") return Parametrization::kAlpha;
  if (name == "beta") return Parametrization::kBeta;
  if (name == "gamma") return Parametrization::kGamma;
  throw std::invalid_argument("unknown parametrization '" + name +
                              "' (expected alpha, beta, or gamma)");
}

AugmentedState augment(const CstrState& s, double r0, Parametrization tag,
                       const CstrParams& p) {
  const NondimMap map;
  const double tr_k = map.temp_offset + map.temp_scale * s.tr_hat;
  const double k = p.k0 * std::exp(-p.e_over_r / tr_k);
  const double heat = -p.dh_rhocp * map.conc_scale / map.temp_scale;
  const double reaction = k * s.ca_hat;
  // Heating rate without the coolant input term, so the coordinate depends
  // on the state alone.
  const double heating = -s.tr_hat + heat * reaction;

  AugmentedState out;
  out.tag = tag;
  switch (tag) {
    case Parametrization::kAlpha:
      out.values = Vector{{s.ca_hat, s.tr_hat, r0}};
      break;
    case Parametrization::kBeta:
      out.values = Vector{{reaction, heating, r0}};
      break;
    case Parametrization::kGamma:
      out.values = Vector{{s.ca_hat, s.tr_hat, reaction, heating, r0}};
      break;
  }
  return out;
}

Matrix PolicyDataset::train_X() const { return select_rows(X_star, train_idx); }
Matrix PolicyDataset::train_U() const { return select_rows(U_star, train_idx); }
Matrix PolicyDataset::test_X() const { return select_rows(X_star, test_idx); }
Matrix PolicyDataset::test_U() const { return select_rows(U_star, test_idx); }

Matrix grid_sample(const std::vector<std::pair<double, double>>& bounds,
                   const std::vector<int>& counts) {
  if (bounds.size() != counts.size() || bounds.empty()) {
    throw std::invalid_argument("grid_sample: bounds/counts size mismatch");
  }
  Eigen::Index total = 1;
  for (int c : counts) {
    if (c < 1) throw std::invalid_argument("grid_sample: counts must be >= 1");
    total *= c;
  }
  const auto dim = static_cast<Eigen::Index>(bounds.size());
  Matrix grid(total, dim);
  for (Eigen::Index row = 0; row < total; ++row) {
    Eigen::Index rem = row;
    for (Eigen::Index d = dim - 1; d >= 0; --d) {
      const int c = counts[static_cast<std::size_t>(d)];
      const Eigen::Index j = rem % c;
      rem /= c;
      const auto [lo, hi] = bounds[static_cast<std::size_t>(d)];
      grid(row, d) = c == 1 ? lo : lo + (hi - lo) * static_cast<double>(j) /
                                            static_cast<double>(c - 1);
    }
  }
  return grid;
}

PolicyDataset generate_linear_dataset(const LinearMpcProblem& prob,
                                      const Matrix& grid, unsigned jobs) {
  PolicyDataset ds;
  ds.X_star = grid;
  ds.U_star.resize(grid.rows(), prob.N);
  std::vector<ControlPolicy> policies(static_cast<std::size_t>(grid.rows()));
  parallel_for(
      static_cast<std::size_t>(grid.rows()),
      [&](std::size_t i) {
        const Vector x = grid.row(static_cast<Eigen::Index>(i)).transpose();
        try {
          policies[i] = prob.quad_constraint
                            ? solve_quadratic_constrained_mpc(prob, x)
                            : solve_linear_mpc(prob, x);
        } catch (const std::exception& e) {
          throw std::runtime_error("generate_linear_dataset: row " +
                                   std::to_string(i) + ": " + e.what());
        }
      },
      jobs);
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    ds.U_star.row(i) = policies[static_cast<std::size_t>(i)].u.transpose();
  }
  return ds;
}

PolicyDataset generate_cstr_dataset(const CstrMpcProblem& prob,
                                    const CstrSamplingConfig& config,
                                    unsigned jobs) {
  if (config.n_init < 1 || config.rollout < 1) {
    throw std::invalid_argument("generate_cstr_dataset: n_init and rollout must be >= 1");
  }
  const int rows_per = config.rollout;
  struct RolloutResult {
    std::vector<Vector> x;
    std::vector<Vector> u;
    int excluded = 0;
  };
  std::vector<RolloutResult> results(static_cast<std::size_t>(config.n_init));

  // One RNG stream per rollout keeps the dataset independent of the job
  // count and of which rollouts fail.
  parallel_for(
      static_cast<std::size_t>(config.n_init),
      [&](std::size_t j) {
        Rng rng = Rng::for_task(config.seed, j);
        CstrState s;
        s.ca_hat = rng.uniform(config.ca_lo, config.ca_hi);
        s.tr_hat = rng.uniform(config.tr_lo, config.tr_hi);
        const double r0 = rng.uniform(config.r0_lo, config.r0_hi);
        CstrMpcProblem local = prob;
        local.r0 = r0;
        auto& res = results[j];
        std::optional<Vector> warm;
        for (int step = 0; step < rows_per; ++step) {
          ControlPolicy pol;
          try {
            pol = solve_cstr_mpc(local, s, warm);
          } catch (const SolverFailure&) {
            // Drop the remainder of the rollout; a non-converged policy must
            // not enter the dataset.
            res.excluded += rows_per - step;
            break;
          }
          res.x.push_back(Vector{{s.ca_hat, s.tr_hat, r0}});
          res.u.push_back(pol.u);
          s = integrate_cstr(local.params, s, pol.u(0), local.dt,
                             local.substeps);
          Vector shifted(pol.u.size());
          shifted.head(pol.u.size() - 1) = pol.u.tail(pol.u.size() - 1);
          shifted(pol.u.size() - 1) = pol.u(pol.u.size() - 1);
          warm = shifted;
        }
      },
      jobs);

  Eigen::Index total = 0;
  int excluded = 0;
  for (const auto& r : results) {
    total += static_cast<Eigen::Index>(r.x.size());
    excluded += r.excluded;
  }
  PolicyDataset ds;
  ds.seed = config.seed;
  ds.excluded = excluded;
  ds.X_star.resize(total, 3);
  ds.U_star.resize(total, prob.N);
  Eigen::Index row = 0;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.x.size(); ++i, ++row) {
      ds.X_star.row(row) = r.x[i].transpose();
      ds.U_star.row(row) = r.u[i].transpose();
    }
  }
  return ds;
}

Matrix augment_rows(const Matrix& x_star, Parametrization tag,
                    const CstrParams& p) {
  if (x_star.cols() != 3) {
    throw std::invalid_argument("augment_rows: expected [ca, tr, r0] rows");
  }
  const Eigen::Index dim = tag == Parametrization::kGamma ? 5 : 3;
  Matrix out(x_star.rows(), dim);
  for (Eigen::Index i = 0; i < x_star.rows(); ++i) {
    CstrState s;
    s.ca_hat = x_star(i, 0);
    s.tr_hat = x_star(i, 1);
    out.row(i) = augment(s, x_star(i, 2), tag, p).values.transpose();
  }
  return out;
}

void split(PolicyDataset& ds, int n_train, std::uint64_t seed) {
  const auto n = static_cast<int>(ds.X_star.rows());
  if (n_train < 1 || n_train >= n) {
    throw std::invalid_argument("split: n_train out of range");
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.integer(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  ds.train_idx.assign(perm.begin(), perm.begin() + n_train);
  ds.test_idx.assign(perm.begin() + n_train, perm.end());
  ds.seed = seed;
}

}  // namespace mlmpc
