#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "mlmpc/sampling.hpp"

using namespace mlmpc;

TEST_CASE("parametrization tags round trip through their names") {
  for (auto tag : {Parametrization::kAlpha, Parametrization::kBeta,
                   Parametrization::kGamma}) {
    CHECK(parametrization_from_string(to_string(tag)) == tag);
  }
  CHECK_THROWS_AS(parametrization_from_string("delta"), std::invalid_argument);
}

TEST_CASE("grid_sample enumerates the cartesian product row-major") {
  const Matrix g = grid_sample({{0.0, 1.0}, {10.0, 20.0}}, {2, 3});
  REQUIRE(g.rows() == 6);
  REQUIRE(g.cols() == 2);
  const double expect[6][2] = {{0, 10}, {0, 15}, {0, 20},
                               {1, 10}, {1, 15}, {1, 20}};
  for (int i = 0; i < 6; ++i) {
    CHECK(g(i, 0) == expect[i][0]);
    CHECK(g(i, 1) == expect[i][1]);
  }
}

TEST_CASE("grid_sample degenerate counts and errors") {
  const Matrix g = grid_sample({{-1.0, 1.0}}, {1});
  REQUIRE(g.rows() == 1);
  CHECK(g(0, 0) == -1.0);  // a single point sits at the lower bound

  CHECK_THROWS_AS(grid_sample({{0.0, 1.0}}, {2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(grid_sample({{0.0, 1.0}}, {0}), std::invalid_argument);
}

TEST_CASE("augment reproduces the derived coordinates") {
  const CstrParams p;
  const NondimMap m;
  const CstrState s{0.4, 0.3};
  const double r0 = 0.6;

  const AugmentedState a = augment(s, r0, Parametrization::kAlpha, p);
  REQUIRE(a.values.size() == 3);
  CHECK(a.values(0) == 0.4);
  CHECK(a.values(1) == 0.3);
  CHECK(a.r0() == 0.6);

  // Independent recomputation of the rate coordinates.
  const double tr = m.temp_from_hat(s.tr_hat);
  const double k = p.k0 * std::exp(-p.e_over_r / tr);
  const double reaction = k * s.ca_hat;
  const double heat = -p.dh_rhocp * m.conc_scale / m.temp_scale;
  const double heating = -s.tr_hat + heat * reaction;

  const AugmentedState b = augment(s, r0, Parametrization::kBeta, p);
  REQUIRE(b.values.size() == 3);
  CHECK(b.values(0) == doctest::Approx(reaction).epsilon(1e-12));
  CHECK(b.values(1) == doctest::Approx(heating).epsilon(1e-12));
  CHECK(b.r0() == 0.6);

  const AugmentedState g = augment(s, r0, Parametrization::kGamma, p);
  REQUIRE(g.values.size() == 5);
  CHECK(g.values(0) == 0.4);
  CHECK(g.values(1) == 0.3);
  CHECK(g.values(2) == doctest::Approx(reaction).epsilon(1e-12));
  CHECK(g.values(3) == doctest::Approx(heating).epsilon(1e-12));
  CHECK(g.r0() == 0.6);
}

TEST_CASE("augment_rows applies the map to every dataset row") {
  Matrix rows(2, 3);
  rows << 0.4, 0.3, 0.6, 0.8, 0.1, 0.2;
  const Matrix beta = augment_rows(rows, Parametrization::kBeta);
  REQUIRE(beta.rows() == 2);
  REQUIRE(beta.cols() == 3);
  for (int i = 0; i < 2; ++i) {
    const AugmentedState a = augment({rows(i, 0), rows(i, 1)}, rows(i, 2),
                                     Parametrization::kBeta);
    CHECK((beta.row(i).transpose() - a.values).cwiseAbs().maxCoeff() < 1e-15);
  }
  CHECK(augment_rows(rows, Parametrization::kGamma).cols() == 5);
  CHECK_THROWS_AS(augment_rows(Matrix::Zero(2, 2), Parametrization::kAlpha),
                  std::invalid_argument);
}

TEST_CASE("linear dataset pairs each grid state with its solved policy") {
  const auto prob = LinearMpcProblem::singular();
  const Matrix grid = grid_sample({{-1.0, 1.0}, {-1.0, 1.0}}, {4, 4});
  const PolicyDataset ds = generate_linear_dataset(prob, grid);
  REQUIRE(ds.X_star.rows() == 16);
  REQUIRE(ds.U_star.cols() == prob.N);
  CHECK(ds.excluded == 0);

  for (int i = 0; i < 16; ++i) {
    CHECK(ds.U_star.row(i).cwiseAbs().maxCoeff() <= prob.u_max + 1e-12);
    const ControlPolicy p = solve_linear_mpc(prob, ds.X_star.row(i).transpose());
    CHECK((ds.U_star.row(i).transpose() - p.u).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("cstr dataset rows chain through the plant dynamics") {
  CstrMpcProblem prob;
  CstrSamplingConfig cfg;
  cfg.n_init = 3;
  cfg.rollout = 4;
  cfg.seed = 42;
  const PolicyDataset ds = generate_cstr_dataset(prob, cfg);
  REQUIRE(ds.X_star.rows() == 12);
  REQUIRE(ds.X_star.cols() == 3);
  REQUIRE(ds.U_star.cols() == prob.N);

  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 4; ++k) {
      const int i = r * 4 + k;
      // Reference constant within a rollout, state within sampling ranges
      // at the rollout head.
      CHECK(ds.X_star(i, 2) == ds.X_star(r * 4, 2));
      // Box and rate feasibility of the recorded policy.
      for (int j = 0; j < prob.N; ++j) {
        CHECK(ds.U_star(i, j) >= prob.u_min - 1e-8);
        CHECK(ds.U_star(i, j) <= prob.u_max + 1e-8);
        if (j + 1 < prob.N)
          CHECK(std::abs(ds.U_star(i, j + 1) - ds.U_star(i, j)) <=
                prob.rate_bound + 1e-8);
      }
      if (k + 1 < 4) {
        // Receding horizon: the next row is one plant step under the first
        // input of this row's policy.
        const CstrState next = integrate_cstr(
            prob.params, {ds.X_star(i, 0), ds.X_star(i, 1)}, ds.U_star(i, 0),
            prob.dt, prob.substeps);
        CHECK(ds.X_star(i + 1, 0) == doctest::Approx(next.ca_hat).epsilon(1e-12));
        CHECK(ds.X_star(i + 1, 1) == doctest::Approx(next.tr_hat).epsilon(1e-12));
      }
    }
    CHECK(ds.X_star(r * 4, 0) >= cfg.ca_lo);
    CHECK(ds.X_star(r * 4, 0) <= cfg.ca_hi);
    CHECK(ds.X_star(r * 4, 1) >= cfg.tr_lo);
    CHECK(ds.X_star(r * 4, 1) <= cfg.tr_hi);
    CHECK(ds.X_star(r * 4, 2) >= cfg.r0_lo);
    CHECK(ds.X_star(r * 4, 2) <= cfg.r0_hi);
  }
}

TEST_CASE("cstr dataset generation is reproducible and job-invariant") {
  CstrMpcProblem prob;
  CstrSamplingConfig cfg;
  cfg.n_init = 2;
  cfg.rollout = 3;
  cfg.seed = 7;
  const PolicyDataset a = generate_cstr_dataset(prob, cfg, 1);
  const PolicyDataset b = generate_cstr_dataset(prob, cfg, 4);
  CHECK((a.X_star - b.X_star).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.U_star - b.U_star).cwiseAbs().maxCoeff() == 0.0);

  CstrSamplingConfig other = cfg;
  other.seed = 8;
  const PolicyDataset c = generate_cstr_dataset(prob, other);
  CHECK((a.X_star - c.X_star).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("split partitions rows disjointly and reproducibly") {
  PolicyDataset ds;
  ds.X_star = Matrix::Random(20, 3);
  ds.U_star = Matrix::Random(20, 4);
  split(ds, 15, 99);
  REQUIRE(ds.train_idx.size() == 15);
  REQUIRE(ds.test_idx.size() == 5);

  std::set<int> seen(ds.train_idx.begin(), ds.train_idx.end());
  seen.insert(ds.test_idx.begin(), ds.test_idx.end());
  CHECK(seen.size() == 20);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 19);

  CHECK(ds.train_X().rows() == 15);
  CHECK(ds.train_U().rows() == 15);
  CHECK(ds.test_X().rows() == 5);
  CHECK((ds.train_X().row(0).transpose() -
         ds.X_star.row(ds.train_idx[0]).transpose())
            .cwiseAbs()
            .maxCoeff() == 0.0);

  PolicyDataset ds2;
  ds2.X_star = ds.X_star;
  ds2.U_star = ds.U_star;
  split(ds2, 15, 99);
  CHECK(ds2.train_idx == ds.train_idx);

  split(ds2, 15, 100);  // a different seed reshuffles
  CHECK(ds2.train_idx != ds.train_idx);

  CHECK_THROWS_AS(split(ds, 25, 0), std::invalid_argument);
  CHECK_THROWS_AS(split(ds, -1, 0), std::invalid_argument);
}
