#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bsps/errors.hpp"
#include "bsps/experiments.hpp"
#include "support/helpers.hpp"

using namespace bsps;
using namespace bsps::testing;

TEST_CASE("simulate_toy: reproducible, regions, DGP reconstruction") {
  const ToyDataset a = simulate_toy(7);
  const ToyDataset b = simulate_toy(7);
  CHECK(a.train_sites.coords() == b.train_sites.coords());
  CHECK(a.y_train == b.y_train);
  CHECK(a.x_test == b.x_test);

  CHECK(a.train_sites.n() == 300);
  CHECK(a.test_sites.n() == 200);
  for (int i = 0; i < 300; ++i)
    CHECK(a.region1_train[i] == (a.train_sites.coords()(i, 0) <= 0.0));

  // residual reconstruction pins the piecewise mean structure: y - w - m(x)
  // must be unit-variance white noise
  double sum = 0.0, sum2 = 0.0;
  int count = 0;
  auto accumulate = [&](const SiteSet& sites, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    for (int i = 0; i < sites.n(); ++i) {
      const double x1 = x(i, 0), x2 = x(i, 1);
      const double mean = sites.coords()(i, 0) <= 0.0 ? x1 - 0.5 * x2 * x2
                                                      : x1 * x1 + x2 * x2;
      const double eps = y(i) - w(i) - mean;
      sum += eps;
      sum2 += eps * eps;
      ++count;
    }
  };
  for (int seed = 0; seed < 20; ++seed) {
    const ToyDataset ds = simulate_toy(seed);
    accumulate(ds.train_sites, ds.x_train, ds.y_train, ds.w_train);
    accumulate(ds.test_sites, ds.x_test, ds.y_test, ds.w_test);
  }
  CHECK(sum / count == doctest::Approx(0.0).epsilon(0.05));
  CHECK(sum2 / count == doctest::Approx(1.0).epsilon(0.05));

  // construction-induced covariate correlation near r = 0.2
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  int m = 0;
  for (int seed = 100; seed < 140; ++seed) {
    const ToyDataset ds = simulate_toy(seed);
    for (int i = 0; i < 300; ++i) {
      const double u = ds.x_train(i, 0), v = ds.x_train(i, 1);
      sx += u;
      sy += v;
      sxy += u * v;
      sxx += u * u;
      syy += v * v;
      ++m;
    }
  }
  const double corr = (sxy / m - sx / m * sy / m) /
                      std::sqrt((sxx / m - sx / m * sx / m) * (syy / m - sy / m * sy / m));
  CHECK(corr == doctest::Approx(0.2).epsilon(0.5));
  CHECK(std::abs(corr - 0.2) < 0.1);
}

TEST_CASE("simulate_scenario: DGP reconstruction for both scenarios") {
  CHECK_THROWS_AS(simulate_scenario(3, 5, 1), UnknownExperiment);
  CHECK_THROWS_AS(simulate_scenario(1, 4, 1), ConfigError);

  for (int which : {1, 2}) {
    double sum = 0.0, sum2 = 0.0;
    int count = 0;
    for (int seed = 0; seed < 25; ++seed) {
      const ScenarioDataset ds = simulate_scenario(which, 6, seed);
      CHECK(ds.train_sites.n() == 300);
      CHECK(ds.test_sites.n() == 100);
      auto accumulate = [&](const SiteSet& sites, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
        for (int i = 0; i < sites.n(); ++i) {
          const double s1 = sites.coords()(i, 0), s2 = sites.coords()(i, 1);
          double mean, wterm;
          if (which == 1) {
            wterm = w(i);
            mean = x(i, 2) * x(i, 2) * std::exp(-0.3 * (s1 * s1 + s2 * s2)) +
                   s2 * std::sin(2.0 * x(i, 1));
          } else {
            wterm = 2.0 * w(i);
            mean = 0.5 * std::sin(M_PI * x(i, 0) * x(i, 1)) +
                   (x(i, 2) - 0.5) * (x(i, 2) - 0.5) + 0.5 * x(i, 3) + 0.25 * x(i, 4);
          }
          const double eps = y(i) - wterm - mean;
          sum += eps;
          sum2 += eps * eps;
          ++count;
        }
      };
      accumulate(ds.train_sites, ds.x_train, ds.y_train, ds.w_train);
      accumulate(ds.test_sites, ds.x_test, ds.y_test, ds.w_test);
    }
    CHECK(sum / count == doctest::Approx(0.0).epsilon(0.05));
    CHECK(sum2 / count == doctest::Approx(0.49).epsilon(0.05));
  }

  // scenario 2 covariate contributions: Var(x4/2) = 0.25, Var(x5/4) = 0.0625
  double s4 = 0, s4b = 0, s5 = 0, s5b = 0;
  int n_draws = 0;
  for (int seed = 0; seed < 250; ++seed) {
    const ScenarioDataset ds = simulate_scenario(2, 5, seed);
    for (int i = 0; i < 300; ++i) {
      const double t4 = 0.5 * ds.x_train(i, 3), t5 = 0.25 * ds.x_train(i, 4);
      s4 += t4;
      s4b += t4 * t4;
      s5 += t5;
      s5b += t5 * t5;
      ++n_draws;
    }
  }
  CHECK(s4b / n_draws - std::pow(s4 / n_draws, 2) == doctest::Approx(0.25).epsilon(0.03));
  CHECK(s5b / n_draws - std::pow(s5 / n_draws, 2) == doctest::Approx(0.0625).epsilon(0.03));
}

TEST_CASE("mse") {
  Eigen::VectorXd a(2), b(2);
  a << 1, -1;
  b << 1, -1;
  CHECK(mse(a, b) == 0.0);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(mse(zero, a) == doctest::Approx(1.0));

  Rng rng(1);
  Eigen::VectorXd p(100), t(100);
  for (int i = 0; i < 100; ++i) {
    p(i) = rng.normal();
    t(i) = rng.normal();
  }
  // two-pass reference
  double acc = 0.0;
  for (int i = 0; i < 100; ++i) acc += (p(i) - t(i)) * (p(i) - t(i));
  CHECK(mse(p, t) == doctest::Approx(acc / 100.0).epsilon(1e-12));

  Eigen::VectorXd short_v(3);
  CHECK_THROWS_AS(mse(short_v, t), LengthMismatch);
}

TEST_CASE("coverage_and_length") {
  PredictiveSummary s;
  s.mean.resize(4);
  s.lower.resize(4);
  s.upper.resize(4);
  Eigen::VectorXd truth(4);
  truth << 0.0, 1.0, 2.0, 3.0;

  // very wide intervals cover everything
  s.lower.setConstant(-1e12);
  s.upper.setConstant(1e12);
  s.mean.setZero();
  CHECK(coverage_and_length(s, truth).cp == doctest::Approx(100.0));

  // degenerate intervals at a wrong value
  s.lower.setConstant(5.0);
  s.upper.setConstant(5.0);
  const CoverageLength deg = coverage_and_length(s, truth);
  CHECK(deg.cp == 0.0);
  CHECK(deg.al == 0.0);

  // 3 of 4 covered, hand-computed average length
  s.lower << -1, 0.5, 1.5, 3.5;
  s.upper << 1, 1.5, 2.5, 4.0;
  const CoverageLength mixed = coverage_and_length(s, truth);
  CHECK(mixed.cp == doctest::Approx(75.0));
  CHECK(mixed.al == doctest::Approx((2.0 + 1.0 + 1.0 + 0.5) / 4.0));
}

TEST_CASE("roc_auc") {
  Eigen::VectorXd probs(6), labels(6);
  probs << .9, .8, .7, .4, .3, .2;
  labels << 1, 1, 0, 1, 0, 0;
  CHECK(roc_auc(probs, labels) == doctest::Approx(8.0 / 9.0));

  // perfect separation
  Eigen::VectorXd sep(4), lab(4);
  sep << .9, .8, .2, .1;
  lab << 1, 1, 0, 0;
  CHECK(roc_auc(sep, lab) == doctest::Approx(1.0));

  // constant scores give 0.5 under tie averaging
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(6, 0.5);
  CHECK(roc_auc(flat, labels) == doctest::Approx(0.5));

  Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
  CHECK_THROWS_AS(roc_auc(sep, ones), SingleClass);
}

TEST_CASE("run_replications: deterministic and thread-count independent") {
  ExperimentSpec spec = ExperimentSpec::defaults("toy");
  spec.chain.n_burn = 50;
  spec.chain.n_keep = 50;
  spec.run_vb = false;

  const MetricsReport r1 = run_replications(spec, 2, 1000, 1);
  const MetricsReport r2 = run_replications(spec, 2, 1000, 2);
  CHECK(r1.n_failed == 0);
  REQUIRE(r1.replications.size() == r2.replications.size());
  for (std::size_t k = 0; k < r1.replications.size(); ++k) {
    REQUIRE(r1.replications[k].methods.size() == r2.replications[k].methods.size());
    for (std::size_t m = 0; m < r1.replications[k].methods.size(); ++m) {
      CHECK(r1.replications[k].methods[m].method == r2.replications[k].methods[m].method);
      CHECK(r1.replications[k].methods[m].mse == r2.replications[k].methods[m].mse);
      CHECK(r1.replications[k].methods[m].al == r2.replications[k].methods[m].al);
    }
  }

  // single replication: deciles all equal the single value
  const MetricsReport single = run_replications(spec, 1, 55, 1);
  const Eigen::VectorXd dec = single.mse_deciles("BSPS");
  for (int k = 1; k < 9; ++k) CHECK(dec(k) == dec(0));
  CHECK(single.median_mse("BSPS") == dec(0));

  // the BMA weight collapses onto one agent on toy data (the full-sample BIC
  // gap between the region-fitted models is always large)
  CHECK(r1.replications[0].bma_weights.maxCoeff() > 0.9);

  CHECK_THROWS_AS(ExperimentSpec::defaults("nope"), UnknownExperiment);
}
