#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfa/decomp.hpp"
#include "cfa/gbt.hpp"
#include "cfa/logistic.hpp"
#include "cfa/nuisance.hpp"
#include "cfa/rng.hpp"
#include "cfa/synth.hpp"

using namespace cfa;

TEST(Logistic, GradientMatchesFiniteDifferences) {
  Rng rng(3, 1);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 30, p = 3;
    Eigen::MatrixXd f(n, p);
    Eigen::VectorXd y(n), params(p + 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) f(i, j) = rng.normal();
      y(i) = rng.uniform() < 0.4 ? 1 : 0;
    }
    for (int j = 0; j <= p; ++j) params(j) = 0.5 * rng.normal();
    const double l2 = 0.3;
    auto g = logistic_gradient(f, y, params, l2);
    for (int j = 0; j <= p; ++j) {
      const double h = 1e-5;
      Eigen::VectorXd a = params, b = params;
      a(j) += h;
      b(j) -= h;
      double fd = (logistic_objective(f, y, a, l2) - logistic_objective(f, y, b, l2)) / (2 * h);
      EXPECT_NEAR(g(j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Logistic, SeparableDataStaysFiniteWithPenalty) {
  Eigen::MatrixXd f(20, 1);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    f(i, 0) = i - 9.5;
    y(i) = i >= 10 ? 1 : 0;
  }
  auto m = fit_logistic(f, y, {0.1, 100, 1e-10});
  EXPECT_TRUE(std::isfinite(m.coef(0)));
  auto p = m.predict(f);
  for (int i = 1; i < 20; ++i) EXPECT_GT(p(i), p(i - 1));
}

TEST(Logistic, ConstantFeatureGivesBaseRate) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Constant(50, 1, 2.0);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y(i) = i % 5 == 0 ? 1 : 0;
  auto m = fit_logistic(f, y, {1e-3, 100, 1e-12});
  auto p = m.predict(f);
  for (int i = 0; i < 50; ++i) EXPECT_NEAR(p(i), 0.2, 1e-6);
}

TEST(Logistic, RecoversSimulatedCoefficients) {
  const int n = 50000;
  Rng rng(9, 2);
  Eigen::MatrixXd f(n, 2);
  Eigen::VectorXd y(n);
  const double b0 = -0.5, b1 = 0.8, b2 = -1.2;
  for (int i = 0; i < n; ++i) {
    f(i, 0) = rng.normal();
    f(i, 1) = rng.uniform() < 0.5 ? 1.0 : 0.0;
    y(i) = rng.uniform() < sigmoid(b0 + b1 * f(i, 0) + b2 * f(i, 1)) ? 1 : 0;
  }
  auto m = fit_logistic(f, y, {0.0, 100, 1e-12});
  EXPECT_TRUE(m.converged);
  auto se = m.standard_errors();
  EXPECT_LT(std::abs(m.intercept - b0), 3 * se(0));
  EXPECT_LT(std::abs(m.coef(0) - b1), 3 * se(1));
  EXPECT_LT(std::abs(m.coef(1) - b2), 3 * se(2));
}

TEST(Logistic, DegenerateLabels) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Random(10, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
  try {
    fit_logistic(f, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Degenerate);
  }
}

TEST(Gbt, ConstantTargetPredictsConstant) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Random(200, 3);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(200, 2.5);
  auto m = fit_gbt(f, y, GbtLoss::Squared, {});
  auto p = m.predict(Eigen::MatrixXd::Random(40, 3));
  for (int i = 0; i < 40; ++i) EXPECT_DOUBLE_EQ(p(i), 2.5);
}

TEST(Gbt, StumpLearnsThreshold) {
  const int n = 1000;
  Rng rng(4, 4);
  Eigen::MatrixXd f(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    f(i, 0) = rng.normal();
    f(i, 1) = rng.normal();
    y(i) = f(i, 0) > 0 ? 1 : 0;
  }
  GbtConfig c;
  c.max_depth = 1;
  auto m = fit_gbt(f, y, GbtLoss::Logistic, c);
  auto p = m.predict(f);
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    correct += (p(i) > 0.5) == (y(i) > 0.5);
    EXPECT_GT(p(i), 0.0);
    EXPECT_LT(p(i), 1.0);
  }
  EXPECT_GE(correct, 990);
}

TEST(Gbt, BeatsLinearOnFriedmanSurface) {
  auto make = [](int n, std::uint64_t key, Eigen::MatrixXd& f, Eigen::VectorXd& y) {
    Rng rng(21, key);
    f.resize(n, 5);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 5; ++j) f(i, j) = rng.uniform();
      y(i) = 10 * std::sin(M_PI * f(i, 0) * f(i, 1)) + 20 * std::pow(f(i, 2) - 0.5, 2) + 10 * f(i, 3) +
             5 * f(i, 4) + rng.normal();
    }
  };
  Eigen::MatrixXd ftr, fte;
  Eigen::VectorXd ytr, yte;
  make(3000, 1, ftr, ytr);
  make(1000, 2, fte, yte);
  auto trees = fit_regressor(ftr, ytr, LearnerConfig::trees());
  auto lin = fit_regressor(ftr, ytr, LearnerConfig::linear());
  auto rmse = [&](const FittedModel& m) { return std::sqrt((m.predict(fte) - yte).squaredNorm() / 1000.0); };
  EXPECT_LT(rmse(trees), rmse(lin));
}

TEST(Gbt, Deterministic) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Random(300, 3);
  Eigen::VectorXd y = f.col(0).array().square() + f.col(1).array();
  auto a = fit_gbt(f, y, GbtLoss::Squared, {}).predict(f);
  auto b = fit_gbt(f, y, GbtLoss::Squared, {}).predict(f);
  EXPECT_EQ(a, b);
}

TEST(Gbt, RejectsBadConfig) {
  LearnerConfig c;
  c.learning_rate = 0;
  EXPECT_THROW(c.check(), Error);
  c = LearnerConfig{};
  c.max_depth = 0;
  EXPECT_THROW(fit_regressor(Eigen::MatrixXd::Random(50, 2), Eigen::VectorXd::Random(50), c), Error);
}

TEST(CrossFit, NullPropensityNearTruth) {
  auto spec = null_1();
  const std::size_t n = 10000;
  auto d = sample(spec, n);
  auto fits = cross_fit(d, assign_folds(n, 10, 1), {});
  const double truth = sigmoid(spec.x_intercept);
  std::size_t near = 0;
  for (std::size_t i = 0; i < n; ++i) near += std::abs(fits.e1(static_cast<Eigen::Index>(i)) - truth) <= 0.05;
  EXPECT_GE(static_cast<double>(near), 0.95 * n);
}

TEST(CrossFit, RandomizedOddsNearOne) {
  auto spec = null_1();
  spec.x_intercept = 0.0;
  const std::size_t n = 10000;
  auto fits = cross_fit(sample(spec, n), assign_folds(n, 10, 2), {});
  std::vector<double> o(fits.odds0.data(), fits.odds0.data() + n);
  std::nth_element(o.begin(), o.begin() + n / 2, o.end());
  EXPECT_GE(o[n / 2], 0.8);
  EXPECT_LE(o[n / 2], 1.25);
}

TEST(CrossFit, RangeDeterminismAndPurity) {
  auto spec = desk_1();
  const std::size_t n = 3000;
  auto d = sample(spec, n);
  auto folds = assign_folds(n, 5, 3);
  NuisanceConfig cfg;
  cfg.outcome.n_trees = cfg.nested.n_trees = cfg.group_outcome.n_trees = cfg.mediator_odds.n_trees = 30;
  auto a = cross_fit(d, folds, cfg);
  for (std::size_t i = 0; i < n; ++i) {
    auto k = static_cast<Eigen::Index>(i);
    EXPECT_GE(a.e1(k), cfg.clip);
    EXPECT_LE(a.e1(k), 1 - cfg.clip);
    EXPECT_GT(a.odds0(k), 0);
    EXPECT_TRUE(std::isfinite(a.odds0(k)));
  }
  // permuting rows inside fold 0 leaves other folds' predictions untouched
  auto rows0 = folds.rows_in(0);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> shuffled = rows0;
  std::reverse(shuffled.begin(), shuffled.end());
  for (std::size_t k = 0; k < rows0.size(); ++k) perm[rows0[k]] = shuffled[k];
  auto b = cross_fit(d.subset(perm), folds, cfg);
  auto c = cross_fit(d, folds, cfg);
  EXPECT_EQ(a.mu1, c.mu1);
  EXPECT_EQ(a.e1, c.e1);
  for (std::size_t i = 0; i < n; ++i) {
    if (folds.fold_of[i] == 0) continue;
    auto k = static_cast<Eigen::Index>(i);
    EXPECT_NEAR(a.mu1(k), b.mu1(k), 1e-9);
    EXPECT_NEAR(a.e1(k), b.e1(k), 1e-9);
  }
}

TEST(CrossFit, FoldCountStability) {
  const std::size_t n = 20000;
  auto d = sample(desk_1(), n);
  auto r2 = debiased_decomposition(d, cross_fit(d, assign_folds(n, 2, 5), {}));
  auto r10 = debiased_decomposition(d, cross_fit(d, assign_folds(n, 10, 5), {}));
  EXPECT_LT(std::abs(r2.tv.estimate - r10.tv.estimate), 2 * std::hypot(r2.tv.se, r10.tv.se));
  EXPECT_LT(std::abs(r2.x_de.estimate - r10.x_de.estimate), 2 * std::hypot(r2.x_de.se, r10.x_de.se));
}

TEST(CrossFit, FoldCollapse) {
  auto spec = null_1();
  spec.x_intercept = -6;
  auto d = sample(spec, 100);
  try {
    cross_fit(d, assign_folds(100, 10, 1), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FoldCollapse);
  }
}
