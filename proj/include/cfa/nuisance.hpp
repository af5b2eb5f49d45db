#pragma once

// Cross-fitted nuisance models consumed by the debiased estimators.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "cfa/error.hpp"
#include "cfa/gbt.hpp"
#include "cfa/logistic.hpp"
#include "cfa/ols.hpp"
#include "cfa/parallel.hpp"
#include "cfa/sfm.hpp"
#include "cfa/strata.hpp"

namespace cfa {

enum class LearnerFamily { LogisticLinear, GradientBoostedTrees };

struct LearnerConfig {
  LearnerFamily family = LearnerFamily::GradientBoostedTrees;
  // trees
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 20;
  // shared: slope penalty for linear models, leaf-weight penalty for trees
  double l2_penalty = 0.0;
  // linear
  int max_iter = 100;
  double tol = 1e-10;

  static LearnerConfig trees(double l2 = 0.0) {
    LearnerConfig c;
    c.l2_penalty = l2;
    return c;
  }
  static LearnerConfig linear(double l2 = 1e-4) {
    LearnerConfig c;
    c.family = LearnerFamily::LogisticLinear;
    c.l2_penalty = l2;
    return c;
  }

  void check() const {
    if (n_trees < 1 || max_depth < 1 || !(learning_rate > 0 && learning_rate <= 1) ||
        min_leaf < 1 || l2_penalty < 0 || max_iter < 1 || !(tol > 0))
      throw Error(ErrorCode::BadConfig, "learner: invalid configuration");
  }

  GbtConfig gbt(std::size_t n_rows) const {
    GbtConfig g{n_trees, max_depth, learning_rate, min_leaf, l2_penalty, 64};
    // small training sets (e.g. a thin treated arm) shrink the leaf floor
    if (n_rows < 2 * static_cast<std::size_t>(g.min_leaf))
      g.min_leaf = std::max(1, static_cast<int>(n_rows / 2));
    return g;
  }

  LogisticConfig logistic() const { return {l2_penalty, max_iter, tol}; }
};

/// A fitted regressor or classifier behind one predict() surface.
class FittedModel {
 public:
  struct Constant {
    double value;
  };
  struct Linear {
    Eigen::VectorXd coef;  // [intercept, slopes...]
  };
  using Impl = std::variant<Constant, Linear, LogisticModel, GbtModel>;

  FittedModel() : impl_(Constant{0.0}) {}
  explicit FittedModel(Impl impl) : impl_(std::move(impl)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const {
    return std::visit(
        [&](const auto& m) -> Eigen::VectorXd {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Constant>) {
            return Eigen::VectorXd::Constant(features.rows(), m.value);
          } else if constexpr (std::is_same_v<T, Linear>) {
            return (features * m.coef.tail(m.coef.size() - 1)).array() + m.coef(0);
          } else {
            return m.predict(features);
          }
        },
        impl_);
  }

  const Impl& impl() const { return impl_; }

 private:
  Impl impl_;
};

inline FittedModel fit_regressor(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                 const LearnerConfig& cfg) {
  cfg.check();
  if (y.size() == 0) throw Error(ErrorCode::Degenerate, "regressor: no training rows");
  if (features.cols() == 0 || y.size() < 2) return FittedModel(FittedModel::Constant{y.mean()});
  if (cfg.family == LearnerFamily::LogisticLinear)
    return FittedModel(FittedModel::Linear{fit_ridge(features, y, cfg.l2_penalty)});
  return FittedModel(fit_gbt(features, y, GbtLoss::Squared, cfg.gbt(static_cast<std::size_t>(y.size()))));
}

inline FittedModel fit_classifier(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                                  const LearnerConfig& cfg) {
  cfg.check();
  if (labels.size() == 0) throw Error(ErrorCode::Degenerate, "classifier: no training rows");
  if (features.cols() == 0 || labels.size() < 2) return FittedModel(FittedModel::Constant{labels.mean()});
  if (cfg.family == LearnerFamily::LogisticLinear)
    return FittedModel(fit_logistic(features, labels, cfg.logistic()));
  return FittedModel(
      fit_gbt(features, labels, GbtLoss::Logistic, cfg.gbt(static_cast<std::size_t>(labels.size()))));
}

struct NuisanceConfig {
  LearnerConfig outcome = LearnerConfig::trees();        // mu(x, w, z), per arm
  LearnerConfig propensity = LearnerConfig::linear();    // e(z)
  LearnerConfig mediator_odds = LearnerConfig::trees(1.0);  // P(x1 | w, z)
  LearnerConfig nested = LearnerConfig::trees();         // eta(z)
  LearnerConfig group_outcome = LearnerConfig::trees();  // m(x, z), per arm
  double clip = 0.01;
  int threads = 1;
};

struct NuisanceFits {
  Eigen::VectorXd mu1, mu0, e1, odds0, eta, m1, m0;
  double clip = 0.0;
  std::size_t clipped_propensity = 0;
  std::size_t clipped_odds = 0;
  std::vector<int> fold_of;  // empty for in-sample fits

  std::size_t size() const { return static_cast<std::size_t>(mu1.size()); }
};

namespace detail {

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

inline Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>(rows[k]));
  return out;
}

inline Eigen::MatrixXd hstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

struct FoldPredictions {
  std::vector<std::size_t> rows;
  Eigen::VectorXd mu1, mu0, e1, odds0, eta, m1, m0;
  std::size_t clipped_e = 0, clipped_odds = 0;
};

}  // namespace detail

/// K-fold cross-fitting: every prediction for a row comes from models trained
/// on the other folds only.
inline NuisanceFits cross_fit(const Dataset& data, const FoldAssignment& folds,
                              const NuisanceConfig& cfg = {}) {
  if (folds.fold_of.size() != data.n())
    throw Error(ErrorCode::BadFoldCount, "fold assignment size differs from dataset");
  if (!(cfg.clip >= 0 && cfg.clip < 0.5)) throw Error(ErrorCode::BadConfig, "clip must be in [0, 0.5)");
  DesignMatrices dm = encode(data);
  const Eigen::MatrixXd wz = detail::hstack(dm.w.values, dm.z.values);
  const Eigen::MatrixXd& z = dm.z.values;
  const auto& schema = data.schema();
  const auto mediators = schema.indices(Role::Mediator);

  std::vector<detail::FoldPredictions> per_fold(static_cast<std::size_t>(folds.k));
  parallel_for(static_cast<std::size_t>(folds.k), cfg.threads, [&](std::size_t f) {
    auto train = folds.rows_not_in(static_cast<int>(f));
    auto test = folds.rows_in(static_cast<int>(f));
    std::vector<std::size_t> t1, t0;
    for (auto i : train) (dm.x(static_cast<Eigen::Index>(i)) > 0.5 ? t1 : t0).push_back(i);
    if (t1.empty() || t0.empty())
      throw Error(ErrorCode::FoldCollapse,
                  "training complement of fold " + std::to_string(f) + " lacks an X group");
    for (auto j : mediators) {
      const auto& spec = schema.variable(j);
      if (!spec.is_discrete()) continue;
      std::vector<bool> seen(static_cast<std::size_t>(spec.cardinality()), false);
      for (auto i : train) seen[static_cast<std::size_t>(data.value(i, j))] = true;
      if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw Error(ErrorCode::FoldCollapse, "training complement of fold " + std::to_string(f) +
                                                 " lacks a level of mediator '" + spec.name + "'");
    }

    auto& out = per_fold[f];
    out.rows = test;
    Eigen::MatrixXd wz_test = detail::take_rows(wz, test), z_test = detail::take_rows(z, test);

    auto mu1_model = fit_regressor(detail::take_rows(wz, t1), detail::take(dm.y, t1), cfg.outcome);
    auto mu0_model = fit_regressor(detail::take_rows(wz, t0), detail::take(dm.y, t0), cfg.outcome);
    out.mu1 = mu1_model.predict(wz_test);
    out.mu0 = mu0_model.predict(wz_test);

    const double lo = cfg.clip, hi = 1.0 - cfg.clip;
    auto clip = [&](Eigen::VectorXd& v, std::size_t& count) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) < lo || v(i) > hi) ++count;
        v(i) = std::clamp(v(i), lo, hi);
      }
    };
    auto e_model = fit_classifier(detail::take_rows(z, train), detail::take(dm.x, train), cfg.propensity);
    out.e1 = e_model.predict(z_test);
    clip(out.e1, out.clipped_e);

    auto odds_model =
        fit_classifier(detail::take_rows(wz, train), detail::take(dm.x, train), cfg.mediator_odds);
    Eigen::VectorXd p1 = odds_model.predict(wz_test);
    clip(p1, out.clipped_odds);
    out.odds0 = (1.0 - p1.array()) / p1.array();

    // eta(z): regress mu1 predictions on z among x0 training rows
    Eigen::VectorXd mu1_on_t0 = mu1_model.predict(detail::take_rows(wz, t0));
    auto eta_model = fit_regressor(detail::take_rows(z, t0), mu1_on_t0, cfg.nested);
    out.eta = eta_model.predict(z_test);

    auto m1_model = fit_regressor(detail::take_rows(z, t1), detail::take(dm.y, t1), cfg.group_outcome);
    auto m0_model = fit_regressor(detail::take_rows(z, t0), detail::take(dm.y, t0), cfg.group_outcome);
    out.m1 = m1_model.predict(z_test);
    out.m0 = m0_model.predict(z_test);
  });

  const auto n = static_cast<Eigen::Index>(data.n());
  NuisanceFits fits;
  for (auto* v : {&fits.mu1, &fits.mu0, &fits.e1, &fits.odds0, &fits.eta, &fits.m1, &fits.m0}) v->resize(n);
  fits.clip = cfg.clip;
  fits.fold_of = folds.fold_of;
  for (const auto& f : per_fold) {
    for (std::size_t k = 0; k < f.rows.size(); ++k) {
      auto i = static_cast<Eigen::Index>(f.rows[k]);
      auto kk = static_cast<Eigen::Index>(k);
      fits.mu1(i) = f.mu1(kk);
      fits.mu0(i) = f.mu0(kk);
      fits.e1(i) = f.e1(kk);
      fits.odds0(i) = f.odds0(kk);
      fits.eta(i) = f.eta(kk);
      fits.m1(i) = f.m1(kk);
      fits.m0(i) = f.m0(kk);
    }
    fits.clipped_propensity += f.clipped_e;
    fits.clipped_odds += f.clipped_odds;
  }
  return fits;
}

/// In-sample saturated (cell-mean / cell-frequency) nuisances for discrete
/// data, unclipped. Cells the decomposition needs must be non-empty;
/// quantities nobody needs (e.g. mu0 in an all-x1 cell) are NaN.
inline NuisanceFits saturated_fits(const Dataset& data) {
  DesignMatrices dm = encode(data);
  StrataIndex s = build_strata(data);
  const std::size_t nz = s.n_z, nw = s.n_w;
  std::vector<double> n_xzw(2 * nz * nw, 0), sum_xzw(2 * nz * nw, 0), n_xz(2 * nz, 0), sum_xz(2 * nz, 0);
  auto cell = [&](int x, std::size_t z, std::size_t w) { return (static_cast<std::size_t>(x) * nz + z) * nw + w; };
  for (std::size_t i = 0; i < data.n(); ++i) {
    int x = dm.x(static_cast<Eigen::Index>(i)) > 0.5 ? 1 : 0;
    double y = dm.y(static_cast<Eigen::Index>(i));
    n_xzw[cell(x, s.z_id[i], s.w_id[i])] += 1;
    sum_xzw[cell(x, s.z_id[i], s.w_id[i])] += y;
    n_xz[static_cast<std::size_t>(x) * nz + s.z_id[i]] += 1;
    sum_xz[static_cast<std::size_t>(x) * nz + s.z_id[i]] += y;
  }
  auto empty_cell = [&](int x, std::size_t z, std::size_t w) {
    return Error(ErrorCode::EmptyStratum, "no rows in cell x=" + std::to_string(x) + ", w=" +
                                              s.w_label(w) + ", z=" + s.z_label(z));
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  // eta(z) = sum_w mu1(w,z) P(w|x0,z)
  std::vector<double> eta(nz, nan);
  for (std::size_t z = 0; z < nz; ++z) {
    if (n_xz[z] == 0) continue;
    if (n_xz[nz + z] == 0) throw Error(ErrorCode::EmptyStratum, "no x=1 rows in z=" + s.z_label(z));
    double acc = 0;
    for (std::size_t w = 0; w < nw; ++w) {
      if (n_xzw[cell(0, z, w)] == 0) continue;
      if (n_xzw[cell(1, z, w)] == 0) throw empty_cell(1, z, w);
      acc += sum_xzw[cell(1, z, w)] / n_xzw[cell(1, z, w)] * n_xzw[cell(0, z, w)] / n_xz[z];
    }
    eta[z] = acc;
  }
  const auto n = static_cast<Eigen::Index>(data.n());
  NuisanceFits f;
  for (auto* v : {&f.mu1, &f.mu0, &f.e1, &f.odds0, &f.eta, &f.m1, &f.m0}) v->resize(n);
  f.clip = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    auto k = static_cast<Eigen::Index>(i);
    std::size_t z = s.z_id[i], w = s.w_id[i];
    double n1 = n_xzw[cell(1, z, w)], n0 = n_xzw[cell(0, z, w)];
    f.mu1(k) = n1 > 0 ? sum_xzw[cell(1, z, w)] / n1 : nan;
    f.mu0(k) = n0 > 0 ? sum_xzw[cell(0, z, w)] / n0 : nan;
    f.odds0(k) = n1 > 0 ? n0 / n1 : nan;
    f.e1(k) = n_xz[nz + z] / (n_xz[z] + n_xz[nz + z]);
    f.eta(k) = eta[z];
    f.m1(k) = n_xz[nz + z] > 0 ? sum_xz[nz + z] / n_xz[nz + z] : nan;
    f.m0(k) = n_xz[z] > 0 ? sum_xz[z] / n_xz[z] : nan;
  }
  return f;
}

}  // namespace cfa
