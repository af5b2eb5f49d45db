#pragma once

// Robustness values for the treatment coefficient of a linear outcome model,
// a constructive oracle for them, and overlap trimming of the decomposition.

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cfa/decomp.hpp"
#include "cfa/error.hpp"
#include "cfa/nuisance.hpp"
#include "cfa/ols.hpp"
#include "cfa/parallel.hpp"
#include "cfa/rng.hpp"
#include "cfa/sfm.hpp"

namespace cfa {

/// Partial R^2 that a confounder needs with both treatment and outcome to
/// move the estimate by a fraction q of itself.
inline double robustness_value_q(double t, double dof, double q = 1.0) {
  if (!(dof > 0)) throw Error(ErrorCode::DegenerateModel, "robustness value needs dof > 0");
  double f = q * std::abs(t) / std::sqrt(dof);
  if (f == 0) return 0.0;
  double f2 = f * f;
  return 0.5 * (std::sqrt(f2 * f2 + 4.0 * f2) - f2);
}

/// Strength needed to make the estimate insignificant at level alpha.
inline double robustness_value_alpha(double t, double dof, double q = 1.0, double alpha = 0.05) {
  if (!(dof > 1)) throw Error(ErrorCode::DegenerateModel, "robustness value needs dof > 1");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::BadConfig, "alpha must be in (0,1)");
  boost::math::students_t dist(dof - 1);
  double t_crit = boost::math::quantile(boost::math::complement(dist, alpha / 2));
  double f_crit = t_crit / std::sqrt(dof - 1);
  double fq = q * std::abs(t) / std::sqrt(dof);
  double fqa = fq - f_crit;
  if (fqa <= 0) return 0.0;
  // A confounder explaining all residual treatment variance cannot do more.
  if (fq > 1.0 / f_crit) return (fq * fq - f_crit * f_crit) / (1.0 + fq * fq);
  double a2 = fqa * fqa;
  return 0.5 * (std::sqrt(a2 * a2 + 4.0 * a2) - a2);
}

struct Benchmark {
  std::string variable;
  double r2_dz_x = 0.0;   // partial R^2 with treatment given the other covariates
  double r2_yz_dx = 0.0;  // partial R^2 with outcome given treatment and other covariates
};

struct SensitivityReport {
  double estimate = 0.0;
  double se = 0.0;
  double treatment_tstat = 0.0;
  double dof = 0.0;
  double q = 1.0;
  double alpha = 0.05;
  double rv_q1 = 0.0;
  double rv_alpha = 0.0;
  std::vector<Benchmark> benchmarks;
};

namespace detail {

inline Eigen::MatrixXd drop_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(m.rows(), m.cols() - static_cast<Eigen::Index>(cols.size()));
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    if (std::find(cols.begin(), cols.end(), j) == cols.end()) out.col(c++) = m.col(j);
  return out;
}

inline double partial_r2(const Eigen::MatrixXd& full, const Eigen::VectorXd& target,
                         const std::vector<Eigen::Index>& cols) {
  double rss_full = fit_ols(full, target).rss;
  double rss_reduced = fit_ols(drop_columns(full, cols), target).rss;
  return rss_reduced > 0 ? (rss_reduced - rss_full) / rss_reduced : 0.0;
}

}  // namespace detail

/// Regresses Y on [X, Z, W] and reports robustness values for the X
/// coefficient, with every confounder and mediator as a benchmark.
inline SensitivityReport robustness_value(const Dataset& data, double q = 1.0, double alpha = 0.05) {
  if (!(q > 0)) throw Error(ErrorCode::BadConfig, "q must be positive");
  DesignMatrices dm = encode(data);
  const Eigen::Index kz = dm.z.values.cols(), kw = dm.w.values.cols();
  Eigen::MatrixXd cov(dm.x.size(), kz + kw);
  cov << dm.z.values, dm.w.values;
  Eigen::MatrixXd reg(dm.x.size(), 1 + kz + kw);
  reg << dm.x, cov;
  OlsFit fit = fit_ols(reg, dm.y);

  SensitivityReport r;
  r.estimate = fit.coef(1);
  r.se = fit.se(1);
  r.treatment_tstat = fit.t(1);
  r.dof = fit.dof;
  r.q = q;
  r.alpha = alpha;
  r.rv_q1 = robustness_value_q(r.treatment_tstat, r.dof, q);
  r.rv_alpha = robustness_value_alpha(r.treatment_tstat, r.dof, q, alpha);

  std::vector<std::size_t> sources(dm.z.source);
  sources.insert(sources.end(), dm.w.source.begin(), dm.w.source.end());
  std::vector<std::size_t> seen;
  for (std::size_t c = 0; c < sources.size(); ++c) {
    if (std::find(seen.begin(), seen.end(), sources[c]) != seen.end()) continue;
    seen.push_back(sources[c]);
    std::vector<Eigen::Index> cols;
    for (std::size_t k = 0; k < sources.size(); ++k)
      if (sources[k] == sources[c]) cols.push_back(static_cast<Eigen::Index>(k));
    Benchmark b;
    b.variable = data.schema().variable(sources[c]).name;
    b.r2_dz_x = detail::partial_r2(cov, dm.x, cols);
    std::vector<Eigen::Index> shifted;
    for (auto k : cols) shifted.push_back(k + 1);
    b.r2_yz_dx = detail::partial_r2(reg, dm.y, shifted);
    r.benchmarks.push_back(b);
  }
  return r;
}

struct GridOracleResult {
  double coef = 0.0, se = 0.0, t = 0.0, dof = 0.0;
  double unadjusted_coef = 0.0, unadjusted_t = 0.0;
};

/// Builds a confounder U with partial R^2 = r2 on treatment (given the
/// covariates) and on outcome (given treatment and covariates), then refits
/// y ~ d + covariates + U. The sign of U's outcome loading is chosen to pull
/// the coefficient toward zero.
inline GridOracleResult rv_grid_oracle(const Eigen::MatrixXd& covariates, const Eigen::VectorXd& d,
                                       const Eigen::VectorXd& y, double r2, std::uint64_t seed = 1) {
  const Eigen::Index n = d.size(), k = covariates.cols();
  if (!(r2 >= 0 && r2 < 1)) throw Error(ErrorCode::ConstructionFailure, "target partial R^2 must be in [0,1)");
  if (n < k + 6) throw Error(ErrorCode::ConstructionFailure, "too few rows to construct a confounder");

  Eigen::MatrixXd base(n, k + 1);
  base.col(0).setOnes();
  base.rightCols(k) = covariates;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(base);
  auto resid = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v - base * qr.solve(v); };

  Eigen::MatrixXd reg(n, 1 + k);
  reg << d, covariates;
  OlsFit plain = fit_ols(reg, y);
  GridOracleResult out;
  out.unadjusted_coef = plain.coef(1);
  out.unadjusted_t = plain.t(1);

  Eigen::VectorXd dt = resid(d);
  if (!(dt.norm() > 0)) throw Error(ErrorCode::ConstructionFailure, "treatment is collinear with covariates");
  Eigen::VectorXd dhat = dt / dt.norm();
  Eigen::VectorXd yt = resid(y);
  Eigen::VectorXd ey = yt - dhat * dhat.dot(yt);
  if (!(ey.norm() > 0)) throw Error(ErrorCode::ConstructionFailure, "outcome is fully explained");
  Eigen::VectorXd ehat = ey / ey.norm();
  Rng rng(seed, 0x5e45);
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi(i) = rng.normal();
  xi = resid(xi);
  xi -= dhat * dhat.dot(xi);
  xi -= ehat * ehat.dot(xi);
  if (!(xi.norm() > 0)) throw Error(ErrorCode::ConstructionFailure, "no free direction for the confounder");
  xi /= xi.norm();

  const double a = std::sqrt(r2), b = std::sqrt(r2 * (1 - r2)), c = 1 - r2;
  OlsFit best;
  bool have = false;
  for (double sign : {1.0, -1.0}) {
    Eigen::VectorXd u = a * dhat + sign * b * ehat + c * xi;
    Eigen::MatrixXd ru(n, 2 + k);
    ru << d, covariates, u;
    OlsFit f = fit_ols(ru, y);
    if (!have || std::abs(f.coef(1)) < std::abs(best.coef(1))) {
      best = f;
      have = true;
    }
  }
  out.coef = best.coef(1);
  out.se = best.se(1);
  out.t = best.t(1);
  out.dof = best.dof;
  return out;
}

// ---------------------------------------------------------------------------
// Overlap trimming

struct TrimEntry {
  int percentile = 0;
  double lower = 0.0, upper = 1.0;  // retained propensity range
  std::size_t n_retained = 0;
  DecompositionReport report;
};

struct TrimmingCurve {
  std::vector<TrimEntry> entries;
};

struct TrimmingOptions {
  std::vector<int> percentiles = {0, 1, 2, 3, 4, 5};
  int folds = 10;
  std::uint64_t seed = 1;
  NuisanceConfig nuisance;
  int threads = 1;
};

/// Type-7 (linear interpolation) sample quantile.
inline double quantile7(std::vector<double> v, double p) {
  if (v.empty()) throw Error(ErrorCode::EmptyAfterTrim, "quantile of empty sample");
  std::sort(v.begin(), v.end());
  double h = p * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Rows whose propensity lies within [q_p, q_{100-p}] of the pooled distribution.
inline std::vector<std::size_t> trimmed_rows(const Eigen::VectorXd& e1, int percentile, double* lower = nullptr,
                                             double* upper = nullptr) {
  std::vector<double> v(e1.data(), e1.data() + e1.size());
  double lo = quantile7(v, percentile / 100.0), hi = quantile7(v, 1.0 - percentile / 100.0);
  if (lower) *lower = lo;
  if (upper) *upper = hi;
  std::vector<std::size_t> keep;
  for (Eigen::Index i = 0; i < e1.size(); ++i)
    if (percentile == 0 || (e1(i) >= lo && e1(i) <= hi)) keep.push_back(static_cast<std::size_t>(i));
  return keep;
}

/// Re-estimates the debiased decomposition after dropping rows in both
/// propensity tails. Percentile 0 reuses the supplied fits, so it equals the
/// untrimmed report exactly; other thresholds refit every nuisance.
inline TrimmingCurve trimming_curve(const Dataset& data, const NuisanceFits& fits, const TrimmingOptions& opt = {}) {
  if (fits.size() != data.n()) throw Error(ErrorCode::SchemaMismatch, "fits do not cover every row");
  for (int p : opt.percentiles)
    if (p < 0 || p >= 50) throw Error(ErrorCode::BadConfig, "trimming percentiles must be in [0, 50)");
  TrimmingCurve curve;
  curve.entries.resize(opt.percentiles.size());
  parallel_for(opt.percentiles.size(), opt.threads, [&](std::size_t k) {
    TrimEntry& e = curve.entries[k];
    e.percentile = opt.percentiles[k];
    auto keep = trimmed_rows(fits.e1, e.percentile, &e.lower, &e.upper);
    e.n_retained = keep.size();
    if (e.percentile == 0) {
      e.report = debiased_decomposition(data, fits);
      return;
    }
    if (keep.size() < static_cast<std::size_t>(std::max(opt.folds, 2)))
      throw Error(ErrorCode::EmptyAfterTrim, "too few rows left after trimming at percentile " +
                                                 std::to_string(e.percentile));
    Dataset sub = data.subset(keep);
    auto folds = assign_folds(sub.n(), opt.folds, splitmix64(opt.seed ^ (0x7219ULL + static_cast<std::uint64_t>(e.percentile))));
    NuisanceConfig nc = opt.nuisance;
    nc.threads = 1;
    e.report = debiased_decomposition(sub, cross_fit(sub, folds, nc));
  });
  return curve;
}

}  // namespace cfa
