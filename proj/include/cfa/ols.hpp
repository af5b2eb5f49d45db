#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "cfa/error.hpp"

namespace cfa {

struct OlsFit {
  Eigen::VectorXd coef;  // [intercept, columns...]
  Eigen::VectorXd se;
  double rss = 0.0;
  double dof = 0.0;

  double t(Eigen::Index k) const { return coef(k) / se(k); }
};

/// Least squares with an intercept prepended. Throws DegenerateModel when the
/// design is rank deficient or leaves no residual degrees of freedom.
inline OlsFit fit_ols(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& y) {
  const Eigen::Index n = regressors.rows(), p = regressors.cols() + 1;
  if (n <= p) throw Error(ErrorCode::DegenerateModel, "ols: no residual degrees of freedom");
  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  design.rightCols(p - 1) = regressors;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw Error(ErrorCode::DegenerateModel, "ols: design matrix is singular");
  OlsFit fit;
  fit.coef = qr.solve(y);
  Eigen::VectorXd resid = y - design * fit.coef;
  fit.rss = resid.squaredNorm();
  fit.dof = static_cast<double>(n - p);
  double sigma2 = fit.rss / fit.dof;
  Eigen::MatrixXd xtx_inv = (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.se = (sigma2 * xtx_inv.diagonal()).cwiseSqrt();
  return fit;
}

/// Ridge regression (intercept unpenalized); used when a linear learner is
/// configured for a continuous target.
inline Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& y, double l2) {
  const Eigen::Index n = regressors.rows(), p = regressors.cols() + 1;
  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  design.rightCols(p - 1) = regressors;
  Eigen::MatrixXd a = design.transpose() * design;
  a.diagonal().tail(p - 1).array() += l2;
  a.diagonal().array() += 1e-12 * (1.0 + a.diagonal().maxCoeff());
  return a.ldlt().solve(design.transpose() * y);
}

}  // namespace cfa
