#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "cfa/error.hpp"

namespace cfa {

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

struct LogisticConfig {
  double l2_penalty = 1e-4;  // on slopes only; intercept unpenalized
  int max_iter = 100;
  double tol = 1e-10;
};

struct LogisticModel {
  double intercept = 0.0;
  Eigen::VectorXd coef;
  Eigen::MatrixXd covariance;  // inverse penalized Hessian, [intercept, coef...]
  int iterations = 0;
  bool converged = false;

  double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return sigmoid(intercept + row.dot(coef.transpose()));
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const {
    Eigen::VectorXd t = (features * coef).array() + intercept;
    return t.unaryExpr([](double v) { return sigmoid(v); });
  }

  Eigen::VectorXd standard_errors() const { return covariance.diagonal().cwiseSqrt(); }
};

namespace detail {

inline double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace detail

/// Penalized log-likelihood  sum_i [y_i t_i - log(1 + e^{t_i})] - l2/2 |beta|^2
/// at params = [intercept, beta...].
inline double logistic_objective(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                                 const Eigen::VectorXd& params, double l2) {
  Eigen::VectorXd t = (features * params.tail(params.size() - 1)).array() + params(0);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) ll += labels(i) * t(i) - detail::log1pexp(t(i));
  return ll - 0.5 * l2 * params.tail(params.size() - 1).squaredNorm();
}

inline Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& features,
                                         const Eigen::VectorXd& labels,
                                         const Eigen::VectorXd& params, double l2) {
  const Eigen::Index p = features.cols();
  Eigen::VectorXd t = (features * params.tail(p)).array() + params(0);
  Eigen::VectorXd r(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    r(i) = labels(i) - sigmoid(t(i));
  }
  Eigen::VectorXd g(p + 1);
  g(0) = r.sum();
  g.tail(p) = features.transpose() * r - l2 * params.tail(p);
  return g;
}

/// L2-regularized logistic regression by Newton-Raphson (IRLS) with step
/// halving. On hitting max_iter the last iterate is returned with
/// converged = false.
inline LogisticModel fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                                  const LogisticConfig& cfg = {}) {
  const Eigen::Index n = features.rows(), p = features.cols();
  if (cfg.l2_penalty < 0 || cfg.max_iter < 1)
    throw Error(ErrorCode::BadConfig, "logistic: l2_penalty >= 0 and max_iter >= 1 required");
  double pos = labels.sum();
  if (n == 0 || pos <= 0 || pos >= static_cast<double>(n))
    throw Error(ErrorCode::Degenerate, "logistic: both classes must be present");

  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = features;
  Eigen::VectorXd params = Eigen::VectorXd::Zero(p + 1);
  params(0) = std::log(pos / (static_cast<double>(n) - pos));
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Identity(p + 1, p + 1) * cfg.l2_penalty;
  penalty(0, 0) = 0.0;

  LogisticModel model;
  double obj = logistic_objective(features, labels, params, cfg.l2_penalty);
  Eigen::MatrixXd hessian(p + 1, p + 1);
  for (int it = 0; it < cfg.max_iter; ++it) {
    Eigen::VectorXd t = design * params;
    Eigen::VectorXd prob(n), weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(t(i));
      weight(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-12);
    }
    Eigen::VectorXd grad = design.transpose() * (labels - prob) - penalty * params;
    hessian = design.transpose() * weight.asDiagonal() * design + penalty;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      Eigen::MatrixXd jittered = hessian + 1e-8 * Eigen::MatrixXd::Identity(p + 1, p + 1);
      step = jittered.ldlt().solve(grad);
    }
    double scale = 1.0, next_obj = obj;
    Eigen::VectorXd next = params;
    for (int h = 0; h < 30; ++h) {
      next = params + scale * step;
      next_obj = logistic_objective(features, labels, next, cfg.l2_penalty);
      if (next_obj >= obj - 1e-12 * std::abs(obj)) break;
      scale *= 0.5;
    }
    double change = std::abs(next_obj - obj);
    params = next;
    model.iterations = it + 1;
    bool small_step = (scale * step).cwiseAbs().maxCoeff() < 1e-10;
    obj = next_obj;
    if (change <= cfg.tol * (std::abs(obj) + cfg.tol) || small_step) {
      model.converged = true;
      break;
    }
  }
  {
    Eigen::VectorXd t = design * params;
    Eigen::VectorXd weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double pr = sigmoid(t(i));
      weight(i) = std::max(pr * (1.0 - pr), 1e-12);
    }
    hessian = design.transpose() * weight.asDiagonal() * design + penalty;
  }
  model.intercept = params(0);
  model.coef = params.tail(p);
  model.covariance = hessian.ldlt().solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
  return model;
}

}  // namespace cfa
