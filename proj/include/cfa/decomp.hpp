#pragma once

// Total variation and its direct / indirect / spurious decomposition.
//
// Cookbook convention:  tv = x_de - x_ie - x_se, with
//   x_de = E[Y_{x1,W_x0} | x0] - E[Y | x0]
//   x_ie = E[Y_{x1,W_x0} | x0] - E[Y_{x1} | x0]
//   x_se = E[Y_{x1} | x0]      - E[Y | x1]
// Display convention:   tv = direct + indirect + spurious, with
//   direct = x_de, indirect = -x_ie, spurious = -x_se.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cfa/error.hpp"
#include "cfa/nuisance.hpp"
#include "cfa/rng.hpp"
#include "cfa/sfm.hpp"
#include "cfa/strata.hpp"

namespace cfa {

inline constexpr double kZ975 = 1.959963984540054;

struct Estimate {
  double estimate = 0.0;
  double se = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;

  static Estimate normal(double est, double se) { return {est, se, est - kZ975 * se, est + kZ975 * se}; }
  Estimate negated() const { return {-estimate, se, -ci95_hi, -ci95_lo}; }
  bool covers(double v) const { return ci95_lo <= v && v <= ci95_hi; }

  bool operator==(const Estimate&) const = default;
};

enum class Estimator { PluginStrata, PluginModel, Debiased };

inline const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::PluginStrata: return "plugin_strata";
    case Estimator::PluginModel: return "plugin_model";
    case Estimator::Debiased: return "debiased";
  }
  return "?";
}

struct DecompositionReport {
  Estimator estimator = Estimator::Debiased;
  Estimate tv, x_de, x_ie, x_se;
  Estimate direct, indirect, spurious;
  std::optional<double> share_direct, share_indirect, share_spurious;
  std::size_t n0 = 0, n1 = 0;
  std::string se_method = "influence_function";
  bool extreme_weights = false;
  double max_abs_psi = 0.0;

  bool operator==(const DecompositionReport&) const = default;
};

/// Difference in group means with the unpooled two-sample standard error.
inline Estimate tv_empirical(const Dataset& data) {
  const auto yj = data.schema().outcome_index();
  double s[2] = {0, 0}, q[2] = {0, 0};
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.is_missing(i, yj)) throw Error(ErrorCode::MissingData, "outcome missing");
    int g = data.group(i);
    double y = data.value(i, yj);
    s[g] += y;
    q[g] += y * y;
    ++n[g];
  }
  if (n[0] == 0 || n[1] == 0) throw Error(ErrorCode::EmptyGroup, "both X groups must be non-empty");
  double m0 = s[0] / static_cast<double>(n[0]), m1 = s[1] / static_cast<double>(n[1]);
  auto var = [&](int g, double m) {
    return n[g] > 1 ? (q[g] - static_cast<double>(n[g]) * m * m) / static_cast<double>(n[g] - 1) : 0.0;
  };
  double se = std::sqrt(std::max(0.0, var(1, m1)) / static_cast<double>(n[1]) +
                        std::max(0.0, var(0, m0)) / static_cast<double>(n[0]));
  return Estimate::normal(m1 - m0, se);
}

namespace detail {

/// Per-row pseudo-outcomes for the two nested means
///   theta1 = E[Y_{x1,W_x0} | x0] = sum(psi1) / n0
///   theta2 = E[Y_{x1} | x0]      = sum(psi2) / n0
struct PseudoOutcomes {
  Eigen::VectorXd psi1, psi2;
};

inline PseudoOutcomes debiased_pseudo_outcomes(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                               const NuisanceFits& f) {
  const Eigen::Index n = x.size();
  PseudoOutcomes p{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x(i) > 0.5) {
      p.psi1(i) = f.odds0(i) * (y(i) - f.mu1(i));
      p.psi2(i) = (1.0 - f.e1(i)) / f.e1(i) * (y(i) - f.m1(i));
    } else {
      // kept as three terms: correction (mu1 - eta) plus plug-in eta
      p.psi1(i) = (f.mu1(i) - f.eta(i)) + f.eta(i);
      p.psi2(i) = f.m1(i);
    }
  }
  return p;
}

inline double iqr(std::vector<double> v) {
  if (v.size() < 4) return 0.0;
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    double h = p * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return q(0.75) - q(0.25);
}

inline std::optional<double> share(double component, double tv) {
  if (std::abs(tv) < 1e-8) return std::nullopt;
  return std::abs(component) / std::abs(tv);
}

/// Builds a report from point values of theta1/theta2 and influence
/// contributions evaluated with the supplied pseudo-outcomes.
inline DecompositionReport assemble(Estimator estimator, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& y, double theta1, double theta2,
                                    const PseudoOutcomes& inf) {
  const Eigen::Index n = x.size();
  double n1 = x.sum(), n0 = static_cast<double>(n) - n1;
  if (n1 == 0 || n0 == 0) throw Error(ErrorCode::EmptyGroup, "both X groups must be non-empty");
  double y1 = 0, y0 = 0;
  for (Eigen::Index i = 0; i < n; ++i) (x(i) > 0.5 ? y1 : y0) += y(i);
  y1 /= n1;
  y0 /= n0;
  const double p0 = n0 / static_cast<double>(n), p1 = n1 / static_cast<double>(n);

  // Influence-function centering uses the theta implied by the pseudo-outcomes.
  double c1 = 0, c2 = 0;
  for (Eigen::Index i = 0; i < n; ++i) c1 += inf.psi1(i), c2 += inf.psi2(i);
  c1 /= n0;
  c2 /= n0;
  double ss_tv = 0, ss_de = 0, ss_ie = 0, ss_se = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    bool treated = x(i) > 0.5;
    double if_y1 = treated ? (y(i) - y1) / p1 : 0.0;
    double if_y0 = treated ? 0.0 : (y(i) - y0) / p0;
    double if_t1 = (inf.psi1(i) - (treated ? 0.0 : c1)) / p0;
    double if_t2 = (inf.psi2(i) - (treated ? 0.0 : c2)) / p0;
    double a = if_y1 - if_y0, b = if_t1 - if_y0, c = if_t1 - if_t2, d = if_t2 - if_y1;
    ss_tv += a * a;
    ss_de += b * b;
    ss_ie += c * c;
    ss_se += d * d;
  }
  const double nn = static_cast<double>(n);
  DecompositionReport r;
  r.estimator = estimator;
  r.n0 = static_cast<std::size_t>(n0);
  r.n1 = static_cast<std::size_t>(n1);
  r.tv = Estimate::normal(y1 - y0, std::sqrt(ss_tv) / nn);
  r.x_de = Estimate::normal(theta1 - y0, std::sqrt(ss_de) / nn);
  r.x_ie = Estimate::normal(theta1 - theta2, std::sqrt(ss_ie) / nn);
  r.x_se = Estimate::normal(theta2 - y1, std::sqrt(ss_se) / nn);
  r.direct = r.x_de;
  r.indirect = r.x_ie.negated();
  r.spurious = r.x_se.negated();
  r.share_direct = share(r.direct.estimate, r.tv.estimate);
  r.share_indirect = share(r.indirect.estimate, r.tv.estimate);
  r.share_spurious = share(r.spurious.estimate, r.tv.estimate);

  std::vector<double> all(inf.psi1.data(), inf.psi1.data() + n);
  all.insert(all.end(), inf.psi2.data(), inf.psi2.data() + n);
  double maxabs = 0;
  for (double v : all) maxabs = std::max(maxabs, std::abs(v));
  r.max_abs_psi = maxabs;
  double spread = iqr(all);
  r.extreme_weights = spread > 0 && maxabs > 50.0 * spread;
  return r;
}

inline void check_fits(const NuisanceFits& f, std::size_t n) {
  if (f.size() != n) throw Error(ErrorCode::SchemaMismatch, "nuisance fits do not cover every row");
}

}  // namespace detail

/// Debiased (one-step / doubly robust) decomposition from cross-fitted
/// nuisances.
inline DecompositionReport debiased_decomposition(const Dataset& data, const NuisanceFits& fits) {
  DesignMatrices dm = encode(data);
  detail::check_fits(fits, data.n());
  auto psi = detail::debiased_pseudo_outcomes(dm.x, dm.y, fits);
  double n0 = static_cast<double>(data.n()) - dm.x.sum();
  if (n0 == 0 || n0 == static_cast<double>(data.n()))
    throw Error(ErrorCode::EmptyGroup, "both X groups must be non-empty");
  return detail::assemble(Estimator::Debiased, dm.x, dm.y, psi.psi1.sum() / n0, psi.psi2.sum() / n0, psi);
}

/// Plug-in decomposition from fitted nuisances:
///   theta1 = mean over x0 rows of mu1,  theta2 = mean over x0 rows of m1.
/// Standard errors use the debiased influence contributions at the same fits.
inline DecompositionReport plugin_model(const Dataset& data, const NuisanceFits& fits) {
  DesignMatrices dm = encode(data);
  detail::check_fits(fits, data.n());
  double t1 = 0, t2 = 0, n0 = 0;
  for (Eigen::Index i = 0; i < dm.x.size(); ++i) {
    if (dm.x(i) > 0.5) continue;
    t1 += fits.mu1(i);
    t2 += fits.m1(i);
    n0 += 1;
  }
  if (n0 == 0) throw Error(ErrorCode::EmptyGroup, "no x0 rows");
  auto psi = detail::debiased_pseudo_outcomes(dm.x, dm.y, fits);
  auto r = detail::assemble(Estimator::PluginModel, dm.x, dm.y, t1 / n0, t2 / n0, psi);
  r.se_method = "influence_function_at_fits";
  return r;
}

namespace detail {

struct StrataPoint {
  double tv, x_de, x_ie, x_se;
};

/// Identification formulas evaluated with empirical cell frequencies and
/// cell means. Row weights allow bootstrap resampling without copying.
inline StrataPoint strata_point(const StrataIndex& s, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                const std::vector<double>& weight) {
  const std::size_t nz = s.n_z, nw = s.n_w;
  std::vector<double> cnt(2 * nz * nw, 0), sum(2 * nz * nw, 0), cz(2 * nz, 0), sy(2, 0), nx(2, 0);
  auto cell = [&](int g, std::size_t z, std::size_t w) { return (static_cast<std::size_t>(g) * nz + z) * nw + w; };
  for (std::size_t i = 0; i < weight.size(); ++i) {
    double wt = weight[i];
    if (wt == 0) continue;
    int g = x(static_cast<Eigen::Index>(i)) > 0.5 ? 1 : 0;
    double yi = y(static_cast<Eigen::Index>(i));
    cnt[cell(g, s.z_id[i], s.w_id[i])] += wt;
    sum[cell(g, s.z_id[i], s.w_id[i])] += wt * yi;
    cz[static_cast<std::size_t>(g) * nz + s.z_id[i]] += wt;
    sy[static_cast<std::size_t>(g)] += wt * yi;
    nx[static_cast<std::size_t>(g)] += wt;
  }
  if (nx[0] == 0 || nx[1] == 0) throw Error(ErrorCode::EmptyGroup, "both X groups must be non-empty");
  auto empty = [&](int g, std::size_t z, std::size_t w) {
    return Error(ErrorCode::EmptyStratum, "no rows in cell x=" + std::to_string(g) + ", w=" +
                                              s.w_label(w) + ", z=" + s.z_label(z));
  };
  double ey0 = sy[0] / nx[0], ey1 = sy[1] / nx[1];
  double de_sum = 0, ie_sum = 0, se_sum = 0;
  for (std::size_t z = 0; z < nz; ++z) {
    double pz0 = cz[z] / nx[0], pz1 = cz[nz + z] / nx[1];
    if (pz0 == 0 && pz1 == 0) continue;
    if (pz0 > 0 && cz[nz + z] == 0) throw Error(ErrorCode::EmptyStratum, "no x=1 rows in z=" + s.z_label(z));
    for (std::size_t w = 0; w < nw; ++w) {
      double pw0 = cz[z] > 0 ? cnt[cell(0, z, w)] / cz[z] : 0.0;
      double pw1 = cz[nz + z] > 0 ? cnt[cell(1, z, w)] / cz[nz + z] : 0.0;
      if (pw0 == 0 && pw1 == 0) continue;
      if (pz0 > 0 && pw0 > 0 && cnt[cell(1, z, w)] == 0) throw empty(1, z, w);
      double mu1 = cnt[cell(1, z, w)] > 0 ? sum[cell(1, z, w)] / cnt[cell(1, z, w)] : 0.0;
      de_sum += mu1 * pw0 * pz0;
      ie_sum += mu1 * (pw0 - pw1) * pz0;
      se_sum += mu1 * pw1 * (pz0 - pz1);
    }
  }
  // The x_se sum carries -E[Y|x1] through the pz1 term; x_ie and x_se use
  // E[Y | x1, w, z], consistent with the counterfactual definitions.
  return {ey1 - ey0, de_sum - ey0, ie_sum, se_sum};
}

}  // namespace detail

struct PluginStrataOptions {
  int bootstrap = 0;  // resamples; 0 = influence-function standard errors
  std::uint64_t seed = 1;
};

/// Stratified plug-in decomposition over discrete Z and binary W.
inline DecompositionReport plugin_strata(const Dataset& data, const PluginStrataOptions& opt = {}) {
  DesignMatrices dm = encode(data);
  StrataIndex s = build_strata(data);
  std::vector<double> ones(data.n(), 1.0);
  auto pt = detail::strata_point(s, dm.x, dm.y, ones);

  // The saturated-model debiased contributions give the influence function.
  NuisanceFits sat = saturated_fits(data);
  auto psi = detail::debiased_pseudo_outcomes(dm.x, dm.y, sat);
  double n0 = static_cast<double>(data.n()) - dm.x.sum();
  double y0 = 0, y1 = 0;
  for (Eigen::Index i = 0; i < dm.x.size(); ++i) (dm.x(i) > 0.5 ? y1 : y0) += dm.y(i);
  y0 /= n0;
  y1 /= dm.x.sum();
  double theta1 = pt.x_de + y0, theta2 = pt.x_se + y1;
  auto r = detail::assemble(Estimator::PluginStrata, dm.x, dm.y, theta1, theta2, psi);
  // keep the exact strata-sum values
  r.x_ie = Estimate::normal(pt.x_ie, r.x_ie.se);
  r.indirect = r.x_ie.negated();
  r.share_indirect = detail::share(r.indirect.estimate, r.tv.estimate);

  if (opt.bootstrap > 0) {
    std::array<std::vector<double>, 4> draws;
    std::vector<double> wt(data.n());
    for (int b = 0; b < opt.bootstrap; ++b) {
      Rng rng(opt.seed, 0xb007ULL + static_cast<std::uint64_t>(b));
      std::fill(wt.begin(), wt.end(), 0.0);
      for (std::size_t k = 0; k < data.n(); ++k) wt[rng.below(data.n())] += 1.0;
      try {
        auto p = detail::strata_point(s, dm.x, dm.y, wt);
        draws[0].push_back(p.tv);
        draws[1].push_back(p.x_de);
        draws[2].push_back(p.x_ie);
        draws[3].push_back(p.x_se);
      } catch (const Error&) {
        // resample lost a needed cell; skip it
      }
    }
    if (draws[0].size() >= 2) {
      auto sd = [](const std::vector<double>& v) {
        double m = 0;
        for (double d : v) m += d;
        m /= static_cast<double>(v.size());
        double q = 0;
        for (double d : v) q += (d - m) * (d - m);
        return std::sqrt(q / static_cast<double>(v.size() - 1));
      };
      r.tv = Estimate::normal(r.tv.estimate, sd(draws[0]));
      r.x_de = Estimate::normal(r.x_de.estimate, sd(draws[1]));
      r.x_ie = Estimate::normal(r.x_ie.estimate, sd(draws[2]));
      r.x_se = Estimate::normal(r.x_se.estimate, sd(draws[3]));
      r.direct = r.x_de;
      r.indirect = r.x_ie.negated();
      r.spurious = r.x_se.negated();
      r.se_method = "bootstrap_" + std::to_string(draws[0].size());
    }
  }
  return r;
}

}  // namespace cfa
