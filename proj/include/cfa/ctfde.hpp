#pragma once

// Counterfactual direct effect ctf-DE(z) = E[Y_{x1,W_x0} | z] - E[Y_{x0,W_x0} | z]
// by one-step debiased pseudo-outcomes, overall and per subgroup cell.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cfa/decomp.hpp"
#include "cfa/error.hpp"
#include "cfa/forest.hpp"
#include "cfa/nuisance.hpp"
#include "cfa/sfm.hpp"

namespace cfa {

struct CtfDePseudo {
  Eigen::VectorXd psi;
  double max_abs = 0.0;
  bool extreme_weights = false;
  std::size_t clipped_propensity = 0, clipped_odds = 0;
};

/// psi = phi1 - phi0 with
///   phi1 = 1{x1} (odds0 / e0)(y - mu1) + 1{x0} (mu1 - eta) / e0 + eta
///   phi0 = 1{x0} (y - m0) / e0 + m0,  e0 = 1 - e1.
/// odds0 / e0 equals P(w|x0,z) / (e1(z) P(w|x1,z)), the mediator-shift weight.
inline CtfDePseudo ctf_de_pseudo_outcomes(const Dataset& data, const NuisanceFits& fits) {
  DesignMatrices dm = encode(data);
  if (fits.size() != data.n()) throw Error(ErrorCode::SchemaMismatch, "nuisance fits do not cover every row");
  const auto n = dm.x.size();
  CtfDePseudo out;
  out.psi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e0 = 1.0 - fits.e1(i), y = dm.y(i);
    double phi1, phi0;
    if (dm.x(i) > 0.5) {
      phi1 = fits.odds0(i) / e0 * (y - fits.mu1(i)) + fits.eta(i);
      phi0 = fits.m0(i);
    } else {
      phi1 = (fits.mu1(i) - fits.eta(i)) / e0 + fits.eta(i);
      phi0 = (y - fits.m0(i)) / e0 + fits.m0(i);
    }
    out.psi(i) = phi1 - phi0;
  }
  std::vector<double> v(out.psi.data(), out.psi.data() + n);
  for (double a : v) out.max_abs = std::max(out.max_abs, std::abs(a));
  double spread = detail::iqr(v);
  out.extreme_weights = spread > 0 && out.max_abs > 50.0 * spread;
  out.clipped_propensity = fits.clipped_propensity;
  out.clipped_odds = fits.clipped_odds;
  return out;
}

namespace detail {

inline Estimate mean_estimate(const std::vector<double>& v) {
  double m = 0;
  for (double a : v) m += a;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return Estimate::normal(m, std::numeric_limits<double>::quiet_NaN());
  double q = 0;
  for (double a : v) q += (a - m) * (a - m);
  return Estimate::normal(m, std::sqrt(q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())));
}

}  // namespace detail

inline Estimate ctf_de_overall(const Eigen::VectorXd& psi) {
  if (psi.size() == 0) throw Error(ErrorCode::EmptyGroup, "no pseudo-outcomes");
  return detail::mean_estimate(std::vector<double>(psi.data(), psi.data() + psi.size()));
}

struct CtfDeCell {
  std::string level1, level2;
  std::optional<Estimate> estimate;  // empty for n = 0
  std::size_t n = 0;
  bool small = true;
};

struct CtfDeHeatmap {
  std::string dim1, dim2;
  std::vector<CtfDeCell> cells;  // dim1-major, declared level order
};

struct CtfDeReport {
  Estimate overall;
  std::vector<CtfDeHeatmap> heatmaps;
  double max_abs_psi = 0.0;
  bool extreme_weights = false;
  std::size_t clipped_propensity = 0, clipped_odds = 0;
};

inline CtfDeHeatmap ctf_de_by_cell(const Eigen::VectorXd& psi, const Dataset& data, const std::string& dim1,
                                   const std::string& dim2) {
  const auto a = detail::grouping_dimension(data.schema(), dim1);
  const auto b = detail::grouping_dimension(data.schema(), dim2);
  const auto& sa = data.schema().variable(a);
  const auto& sb = data.schema().variable(b);
  const auto nb = static_cast<std::size_t>(sb.cardinality());
  std::vector<std::vector<double>> by(static_cast<std::size_t>(sa.cardinality()) * nb);
  for (std::size_t i = 0; i < data.n(); ++i)
    by[static_cast<std::size_t>(data.value(i, a)) * nb + static_cast<std::size_t>(data.value(i, b))].push_back(
        psi(static_cast<Eigen::Index>(i)));
  CtfDeHeatmap h{dim1, dim2, {}};
  for (int l1 = 0; l1 < sa.cardinality(); ++l1)
    for (int l2 = 0; l2 < sb.cardinality(); ++l2) {
      const auto& v = by[static_cast<std::size_t>(l1) * nb + static_cast<std::size_t>(l2)];
      CtfDeCell c{sa.label(l1), sb.label(l2), std::nullopt, v.size(), v.size() < kSmallCell};
      if (!v.empty()) c.estimate = detail::mean_estimate(v);
      h.cells.push_back(std::move(c));
    }
  return h;
}

inline CtfDeReport ctf_de_report(const Dataset& data, const NuisanceFits& fits,
                                 const std::vector<std::pair<std::string, std::string>>& heatmap_dims = {}) {
  auto ps = ctf_de_pseudo_outcomes(data, fits);
  CtfDeReport r;
  r.overall = ctf_de_overall(ps.psi);
  for (const auto& [d1, d2] : heatmap_dims) r.heatmaps.push_back(ctf_de_by_cell(ps.psi, data, d1, d2));
  r.max_abs_psi = ps.max_abs;
  r.extreme_weights = ps.extreme_weights;
  r.clipped_propensity = ps.clipped_propensity;
  r.clipped_odds = ps.clipped_odds;
  return r;
}

}  // namespace cfa
