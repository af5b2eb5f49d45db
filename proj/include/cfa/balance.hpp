#pragma once

// Standardized mean differences between X groups for confounders and
// mediators. Pooled SD is the unweighted mean of the two group variances.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cfa/error.hpp"
#include "cfa/sfm.hpp"

namespace cfa {

inline constexpr double kSmdFlag = 0.10;

namespace detail {

inline double standardized(double diff, double pooled_var) {
  if (pooled_var > 0) return diff / std::sqrt(0.5 * pooled_var);
  // ZeroSpread: no variation in either group
  if (diff == 0) return 0.0;
  return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

inline double smd_continuous(double mean1, double sd1, double mean0, double sd0) {
  if (sd1 < 0 || sd0 < 0) throw Error(ErrorCode::InvalidData, "standard deviations must be non-negative");
  return detail::standardized(mean1 - mean0, sd1 * sd1 + sd0 * sd0);
}

inline double smd_binary_level(double p1, double p0) {
  if (p1 < 0 || p1 > 1 || p0 < 0 || p0 > 1) throw Error(ErrorCode::InvalidData, "proportions must be in [0,1]");
  return detail::standardized(p1 - p0, p1 * (1 - p1) + p0 * (1 - p0));
}

struct BalanceRow {
  std::string variable;
  std::string level;  // empty for continuous variables
  Role role = Role::Confounder;
  bool proportion = false;  // summaries are shares rather than mean (SD)
  double value0 = 0, value1 = 0;  // mean or share per group
  double sd0 = 0, sd1 = 0;        // continuous only
  double smd = 0;
  bool flagged = false;
  bool zero_spread = false;
};

struct BalanceTable {
  std::size_t n0 = 0, n1 = 0;
  std::vector<BalanceRow> rows;
};

/// One row per continuous variable, one per binary variable (share of 1s),
/// one per level of each categorical.
inline BalanceTable balance_table(const Dataset& data) {
  const auto& schema = data.schema();
  BalanceTable t;
  for (std::size_t i = 0; i < data.n(); ++i) (data.group(i) ? t.n1 : t.n0)++;
  if (t.n0 == 0 || t.n1 == 0) throw Error(ErrorCode::EmptyGroup, "both X groups must be non-empty");
  const double n[2] = {static_cast<double>(t.n0), static_cast<double>(t.n1)};
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& spec = schema.variable(j);
    if (spec.role != Role::Confounder && spec.role != Role::Mediator) continue;
    if (spec.kind == Kind::Continuous) {
      double s[2] = {0, 0}, q[2] = {0, 0};
      for (std::size_t i = 0; i < data.n(); ++i) {
        if (data.is_missing(i, j)) throw Error(ErrorCode::MissingData, "missing value in '" + spec.name + "'");
        int g = data.group(i);
        double v = data.value(i, j);
        s[g] += v;
        q[g] += v * v;
      }
      BalanceRow r;
      r.variable = spec.name;
      r.role = spec.role;
      r.value0 = s[0] / n[0];
      r.value1 = s[1] / n[1];
      auto sd = [&](int g, double m) {
        return n[g] > 1 ? std::sqrt(std::max(0.0, (q[g] - n[g] * m * m) / (n[g] - 1))) : 0.0;
      };
      r.sd0 = sd(0, r.value0);
      r.sd1 = sd(1, r.value1);
      r.smd = smd_continuous(r.value1, r.sd1, r.value0, r.sd0);
      r.zero_spread = std::isinf(r.smd);
      r.flagged = std::abs(r.smd) > kSmdFlag;
      t.rows.push_back(r);
      continue;
    }
    const int card = spec.cardinality();
    std::vector<double> c0(static_cast<std::size_t>(card), 0), c1(static_cast<std::size_t>(card), 0);
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (data.is_missing(i, j)) throw Error(ErrorCode::MissingData, "missing value in '" + spec.name + "'");
      auto code = static_cast<std::size_t>(data.value(i, j));
      (data.group(i) ? c1 : c0)[code] += 1;
    }
    for (int l = spec.kind == Kind::Binary ? 1 : 0; l < card; ++l) {
      BalanceRow r;
      r.variable = spec.name;
      r.level = spec.label(l);
      r.role = spec.role;
      r.proportion = true;
      r.value0 = c0[static_cast<std::size_t>(l)] / n[0];
      r.value1 = c1[static_cast<std::size_t>(l)] / n[1];
      r.smd = smd_binary_level(r.value1, r.value0);
      r.zero_spread = std::isinf(r.smd);
      r.flagged = std::abs(r.smd) > kSmdFlag;
      t.rows.push_back(r);
    }
  }
  return t;
}

}  // namespace cfa
