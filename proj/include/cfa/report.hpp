#pragma once

// JSON and tidy-CSV renderings of every report type.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "cfa/balance.hpp"
#include "cfa/ctfde.hpp"
#include "cfa/decomp.hpp"
#include "cfa/forest.hpp"
#include "cfa/io.hpp"
#include "cfa/sensitivity.hpp"

namespace cfa {

/// Non-finite values become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Estimate& e) {
  return {{"estimate", number(e.estimate)},
          {"se", number(e.se)},
          {"ci95_lo", number(e.ci95_lo)},
          {"ci95_hi", number(e.ci95_hi)}};
}

inline json to_json(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

inline json to_json(const DecompositionReport& r) {
  return {{"estimator", estimator_name(r.estimator)},
          {"n0", r.n0},
          {"n1", r.n1},
          {"se_method", r.se_method},
          {"cookbook",
           {{"convention", "tv = x_de - x_ie - x_se"},
            {"tv", to_json(r.tv)},
            {"x_de", to_json(r.x_de)},
            {"x_ie", to_json(r.x_ie)},
            {"x_se", to_json(r.x_se)}}},
          {"display",
           {{"convention", "tv = direct + indirect + spurious"},
            {"tv", to_json(r.tv)},
            {"direct", to_json(r.direct)},
            {"indirect", to_json(r.indirect)},
            {"spurious", to_json(r.spurious)},
            {"shares",
             {{"direct", to_json(r.share_direct)},
              {"indirect", to_json(r.share_indirect)},
              {"spurious", to_json(r.share_spurious)}}}}},
          {"diagnostics", {{"extreme_weights", r.extreme_weights}, {"max_abs_psi", number(r.max_abs_psi)}}}};
}

/// Aligned text table in the additive display convention.
inline std::string format_decomposition(const DecompositionReport& r) {
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s (n0=%zu, n1=%zu)\n", estimator_name(r.estimator), r.n0, r.n1);
  o << buf;
  std::snprintf(buf, sizeof buf, "  %-10s %10s %9s %22s %8s\n", "component", "estimate", "se", "95% CI", "share");
  o << buf;
  auto row = [&](const char* name, const Estimate& e, const std::optional<double>& share) {
    std::string s = share ? std::to_string(*share * 100.0).substr(0, 5) + "%" : "-";
    std::snprintf(buf, sizeof buf, "  %-10s %10.4f %9.4f  [%9.4f, %9.4f] %8s\n", name, e.estimate, e.se, e.ci95_lo,
                  e.ci95_hi, s.c_str());
    o << buf;
  };
  row("TV", r.tv, std::nullopt);
  row("direct", r.direct, r.share_direct);
  row("indirect", r.indirect, r.share_indirect);
  row("spurious", r.spurious, r.share_spurious);
  std::snprintf(buf, sizeof buf, "  TV %.4f = %.4f (direct) + %.4f (indirect) + %.4f (spurious)\n", r.tv.estimate,
                r.direct.estimate, r.indirect.estimate, r.spurious.estimate);
  o << buf;
  if (r.extreme_weights) o << "  warning: extreme pseudo-outcome weights (max |psi| > 50 x IQR)\n";
  return o.str();
}

inline json to_json(const BalanceTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json j = {{"variable", r.variable},
              {"role", role_name(r.role)},
              {"summary", r.proportion ? "proportion" : "mean_sd"},
              {"group0", r.proportion ? json{{"proportion", r.value0}}
                                      : json{{"mean", r.value0}, {"sd", number(r.sd0)}}},
              {"group1", r.proportion ? json{{"proportion", r.value1}}
                                      : json{{"mean", r.value1}, {"sd", number(r.sd1)}}},
              {"smd", number(r.smd)},
              {"flagged", r.flagged},
              {"zero_spread", r.zero_spread}};
    j["level"] = r.level.empty() ? json(nullptr) : json(r.level);
    rows.push_back(std::move(j));
  }
  return {{"n0", t.n0}, {"n1", t.n1}, {"flag_threshold", kSmdFlag}, {"rows", rows}};
}

inline void write_balance_csv(std::ostream& o, const BalanceTable& t, const std::string& hash) {
  o << "variable,level,pct_or_mean0,pct_or_mean1,smd,flagged,config_hash\n";
  for (const auto& r : t.rows) {
    double s = r.proportion ? 100.0 : 1.0;
    o << detail::csv_field(r.variable) << ',' << detail::csv_field(r.level) << ',' << format_double(s * r.value0)
      << ',' << format_double(s * r.value1) << ',' << format_double(r.smd) << ',' << (r.flagged ? "true" : "false")
      << ',' << hash << '\n';
  }
}

inline json to_json(const SubgroupTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"level", r.level},
                    {"mean_cate", number(r.mean_cate)},
                    {"sd_unit_cate", number(r.sd)},
                    {"se_mean", number(r.se_mean)},
                    {"n", r.n},
                    {"small", r.small}});
  return {{"dimension", t.dimension}, {"rows", rows}};
}

inline json to_json(const CateHeatmap& h) {
  json cells = json::array();
  for (const auto& c : h.cells)
    cells.push_back({{"level1", c.level1},
                     {"level2", c.level2},
                     {"mean_cate", number(c.mean_cate)},
                     {"sd_unit_cate", number(c.sd)},
                     {"n", c.n},
                     {"small", c.small}});
  return {{"dim1", h.dim1}, {"dim2", h.dim2}, {"cells", cells}};
}

inline void write_heatmap_csv(std::ostream& o, const CateHeatmap& h, const std::string& hash) {
  o << "dim1,dim2,mean_cate,n,small_flag,config_hash\n";
  for (const auto& c : h.cells)
    o << detail::csv_field(c.level1) << ',' << detail::csv_field(c.level2) << ',' << format_double(c.mean_cate) << ','
      << c.n << ',' << (c.small ? "true" : "false") << ',' << hash << '\n';
}

inline json to_json(const CateReport& r) {
  json imp = json::object();
  for (std::size_t k = 0; k < r.feature_names.size(); ++k) imp[r.feature_names[k]] = r.importance.weights[k];
  json tau = json::array(), se = json::array();
  for (const auto& p : r.per_unit) {
    tau.push_back(number(p.tau));
    se.push_back(number(p.se));
  }
  json subs = json::array(), maps = json::array();
  for (const auto& s : r.subgroups) subs.push_back(to_json(s));
  for (const auto& h : r.heatmaps) maps.push_back(to_json(h));
  return {{"ate", to_json(r.ate)},
          {"importance", imp},
          {"importance_no_splits", r.importance.no_splits},
          {"subgroups", subs},
          {"heatmaps", maps},
          {"per_unit", {{"tau_hat", tau}, {"se", se}}}};
}

inline json to_json(const CtfDeHeatmap& h) {
  json cells = json::array();
  for (const auto& c : h.cells) {
    json j = {{"level1", c.level1}, {"level2", c.level2}, {"n", c.n}, {"small", c.small}};
    if (c.estimate) j.update(to_json(*c.estimate));
    else j["estimate"] = nullptr;
    cells.push_back(std::move(j));
  }
  return {{"dim1", h.dim1}, {"dim2", h.dim2}, {"cells", cells}};
}

inline void write_heatmap_csv(std::ostream& o, const CtfDeHeatmap& h, const std::string& hash) {
  o << "dim1,dim2,estimate,se,n,small_flag,config_hash\n";
  for (const auto& c : h.cells) {
    o << detail::csv_field(c.level1) << ',' << detail::csv_field(c.level2) << ',';
    o << (c.estimate ? format_double(c.estimate->estimate) : "NA") << ','
      << (c.estimate ? format_double(c.estimate->se) : "NA");
    o << ',' << c.n << ',' << (c.small ? "true" : "false") << ',' << hash << '\n';
  }
}

inline json to_json(const CtfDeReport& r) {
  json maps = json::array();
  for (const auto& h : r.heatmaps) maps.push_back(to_json(h));
  return {{"overall", to_json(r.overall)},
          {"heatmaps", maps},
          {"diagnostics",
           {{"max_abs_psi", number(r.max_abs_psi)},
            {"extreme_weights", r.extreme_weights},
            {"clipped_propensity", r.clipped_propensity},
            {"clipped_odds", r.clipped_odds}}}};
}

inline json to_json(const SensitivityReport& r) {
  json b = json::array();
  for (const auto& x : r.benchmarks)
    b.push_back({{"variable", x.variable}, {"r2_dz_x", number(x.r2_dz_x)}, {"r2_yz_dx", number(x.r2_yz_dx)}});
  return {{"model", "ols: outcome ~ protected + confounders + mediators"},
          {"estimate", number(r.estimate)},
          {"se", number(r.se)},
          {"treatment_tstat", number(r.treatment_tstat)},
          {"dof", r.dof},
          {"q", r.q},
          {"alpha", r.alpha},
          {"rv_q", number(r.rv_q1)},
          {"rv_alpha", number(r.rv_alpha)},
          {"benchmarks", b}};
}

inline json to_json(const TrimmingCurve& c) {
  json e = json::array();
  for (const auto& t : c.entries)
    e.push_back({{"percentile", t.percentile},
                 {"propensity_range", {number(t.lower), number(t.upper)}},
                 {"n_retained", t.n_retained},
                 {"report", to_json(t.report)}});
  return e;
}

inline void write_trimming_csv(std::ostream& o, const TrimmingCurve& c, const std::string& hash) {
  o << "threshold,component,estimate,ci_lo,ci_hi,n_retained,config_hash\n";
  for (const auto& t : c.entries) {
    auto line = [&](const char* name, const Estimate& e) {
      o << t.percentile << ',' << name << ',' << format_double(e.estimate) << ',' << format_double(e.ci95_lo) << ','
        << format_double(e.ci95_hi) << ',' << t.n_retained << ',' << hash << '\n';
    };
    line("tv", t.report.tv);
    line("x_de", t.report.x_de);
    line("x_ie", t.report.x_ie);
    line("x_se", t.report.x_se);
  }
}

}  // namespace cfa
