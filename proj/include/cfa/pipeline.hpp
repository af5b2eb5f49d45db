#pragma once

// File-level orchestration behind the command-line tool.

#include <Eigen/Core>
#include <boost/version.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cfa/balance.hpp"
#include "cfa/ctfde.hpp"
#include "cfa/decomp.hpp"
#include "cfa/error.hpp"
#include "cfa/forest.hpp"
#include "cfa/io.hpp"
#include "cfa/nuisance.hpp"
#include "cfa/report.hpp"
#include "cfa/sensitivity.hpp"
#include "cfa/synth.hpp"

#ifndef CFA_VERSION
#define CFA_VERSION "0.1.0"
#endif

namespace cfa {

namespace fs = std::filesystem;

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct PipelineConfig {
  json raw;  // effective configuration (after command-line overrides)
  fs::path base_dir = ".";
  std::optional<fs::path> schema_path;
  std::optional<fs::path> data_path;
  std::optional<ScmSpec> scm;
  std::size_t n = 0;
  int folds = 10;
  std::uint64_t seed = 0;
  NuisanceConfig nuisance;
  CausalForestConfig forest;
  std::vector<std::pair<std::string, std::string>> heatmaps;
  std::vector<int> trimming = {1, 2, 3, 4, 5};
  double q = 1.0, alpha = 0.05;
  int bootstrap = 0;
  bool impute = false;
  int threads = 1;
  fs::path out = "cfa_out";

  /// Hash of the effective configuration; thread count and output directory
  /// never influence results and are excluded.
  std::string hash() const {
    json h = raw;
    h.erase("threads");
    h.erase("out");
    return hex64(fnv1a(h.dump()));
  }
};

namespace detail {

inline LearnerConfig learner_from_json(const json& j, LearnerConfig base) {
  if (j.contains("family")) {
    auto f = j.at("family").get<std::string>();
    if (f == "trees" || f == "gbt") base.family = LearnerFamily::GradientBoostedTrees;
    else if (f == "linear" || f == "logistic") base.family = LearnerFamily::LogisticLinear;
    else throw Error(ErrorCode::BadConfig, "unknown learner family '" + f + "'");
  }
  base.n_trees = j.value("n_trees", base.n_trees);
  base.max_depth = j.value("max_depth", base.max_depth);
  base.learning_rate = j.value("learning_rate", base.learning_rate);
  base.min_leaf = j.value("min_leaf", base.min_leaf);
  base.l2_penalty = j.value("l2_penalty", base.l2_penalty);
  base.max_iter = j.value("max_iter", base.max_iter);
  base.tol = j.value("tol", base.tol);
  base.check();
  return base;
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

}  // namespace detail

inline PipelineConfig parse_config(const json& j, const fs::path& base_dir = ".") {
  PipelineConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  try {
    if (!j.contains("seed")) throw Error(ErrorCode::BadConfig, "config: 'seed' is required");
    c.seed = j.at("seed").get<std::uint64_t>();
    bool has_data = j.contains("data"), has_scm = j.contains("scm");
    if (has_data == has_scm) throw Error(ErrorCode::BadConfig, "config: set exactly one of 'data' and 'scm'");
    if (has_data) {
      c.data_path = detail::resolve(base_dir, j.at("data").get<std::string>());
      if (!j.contains("schema")) throw Error(ErrorCode::BadConfig, "config: 'data' requires 'schema'");
    }
    if (j.contains("schema")) c.schema_path = detail::resolve(base_dir, j.at("schema").get<std::string>());
    if (has_scm) {
      const auto& s = j.at("scm");
      if (s.is_object()) {
        c.scm = scm_from_json(s);
      } else {
        auto name = s.get<std::string>();
        if (name == "null-1" || name == "desk-1") c.scm = reference_spec(name);
        else c.scm = scm_from_json(read_json_file(detail::resolve(base_dir, name).string()));
      }
      c.scm->seed = c.seed;
      c.n = j.value("n", std::size_t{0});
      if (c.n == 0) throw Error(ErrorCode::BadConfig, "config: 'scm' requires a positive 'n'");
    }
    c.folds = j.value("folds", 10);
    if (c.folds < 2) throw Error(ErrorCode::BadFoldCount, "config: folds must be >= 2");
    if (j.contains("learners")) {
      const auto& l = j.at("learners");
      auto& nc = c.nuisance;
      if (l.contains("outcome")) nc.outcome = detail::learner_from_json(l.at("outcome"), nc.outcome);
      if (l.contains("propensity")) nc.propensity = detail::learner_from_json(l.at("propensity"), nc.propensity);
      if (l.contains("mediator_odds"))
        nc.mediator_odds = detail::learner_from_json(l.at("mediator_odds"), nc.mediator_odds);
      if (l.contains("nested")) nc.nested = detail::learner_from_json(l.at("nested"), nc.nested);
      if (l.contains("group_outcome"))
        nc.group_outcome = detail::learner_from_json(l.at("group_outcome"), nc.group_outcome);
      nc.clip = l.value("clip", nc.clip);
      if (!(nc.clip >= 0 && nc.clip < 0.5)) throw Error(ErrorCode::BadConfig, "config: clip must be in [0, 0.5)");
    }
    auto& f = c.forest;
    f.seed = c.seed;
    f.clip = c.nuisance.clip;
    if (j.contains("forest")) {
      const auto& fj = j.at("forest");
      f.n_trees = fj.value("n_trees", f.n_trees);
      f.subsample_fraction = fj.value("subsample_fraction", f.subsample_fraction);
      f.honesty_fraction = fj.value("honesty_fraction", f.honesty_fraction);
      f.max_depth = fj.value("max_depth", f.max_depth);
      int ml = fj.value("min_leaf", -1);
      if (ml > 0) f.min_leaf_treated = f.min_leaf_control = ml;
      f.min_leaf_treated = fj.value("min_leaf_treated", f.min_leaf_treated);
      f.min_leaf_control = fj.value("min_leaf_control", f.min_leaf_control);
      f.alpha = fj.value("alpha", f.alpha);
      f.mtry = fj.value("mtry", f.mtry);
      f.ci_group_size = fj.value("ci_group_size", f.ci_group_size);
      if (fj.contains("outcome")) f.outcome = detail::learner_from_json(fj.at("outcome"), f.outcome);
      if (fj.contains("propensity")) f.propensity = detail::learner_from_json(fj.at("propensity"), f.propensity);
    }
    f.check();
    for (const auto& h : j.value("heatmaps", json::array())) {
      auto pair = h.get<std::vector<std::string>>();
      if (pair.size() != 2) throw Error(ErrorCode::BadConfig, "config: each heatmap is a [dim1, dim2] pair");
      c.heatmaps.emplace_back(pair[0], pair[1]);
    }
    if (j.contains("trimming")) c.trimming = j.at("trimming").get<std::vector<int>>();
    for (int p : c.trimming)
      if (p < 1 || p >= 50) throw Error(ErrorCode::BadConfig, "config: trimming percentiles must be in [1, 50)");
    if (j.contains("sensitivity")) {
      c.q = j.at("sensitivity").value("q", c.q);
      c.alpha = j.at("sensitivity").value("alpha", c.alpha);
      if (!(c.q > 0) || !(c.alpha > 0 && c.alpha < 1))
        throw Error(ErrorCode::BadConfig, "config: need q > 0 and alpha in (0,1)");
    }
    c.bootstrap = j.value("bootstrap", 0);
    if (c.bootstrap < 0) throw Error(ErrorCode::BadConfig, "config: bootstrap must be >= 0");
    c.impute = j.value("impute", std::string()) == "simple";
    c.threads = j.value("threads", 1);
    if (c.threads < 1) throw Error(ErrorCode::BadConfig, "config: threads must be >= 1");
    if (j.contains("out")) c.out = detail::resolve(base_dir, j.at("out").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("config: ") + e.what());
  }
  c.nuisance.threads = c.threads;
  c.forest.threads = c.threads;
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  return parse_config(read_json_file(path.string()), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

/// Loads (or samples) the dataset named by the configuration, validates it
/// and applies the explicit imputation opt-in.
inline Dataset load_dataset(const PipelineConfig& c) {
  Dataset d;
  if (c.scm) {
    d = sample(*c.scm, c.n, c.threads);
    if (c.schema_path) {
      auto declared = read_schema(c.schema_path->string());
      if (schema_to_json(declared) != schema_to_json(d.schema()))
        throw Error(ErrorCode::SchemaMismatch, "schema file does not match the simulated schema");
    }
  } else {
    d = read_csv(c.data_path->string(), read_schema(c.schema_path->string()));
  }
  auto v = validate(d);
  if (!v.empty()) {
    const auto& f = v.front();
    throw Error(ErrorCode::InvalidData, std::to_string(v.size()) + " violation(s); first: variable '" + f.variable +
                                            "' row " + std::to_string(f.row) + ": " + f.rule);
  }
  if (!d.complete()) {
    if (!c.impute)
      throw Error(ErrorCode::MissingData, "dataset has missing cells; rerun with --impute simple to fill them");
    d = simple_impute(d);
  }
  return d;
}

class ArtifactWriter {
 public:
  ArtifactWriter(const PipelineConfig& c, std::string subcommand) : c_(c), sub_(std::move(subcommand)) {
    fs::create_directories(c_.out);
  }

  void json_file(const std::string& name, json body) {
    body["config_hash"] = c_.hash();
    text_file(name, body.dump(2) + "\n");
  }

  void text_file(const std::string& name, const std::string& content) {
    std::ofstream o(c_.out / name, std::ios::binary);
    if (!o) throw Error(ErrorCode::ConstructionFailure, "cannot write " + (c_.out / name).string());
    o << content;
    files_.push_back({{"file", name}, {"fnv1a", hex64(fnv1a(content))}});
  }

  void manifest() {
    json m = {{"tool", "cfa"},
              {"subcommand", sub_},
              {"config_hash", c_.hash()},
              {"seed", c_.seed},
              {"versions",
               {{"cfa", CFA_VERSION},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
                              "." + std::to_string(BOOST_VERSION % 100)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
              {"config", [&] {
                 json h = c_.raw;
                 h.erase("threads");
                 h.erase("out");
                 return h;
               }()},
              {"artifacts", files_}};
    std::ofstream o(c_.out / "manifest.json", std::ios::binary);
    o << m.dump(2) << "\n";
  }

 private:
  const PipelineConfig& c_;
  std::string sub_;
  json files_ = json::array();
};

namespace detail {

inline std::string slug(const std::string& s) {
  std::string o;
  for (char ch : s) o += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return o;
}

inline json run_decompose(const PipelineConfig& c, const Dataset& d, const NuisanceFits& fits, std::ostream& out) {
  json est = json::object();
  auto deb = debiased_decomposition(d, fits);
  est["debiased"] = to_json(deb);
  est["plugin_model"] = to_json(plugin_model(d, fits));
  try {
    est["plugin_strata"] = to_json(plugin_strata(d, {c.bootstrap, c.seed}));
  } catch (const Error& e) {
    est["plugin_strata"] = {{"unavailable", std::string(error_name(e.code()))}, {"reason", e.what()}};
  }
  out << format_decomposition(deb);
  return {{"folds", c.folds},
          {"clip", fits.clip},
          {"clipped_propensity", fits.clipped_propensity},
          {"clipped_odds", fits.clipped_odds},
          {"estimators", est}};
}

/// Without configured pairs: the first discrete confounder crossed with each of
/// the next two.
inline std::vector<std::pair<std::string, std::string>> default_heatmaps(const SfmSchema& s) {
  std::vector<std::string> discrete;
  for (auto j : s.indices(Role::Confounder))
    if (s.variable(j).kind != Kind::Continuous) discrete.push_back(s.variable(j).name);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t k = 1; k < discrete.size() && k <= 2; ++k) out.emplace_back(discrete[0], discrete[k]);
  return out;
}

}  // namespace detail

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"simulate", "balance",     "decompose", "cate",
                                             "ctfde",    "sensitivity", "report"};
  return s;
}

/// Runs one pipeline step and writes its artifacts. Errors propagate as
/// cfa::Error; map them with exit_code().
inline void run_subcommand(const std::string& name, const PipelineConfig& c, std::ostream& out = std::cout) {
  if (std::find(subcommands().begin(), subcommands().end(), name) == subcommands().end())
    throw Error(ErrorCode::BadConfig, "unknown subcommand '" + name + "'");
  ArtifactWriter w(c, name);
  const std::string h = c.hash();

  if (name == "simulate") {
    if (!c.scm) throw Error(ErrorCode::BadConfig, "simulate needs 'scm' in the configuration");
    Dataset d = sample(*c.scm, c.n, c.threads);
    std::ostringstream csv;
    write_csv(csv, d);
    w.text_file("data.csv", csv.str());
    w.text_file("schema.json", schema_to_json(d.schema()).dump(2) + "\n");
    auto method = c.scm->enumerable() ? OracleMethod::Exact : OracleMethod::MonteCarlo;
    auto gt = oracle_decomposition(*c.scm, method, 1000000, c.threads);
    json g = ground_truth_to_json(gt);
    g["scm"] = scm_to_json(*c.scm);
    w.json_file("ground_truth.json", g);
    out << "simulated " << d.n() << " rows from " << c.scm->name << " into " << c.out.string() << "\n";
    w.manifest();
    return;
  }

  Dataset d = load_dataset(c);
  const bool all = name == "report";
  const auto heatmaps = c.raw.contains("heatmaps") ? c.heatmaps : detail::default_heatmaps(d.schema());
  std::optional<NuisanceFits> fits;
  auto get_fits = [&]() -> const NuisanceFits& {
    if (!fits) fits = cross_fit(d, assign_folds(d.n(), c.folds, c.seed), c.nuisance);
    return *fits;
  };

  if (all || name == "balance") {
    auto t = balance_table(d);
    w.json_file("balance.json", to_json(t));
    std::ostringstream csv;
    write_balance_csv(csv, t, h);
    w.text_file("balance.csv", csv.str());
  }
  if (all || name == "decompose") w.json_file("decomposition.json", detail::run_decompose(c, d, get_fits(), out));
  if (all || name == "cate") {
    auto model = fit_causal_forest(d, assign_folds(d.n(), c.folds, c.seed), c.forest);
    auto r = cate_report(model, d, heatmaps);
    w.json_file("cate.json", to_json(r));
    for (const auto& hm : r.heatmaps) {
      std::ostringstream csv;
      write_heatmap_csv(csv, hm, h);
      w.text_file("heatmap_cate_" + detail::slug(hm.dim1) + "_" + detail::slug(hm.dim2) + ".csv", csv.str());
    }
  }
  if (all || name == "ctfde") {
    auto r = ctf_de_report(d, get_fits(), heatmaps);
    w.json_file("ctf_de.json", to_json(r));
    for (const auto& hm : r.heatmaps) {
      std::ostringstream csv;
      write_heatmap_csv(csv, hm, h);
      w.text_file("heatmap_ctfde_" + detail::slug(hm.dim1) + "_" + detail::slug(hm.dim2) + ".csv", csv.str());
    }
  }
  if (all || name == "sensitivity") {
    auto s = robustness_value(d, c.q, c.alpha);
    TrimmingOptions opt;
    opt.percentiles = {0};
    opt.percentiles.insert(opt.percentiles.end(), c.trimming.begin(), c.trimming.end());
    opt.folds = c.folds;
    opt.seed = c.seed;
    opt.nuisance = c.nuisance;
    opt.threads = c.threads;
    auto curve = trimming_curve(d, get_fits(), opt);
    json body = to_json(s);
    body["trimming"] = to_json(curve);
    w.json_file("sensitivity.json", body);
    std::ostringstream csv;
    write_trimming_csv(csv, curve, h);
    w.text_file("trimming.csv", csv.str());
  }
  w.manifest();
}

inline int exit_code(const Error& e) { return is_validation_error(e.code()) ? 2 : 3; }

}  // namespace cfa
