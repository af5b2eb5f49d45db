#pragma once

// Honest, orthogonalized causal forest for tau(z) = E[Y | do(x1), z] - E[Y | do(x0), z].
//
// Outcome and treatment are residualized with cross-fitted m(z) and e(z).
// Trees split on residual-on-residual effect heterogeneity and estimate leaf
// effects on a disjoint honest half. Pointwise variance comes from
// half-sample tree groups ("little bags").

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cfa/decomp.hpp"
#include "cfa/error.hpp"
#include "cfa/gbt.hpp"
#include "cfa/nuisance.hpp"
#include "cfa/parallel.hpp"
#include "cfa/rng.hpp"
#include "cfa/sfm.hpp"

namespace cfa {

struct CausalForestConfig {
  int n_trees = 500;
  double subsample_fraction = 0.5;
  double honesty_fraction = 0.5;
  int max_depth = 20;
  int min_leaf_treated = 25;
  int min_leaf_control = 25;
  int mtry = 0;  // 0: ceil(sqrt(p))
  double alpha = 0.05;  // each child keeps at least this share of its parent
  int ci_group_size = 2;
  int max_bins = 64;
  std::uint64_t seed = 1;
  int threads = 1;
  LearnerConfig outcome = LearnerConfig::trees();
  LearnerConfig propensity = LearnerConfig::linear();
  double clip = 0.01;

  void check() const {
    auto fail = [](const char* m) { throw Error(ErrorCode::BadConfig, std::string("forest: ") + m); };
    if (n_trees < 1) fail("n_trees must be >= 1");
    if (!(subsample_fraction > 0 && subsample_fraction <= 1)) fail("subsample_fraction must be in (0,1]");
    if (!(honesty_fraction > 0 && honesty_fraction < 1)) fail("honesty_fraction must be in (0,1)");
    if (max_depth < 1) fail("max_depth must be >= 1");
    if (min_leaf_treated < 1 || min_leaf_control < 1) fail("min_leaf_* must be >= 1");
    if (mtry < 0) fail("mtry must be >= 0");
    if (!(alpha >= 0 && alpha < 0.5)) fail("alpha must be in [0, 0.5)");
    if (ci_group_size < 1) fail("ci_group_size must be >= 1");
    if (ci_group_size > 1 && subsample_fraction > 0.5)
      fail("subsample_fraction must be <= 0.5 when trees are grouped for variance estimates");
    if (max_bins < 2 || max_bins > 65535) fail("max_bins out of range");
    if (!(clip >= 0 && clip < 0.5)) fail("clip must be in [0, 0.5)");
    outcome.check();
    propensity.check();
  }
};

struct ForestNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int bin = -1;  // training-bin form of the threshold
  int left = -1, right = -1;
  int parent = -1;
  int depth = 1;  // root = 1
  // honest statistics
  double sxy = 0.0, sxx = 0.0;
  int n_treated = 0, n_control = 0;
  int estimate_from = -1;  // node whose honest estimate this node reports
};

struct CausalTree {
  std::vector<ForestNode> nodes;
  bool usable = false;  // root has an honest estimate

  template <class Row>
  int leaf_of(const Row& row) const {
    int k = 0;
    while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
      const auto& nd = nodes[static_cast<std::size_t>(k)];
      k = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return k;
  }

  template <class Row>
  double predict(const Row& row) const {
    const auto& nd = nodes[static_cast<std::size_t>(nodes[static_cast<std::size_t>(leaf_of(row))].estimate_from)];
    return nd.sxy / nd.sxx;
  }

  std::size_t n_splits() const {
    std::size_t s = 0;
    for (const auto& nd : nodes) s += nd.feature >= 0;
    return s;
  }
};

struct CatePrediction {
  double tau = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
};

struct CateModel {
  CausalForestConfig config;
  std::vector<std::string> feature_names;
  std::vector<CausalTree> trees;
  int group_size = 1;
  std::vector<std::vector<std::uint8_t>> group_sample;  // per group: row in its half-sample
  // training data
  Eigen::MatrixXd z;
  Eigen::VectorXd x, y, m_hat, e_hat;
  std::vector<CatePrediction> oob;  // out-of-bag predictions for training rows

  std::size_t n_groups() const { return group_sample.size(); }
};

namespace detail {

struct TreeData {
  const BinnedFeatures* bins;
  const Eigen::VectorXd* x;      // 0/1 group
  const Eigen::VectorXd* xres;   // x - e(z)
  const Eigen::VectorXd* yres;   // y - m(z)
};

struct SplitStats {
  double sxy = 0, sxx = 0;
  int nt = 0, nc = 0;
  void add(double xr, double yr, bool treated) {
    sxy += xr * yr;
    sxx += xr * xr;
    treated ? ++nt : ++nc;
  }
};

/// Grows one tree on `structure` rows, then fills honest statistics from
/// `estimation` rows. Structure never depends on the estimation rows.
inline CausalTree grow_tree(const TreeData& d, std::vector<std::size_t> structure,
                            const std::vector<std::size_t>& estimation, const CausalForestConfig& cfg,
                            int mtry, Rng& rng) {
  const auto& bins = *d.bins;
  const std::size_t p = bins.cuts.size();
  CausalTree tree;
  tree.nodes.emplace_back();
  struct Work {
    int node;
    std::vector<std::size_t> rows;
  };
  std::vector<Work> stack;
  stack.push_back({0, std::move(structure)});
  std::vector<std::size_t> features(p);
  std::vector<SplitStats> hist;
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    const int depth = tree.nodes[static_cast<std::size_t>(w.node)].depth;
    SplitStats all;
    for (auto i : w.rows) all.add((*d.xres)(static_cast<Eigen::Index>(i)), (*d.yres)(static_cast<Eigen::Index>(i)),
                                  (*d.x)(static_cast<Eigen::Index>(i)) > 0.5);
    if (depth >= cfg.max_depth || all.nt < 2 * cfg.min_leaf_treated || all.nc < 2 * cfg.min_leaf_control)
      continue;

    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t k = 0; k < std::min<std::size_t>(static_cast<std::size_t>(mtry), p); ++k)
      std::swap(features[k], features[k + rng.below(p - k)]);

    int best_f = -1, best_b = -1;
    double best = 0.0;
    const double nn = static_cast<double>(w.rows.size());
    const double min_child = cfg.alpha * nn;
    for (std::size_t fk = 0; fk < std::min<std::size_t>(static_cast<std::size_t>(mtry), p); ++fk) {
      const std::size_t f = features[fk];
      const auto& cuts = bins.cuts[f];
      if (cuts.empty()) continue;
      hist.assign(cuts.size() + 1, {});
      const auto& b = bins.bins[f];
      for (auto i : w.rows)
        hist[b[i]].add((*d.xres)(static_cast<Eigen::Index>(i)), (*d.yres)(static_cast<Eigen::Index>(i)),
                       (*d.x)(static_cast<Eigen::Index>(i)) > 0.5);
      SplitStats left;
      for (std::size_t k = 0; k < cuts.size(); ++k) {
        left.sxy += hist[k].sxy;
        left.sxx += hist[k].sxx;
        left.nt += hist[k].nt;
        left.nc += hist[k].nc;
        int rt = all.nt - left.nt, rc = all.nc - left.nc;
        if (left.nt < cfg.min_leaf_treated || left.nc < cfg.min_leaf_control) continue;
        if (rt < cfg.min_leaf_treated || rc < cfg.min_leaf_control) break;
        double rsxx = all.sxx - left.sxx;
        if (!(left.sxx > 0) || !(rsxx > 0)) continue;
        double nl = static_cast<double>(left.nt + left.nc);
        if (nl < min_child) continue;
        if (nn - nl < min_child) break;
        double diff = left.sxy / left.sxx - (all.sxy - left.sxy) / rsxx;
        double crit = nl * (nn - nl) * diff * diff;
        if (crit > best) {
          best = crit;
          best_f = static_cast<int>(f);
          best_b = static_cast<int>(k);
        }
      }
    }
    if (best_f < 0) continue;

    std::vector<std::size_t> l, r;
    const auto& b = bins.bins[static_cast<std::size_t>(best_f)];
    for (auto i : w.rows) (b[i] <= best_b ? l : r).push_back(i);
    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& nd = tree.nodes[static_cast<std::size_t>(w.node)];
    nd.feature = best_f;
    nd.threshold = bins.cuts[static_cast<std::size_t>(best_f)][static_cast<std::size_t>(best_b)];
    nd.bin = best_b;
    nd.left = li;
    nd.right = li + 1;
    for (int c : {li, li + 1}) {
      tree.nodes[static_cast<std::size_t>(c)].parent = w.node;
      tree.nodes[static_cast<std::size_t>(c)].depth = depth + 1;
    }
    stack.push_back({li + 1, std::move(r)});
    stack.push_back({li, std::move(l)});
  }

  // Honest statistics: every estimation row contributes to each node on its path.
  for (auto i : estimation) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double xr = (*d.xres)(ii), yr = (*d.yres)(ii);
    const bool treated = (*d.x)(ii) > 0.5;
    int k = 0;
    for (;;) {
      auto& nd = tree.nodes[static_cast<std::size_t>(k)];
      nd.sxy += xr * yr;
      nd.sxx += xr * xr;
      treated ? ++nd.n_treated : ++nd.n_control;
      if (nd.feature < 0) break;
      k = bins.bins[static_cast<std::size_t>(nd.feature)][i] <= nd.bin ? nd.left : nd.right;
    }
  }
  // Children are stored after parents, so one forward pass resolves fallbacks.
  auto ok = [&](const ForestNode& nd) {
    return nd.n_treated >= cfg.min_leaf_treated && nd.n_control >= cfg.min_leaf_control && nd.sxx > 0;
  };
  auto& root = tree.nodes.front();
  tree.usable = root.sxx > 0;
  root.estimate_from = 0;
  for (std::size_t k = 1; k < tree.nodes.size(); ++k) {
    auto& nd = tree.nodes[k];
    nd.estimate_from =
        ok(nd) ? static_cast<int>(k) : tree.nodes[static_cast<std::size_t>(nd.parent)].estimate_from;
  }
  return tree;
}

/// Debiased half-sampling variance (normal prior on the true variance).
inline double little_bags_variance(double var_between, double group_noise, double n_groups) {
  double initial = std::max(var_between, group_noise) * std::sqrt(2.0 / n_groups);
  if (!(initial > 0)) return 0.0;
  double ratio = (var_between - group_noise) / initial;
  double pdf = std::exp(-0.5 * ratio * ratio) / std::sqrt(2.0 * std::numbers::pi);
  double cdf = 0.5 * std::erfc(-ratio / std::numbers::sqrt2);
  return var_between - group_noise + initial * pdf / cdf;
}

/// Combines per-tree predictions (NaN = tree not used) into an estimate and
/// little-bags standard error.
inline CatePrediction combine(const std::vector<double>& per_tree, int group_size) {
  double sum = 0;
  std::size_t cnt = 0;
  for (double v : per_tree)
    if (!std::isnan(v)) sum += v, ++cnt;
  CatePrediction out;
  if (cnt == 0) {
    out.tau = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.tau = sum / static_cast<double>(cnt);
  if (group_size < 2) return out;
  const std::size_t g_count = per_tree.size() / static_cast<std::size_t>(group_size);
  double between = 0, noise = 0, good = 0;
  std::vector<double> means;
  for (std::size_t g = 0; g < g_count; ++g) {
    double m = 0;
    bool full = true;
    for (int t = 0; t < group_size; ++t) {
      double v = per_tree[g * static_cast<std::size_t>(group_size) + static_cast<std::size_t>(t)];
      if (std::isnan(v)) {
        full = false;
        break;
      }
      m += v;
    }
    if (!full) continue;
    m /= group_size;
    between += (m - out.tau) * (m - out.tau);
    for (int t = 0; t < group_size; ++t) {
      double v = per_tree[g * static_cast<std::size_t>(group_size) + static_cast<std::size_t>(t)];
      noise += (v - m) * (v - m);
    }
    good += 1;
  }
  if (good < 2) return out;
  between /= good;
  noise /= good * (group_size - 1) * group_size;
  out.se = std::sqrt(std::max(0.0, little_bags_variance(between, noise, good)));
  return out;
}

}  // namespace detail

/// Fits the forest on encoded Z features. `folds` drives the cross-fitted
/// residualization.
inline CateModel fit_causal_forest(const Dataset& data, const FoldAssignment& folds,
                                   const CausalForestConfig& cfg = {}) {
  cfg.check();
  if (folds.fold_of.size() != data.n())
    throw Error(ErrorCode::BadFoldCount, "fold assignment size differs from dataset");
  DesignMatrices dm = encode(data);
  if (dm.z.values.cols() == 0)
    throw Error(ErrorCode::InsufficientVariation, "causal forest needs at least one confounder");
  const double n1 = dm.x.sum(), n0 = static_cast<double>(data.n()) - n1;
  if (n1 < 10.0 * cfg.min_leaf_treated || n0 < 10.0 * cfg.min_leaf_control)
    throw Error(ErrorCode::InsufficientVariation, "each X group needs at least 10*min_leaf rows");

  CateModel model;
  model.config = cfg;
  model.feature_names = dm.z.names;
  model.z = dm.z.values;
  model.x = dm.x;
  model.y = dm.y;
  const auto n = static_cast<Eigen::Index>(data.n());
  model.m_hat.resize(n);
  model.e_hat.resize(n);

  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> fold_pred(static_cast<std::size_t>(folds.k));
  parallel_for(static_cast<std::size_t>(folds.k), cfg.threads, [&](std::size_t f) {
    auto train = folds.rows_not_in(static_cast<int>(f));
    auto test = folds.rows_in(static_cast<int>(f));
    Eigen::VectorXd xt = detail::take(dm.x, train);
    if (xt.sum() == 0 || xt.sum() == static_cast<double>(xt.size()))
      throw Error(ErrorCode::FoldCollapse, "training complement lacks an X group");
    auto zt = detail::take_rows(dm.z.values, train), zs = detail::take_rows(dm.z.values, test);
    fold_pred[f].first = fit_regressor(zt, detail::take(dm.y, train), cfg.outcome).predict(zs);
    fold_pred[f].second = fit_classifier(zt, xt, cfg.propensity).predict(zs);
  });
  for (int f = 0; f < folds.k; ++f) {
    auto rows = folds.rows_in(f);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto i = static_cast<Eigen::Index>(rows[k]);
      model.m_hat(i) = fold_pred[static_cast<std::size_t>(f)].first(static_cast<Eigen::Index>(k));
      model.e_hat(i) = std::clamp(fold_pred[static_cast<std::size_t>(f)].second(static_cast<Eigen::Index>(k)),
                                  cfg.clip, 1.0 - cfg.clip);
    }
  }
  Eigen::VectorXd xres = dm.x - model.e_hat, yres = dm.y - model.m_hat;
  if (!(xres.squaredNorm() > 0))
    throw Error(ErrorCode::InsufficientVariation, "treatment residuals are all zero");

  detail::BinnedFeatures bins(dm.z.values, cfg.max_bins);
  detail::TreeData td{&bins, &dm.x, &xres, &yres};
  const auto p = static_cast<int>(dm.z.values.cols());
  const int mtry = cfg.mtry > 0 ? std::min(cfg.mtry, p) : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
  const int gs = std::min(cfg.ci_group_size, cfg.n_trees);
  const std::size_t n_groups = (static_cast<std::size_t>(cfg.n_trees) + static_cast<std::size_t>(gs) - 1) /
                               static_cast<std::size_t>(gs);
  model.group_size = gs;
  const auto nn = static_cast<std::size_t>(n);
  const std::size_t half = gs > 1 ? nn / 2 : nn;
  const std::size_t sample_size = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.subsample_fraction * static_cast<double>(nn))), 2, half);

  // Half-samples per group (the full data when groups are disabled).
  std::vector<std::vector<std::size_t>> group_rows(n_groups);
  model.group_sample.assign(n_groups, std::vector<std::uint8_t>(nn, 0));
  parallel_for(n_groups, cfg.threads, [&](std::size_t g) {
    std::vector<std::size_t> perm(nn);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (gs > 1) {
      Rng rng(cfg.seed, 0x6b0000000ULL + g);
      for (std::size_t k = 0; k < half; ++k) std::swap(perm[k], perm[k + rng.below(nn - k)]);
      perm.resize(half);
    }
    group_rows[g] = std::move(perm);
  });

  model.trees.resize(static_cast<std::size_t>(cfg.n_trees));
  std::vector<std::vector<std::size_t>> tree_sample(static_cast<std::size_t>(cfg.n_trees));
  parallel_for(static_cast<std::size_t>(cfg.n_trees), cfg.threads, [&](std::size_t t) {
    Rng rng(cfg.seed, 0x7100000000ULL + t);
    std::vector<std::size_t> rows = group_rows[t / static_cast<std::size_t>(gs)];
    const std::size_t m = rows.size();
    for (std::size_t k = 0; k < sample_size; ++k) std::swap(rows[k], rows[k + rng.below(m - k)]);
    rows.resize(sample_size);
    auto n_struct = static_cast<std::size_t>(std::llround(cfg.honesty_fraction * static_cast<double>(sample_size)));
    n_struct = std::clamp<std::size_t>(n_struct, 1, sample_size - 1);
    std::vector<std::size_t> structure(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_struct));
    std::vector<std::size_t> estimation(rows.begin() + static_cast<std::ptrdiff_t>(n_struct), rows.end());
    std::sort(structure.begin(), structure.end());
    std::sort(estimation.begin(), estimation.end());
    model.trees[t] = detail::grow_tree(td, std::move(structure), estimation, cfg, mtry, rng);
    tree_sample[t] = std::move(rows);
  });
  // Without grouping a row is out-of-bag for a tree only when that tree never sampled it.
  if (gs > 1) {
    for (std::size_t g = 0; g < n_groups; ++g)
      for (auto i : group_rows[g]) model.group_sample[g][i] = 1;
  } else {
    for (std::size_t t = 0; t < tree_sample.size(); ++t)
      for (auto i : tree_sample[t]) model.group_sample[t][i] = 1;
  }
  if (std::none_of(model.trees.begin(), model.trees.end(), [](const CausalTree& t) { return t.usable; }))
    throw Error(ErrorCode::InsufficientVariation, "no tree has treatment variation in its honest sample");

  model.oob.resize(nn);
  parallel_for(nn, cfg.threads, [&](std::size_t i) {
    std::vector<double> per_tree(model.trees.size(), std::numeric_limits<double>::quiet_NaN());
    auto row = model.z.row(static_cast<Eigen::Index>(i));
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      if (!model.trees[t].usable || model.group_sample[t / static_cast<std::size_t>(gs)][i]) continue;
      per_tree[t] = model.trees[t].predict(row);
    }
    model.oob[i] = detail::combine(per_tree, gs);
  });
  return model;
}

/// Forest predictions for new confounder rows (encoded like the training Z).
inline std::vector<CatePrediction> predict_cate(const CateModel& model, const Eigen::MatrixXd& z) {
  if (z.cols() != static_cast<Eigen::Index>(model.feature_names.size()))
    throw Error(ErrorCode::SchemaMismatch, "predict_cate: feature count differs from training");
  std::vector<CatePrediction> out(static_cast<std::size_t>(z.rows()));
  parallel_for(out.size(), model.config.threads, [&](std::size_t i) {
    std::vector<double> per_tree(model.trees.size(), std::numeric_limits<double>::quiet_NaN());
    auto row = z.row(static_cast<Eigen::Index>(i));
    for (std::size_t t = 0; t < model.trees.size(); ++t)
      if (model.trees[t].usable) per_tree[t] = model.trees[t].predict(row);
    out[i] = detail::combine(per_tree, model.group_size);
  });
  return out;
}

inline std::vector<CatePrediction> predict_cate(const CateModel& model, const Dataset& data) {
  DesignMatrices dm = encode(data);
  if (dm.z.names != model.feature_names)
    throw Error(ErrorCode::SchemaMismatch, "predict_cate: confounder encoding differs from training");
  return predict_cate(model, dm.z.values);
}

/// Doubly robust average effect from the out-of-bag predictions.
inline Estimate forest_ate(const CateModel& model) {
  const auto n = model.x.size();
  Eigen::VectorXd gamma(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double tau = model.oob[static_cast<std::size_t>(i)].tau;
    double e = model.e_hat(i), xr = model.x(i) - e, yr = model.y(i) - model.m_hat(i);
    gamma(i) = tau + xr / (e * (1.0 - e)) * (yr - xr * tau);
  }
  double mean = gamma.mean();
  double var = (gamma.array() - mean).square().sum() / static_cast<double>(n - 1);
  return Estimate::normal(mean, std::sqrt(var / static_cast<double>(n)));
}

struct Importance {
  std::vector<double> weights;
  bool no_splits = false;
};

/// Depth-discounted split frequency over depths 1..4 (root = 1): at each depth
/// the share of splits made on each feature, weighted by d^-2.
inline Importance variable_importance(const CateModel& model) {
  constexpr int kDepths = 4;
  Importance imp;
  const std::size_t p = model.feature_names.size();
  imp.weights.assign(p, 0.0);
  std::vector<std::vector<double>> count(kDepths, std::vector<double>(p, 0.0));
  for (const auto& t : model.trees)
    for (const auto& nd : t.nodes)
      if (nd.feature >= 0 && nd.depth <= kDepths)
        count[static_cast<std::size_t>(nd.depth - 1)][static_cast<std::size_t>(nd.feature)] += 1;
  double total = 0;
  for (int d = 0; d < kDepths; ++d) {
    const auto& c = count[static_cast<std::size_t>(d)];
    const double splits = std::accumulate(c.begin(), c.end(), 0.0);
    if (splits == 0) continue;
    const double w = 1.0 / ((d + 1.0) * (d + 1.0));
    for (std::size_t j = 0; j < p; ++j) imp.weights[j] += w * c[j] / splits;
    total += w;
  }
  if (total == 0) {
    imp.no_splits = true;
    std::fill(imp.weights.begin(), imp.weights.end(), 1.0 / static_cast<double>(p));
    return imp;
  }
  for (auto& w : imp.weights) w /= total;
  return imp;
}

// ---------------------------------------------------------------------------
// Subgroup summaries

inline constexpr std::size_t kSmallCell = 30;

struct SubgroupRow {
  std::string level;
  double mean_cate = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();       // spread of per-unit estimates
  double se_mean = std::numeric_limits<double>::quiet_NaN();  // sd / sqrt(n)
  std::size_t n = 0;
  bool small = true;
};

struct SubgroupTable {
  std::string dimension;
  std::vector<SubgroupRow> rows;
};

struct HeatmapCell {
  std::string level1, level2;
  double mean_cate = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  bool small = true;
};

struct CateHeatmap {
  std::string dim1, dim2;
  std::vector<HeatmapCell> cells;  // dim1-major, declared level order
};

namespace detail {

/// Schema index of a discrete confounder usable as a grouping dimension.
inline std::size_t grouping_dimension(const SfmSchema& schema, const std::string& name) {
  auto idx = schema.find(name);
  if (!idx || schema.variable(*idx).role != Role::Confounder || !schema.variable(*idx).is_discrete())
    throw Error(ErrorCode::UnknownDimension, "'" + name + "' is not a discrete confounder");
  return *idx;
}

inline void summarize(const std::vector<double>& v, double& mean, double& sd) {
  if (v.empty()) return;
  mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return;
  double q = 0;
  for (double a : v) q += (a - mean) * (a - mean);
  sd = std::sqrt(q / static_cast<double>(v.size() - 1));
}

}  // namespace detail

inline SubgroupTable subgroup_cate_table(const std::vector<double>& tau, const Dataset& data,
                                         const std::string& dimension) {
  const auto j = detail::grouping_dimension(data.schema(), dimension);
  const auto& spec = data.schema().variable(j);
  std::vector<std::vector<double>> by(static_cast<std::size_t>(spec.cardinality()));
  for (std::size_t i = 0; i < data.n(); ++i) by[static_cast<std::size_t>(data.value(i, j))].push_back(tau[i]);
  SubgroupTable t{dimension, {}};
  for (int l = 0; l < spec.cardinality(); ++l) {
    SubgroupRow r;
    r.level = spec.label(l);
    const auto& v = by[static_cast<std::size_t>(l)];
    r.n = v.size();
    r.small = r.n < kSmallCell;
    detail::summarize(v, r.mean_cate, r.sd);
    if (r.n >= 2) r.se_mean = r.sd / std::sqrt(static_cast<double>(r.n));
    t.rows.push_back(r);
  }
  return t;
}

inline CateHeatmap cate_heatmap(const std::vector<double>& tau, const Dataset& data, const std::string& dim1,
                                const std::string& dim2) {
  const auto a = detail::grouping_dimension(data.schema(), dim1);
  const auto b = detail::grouping_dimension(data.schema(), dim2);
  const auto& sa = data.schema().variable(a);
  const auto& sb = data.schema().variable(b);
  const auto nb = static_cast<std::size_t>(sb.cardinality());
  std::vector<std::vector<double>> by(static_cast<std::size_t>(sa.cardinality()) * nb);
  for (std::size_t i = 0; i < data.n(); ++i)
    by[static_cast<std::size_t>(data.value(i, a)) * nb + static_cast<std::size_t>(data.value(i, b))].push_back(tau[i]);
  CateHeatmap h{dim1, dim2, {}};
  for (int l1 = 0; l1 < sa.cardinality(); ++l1)
    for (int l2 = 0; l2 < sb.cardinality(); ++l2) {
      HeatmapCell c;
      c.level1 = sa.label(l1);
      c.level2 = sb.label(l2);
      const auto& v = by[static_cast<std::size_t>(l1) * nb + static_cast<std::size_t>(l2)];
      c.n = v.size();
      c.small = c.n < kSmallCell;
      detail::summarize(v, c.mean_cate, c.sd);
      h.cells.push_back(c);
    }
  return h;
}

inline std::vector<double> oob_tau(const CateModel& model) {
  std::vector<double> t(model.oob.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = model.oob[i].tau;
  return t;
}

struct CateReport {
  Estimate ate;
  std::vector<CatePrediction> per_unit;
  std::vector<std::string> feature_names;
  Importance importance;
  std::vector<SubgroupTable> subgroups;
  std::vector<CateHeatmap> heatmaps;
};

/// Assembles the report from out-of-bag estimates on the training data.
inline CateReport cate_report(const CateModel& model, const Dataset& data,
                              const std::vector<std::pair<std::string, std::string>>& heatmap_dims = {}) {
  CateReport r;
  r.ate = forest_ate(model);
  r.per_unit = model.oob;
  r.feature_names = model.feature_names;
  r.importance = variable_importance(model);
  auto tau = oob_tau(model);
  for (auto j : data.schema().indices(Role::Confounder))
    if (data.schema().variable(j).is_discrete())
      r.subgroups.push_back(subgroup_cate_table(tau, data, data.schema().variable(j).name));
  for (const auto& [d1, d2] : heatmap_dims) r.heatmaps.push_back(cate_heatmap(tau, data, d1, d2));
  return r;
}

}  // namespace cfa
