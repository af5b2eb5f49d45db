#pragma once

// Gradient-boosted regression trees on histogram-binned features.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cfa/error.hpp"
#include "cfa/logistic.hpp"

namespace cfa {

enum class GbtLoss { Squared, Logistic };

struct GbtConfig {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 20;
  double l2 = 0.0;  // leaf-weight penalty
  int max_bins = 64;

  void check() const {
    if (n_trees < 1 || max_depth < 1 || !(learning_rate > 0 && learning_rate <= 1) ||
        min_leaf < 1 || l2 < 0 || max_bins < 2 || max_bins > 65535)
      throw Error(ErrorCode::BadConfig,
                  "gbt: need n_trees>=1, max_depth>=1, learning_rate in (0,1], min_leaf>=1, l2>=0");
  }
};

struct GbtNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct GbtTree {
  std::vector<GbtNode> nodes;

  template <class Row>
  double predict(const Row& row) const {
    int k = 0;
    while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
      const auto& nd = nodes[static_cast<std::size_t>(k)];
      k = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(k)].value;
  }
};

class GbtModel {
 public:
  static constexpr double kProbFloor = 1e-6;

  GbtModel() = default;
  GbtModel(GbtLoss loss, double base, std::vector<GbtTree> trees, Eigen::Index n_features)
      : loss_(loss), base_(base), trees_(std::move(trees)), n_features_(n_features) {}

  GbtLoss loss() const { return loss_; }
  const std::vector<GbtTree>& trees() const { return trees_; }
  double base_score() const { return base_; }

  Eigen::VectorXd predict_margin(const Eigen::MatrixXd& features) const {
    if (features.cols() != n_features_)
      throw Error(ErrorCode::SchemaMismatch, "gbt: feature count differs from training");
    Eigen::VectorXd out(features.rows());
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      auto row = features.row(i);
      double f = base_;
      for (const auto& t : trees_) f += t.predict(row);
      out(i) = f;
    }
    return out;
  }

  /// Regression values, or probabilities clamped to (1e-6, 1-1e-6).
  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const {
    Eigen::VectorXd m = predict_margin(features);
    if (loss_ == GbtLoss::Logistic)
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m(i) = std::clamp(sigmoid(m(i)), kProbFloor, 1.0 - kProbFloor);
    return m;
  }

 private:
  GbtLoss loss_ = GbtLoss::Squared;
  double base_ = 0.0;
  std::vector<GbtTree> trees_;
  Eigen::Index n_features_ = 0;
};

namespace detail {

/// Per-feature cut points; bin(x) = number of cuts strictly below x, so
/// x <= cuts[b] iff bin(x) <= b.
struct BinnedFeatures {
  std::vector<std::vector<double>> cuts;
  std::vector<std::vector<std::uint16_t>> bins;  // [feature][row]

  BinnedFeatures(const Eigen::MatrixXd& x, int max_bins) {
    const auto n = static_cast<std::size_t>(x.rows());
    cuts.resize(static_cast<std::size_t>(x.cols()));
    bins.resize(static_cast<std::size_t>(x.cols()));
    std::vector<double> sorted(n);
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      for (std::size_t i = 0; i < n; ++i) sorted[i] = x(static_cast<Eigen::Index>(i), f);
      std::sort(sorted.begin(), sorted.end());
      std::vector<double> uniq;
      for (double v : sorted)
        if (uniq.empty() || v != uniq.back()) uniq.push_back(v);
      auto& c = cuts[static_cast<std::size_t>(f)];
      if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
        for (std::size_t k = 0; k + 1 < uniq.size(); ++k) c.push_back(0.5 * (uniq[k] + uniq[k + 1]));
      } else {
        for (int b = 1; b < max_bins; ++b) {
          std::size_t pos = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(max_bins);
          double v = sorted[std::min(pos, n - 1)];
          // cut just above v so ties stay together
          auto up = std::upper_bound(uniq.begin(), uniq.end(), v);
          if (up == uniq.end()) continue;
          double cut = 0.5 * (v + *up);
          if (c.empty() || cut > c.back()) c.push_back(cut);
        }
      }
      auto& b = bins[static_cast<std::size_t>(f)];
      b.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        b[i] = static_cast<std::uint16_t>(
            std::lower_bound(c.begin(), c.end(), x(static_cast<Eigen::Index>(i), f)) - c.begin());
    }
  }
};

struct HistBin {
  double g = 0, h = 0;
  std::size_t n = 0;
};

}  // namespace detail

/// Stagewise additive trees on negative gradients. Deterministic.
inline GbtModel fit_gbt(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                        GbtLoss loss, const GbtConfig& cfg = {}) {
  cfg.check();
  const auto n = static_cast<std::size_t>(features.rows());
  if (n < 2 * static_cast<std::size_t>(cfg.min_leaf))
    throw Error(ErrorCode::BadConfig, "gbt: need at least 2*min_leaf rows");
  const auto p = static_cast<std::size_t>(features.cols());

  double base = targets.mean();
  if (loss == GbtLoss::Logistic) {
    double m = std::clamp(base, GbtModel::kProbFloor, 1.0 - GbtModel::kProbFloor);
    base = std::log(m / (1.0 - m));
  }

  detail::BinnedFeatures binned(features, cfg.max_bins);
  std::vector<double> margin(n, base), grad(n), hess(n);
  std::vector<GbtTree> trees;
  trees.reserve(static_cast<std::size_t>(cfg.n_trees));

  struct Work {
    int node;
    std::vector<std::size_t> rows;
    int depth;
  };
  std::vector<detail::HistBin> hist;

  for (int t = 0; t < cfg.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (loss == GbtLoss::Squared) {
        grad[i] = margin[i] - targets(static_cast<Eigen::Index>(i));
        hess[i] = 1.0;
      } else {
        double pr = sigmoid(margin[i]);
        grad[i] = pr - targets(static_cast<Eigen::Index>(i));
        hess[i] = std::max(pr * (1.0 - pr), 1e-16);
      }
    }
    GbtTree tree;
    tree.nodes.emplace_back();
    std::vector<Work> stack;
    {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      stack.push_back({0, std::move(all), 0});
    }
    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();
      double G = 0, H = 0;
      for (std::size_t i : w.rows) G += grad[i], H += hess[i];
      const double parent = G * G / (H + cfg.l2);
      int best_f = -1, best_b = -1;
      double best_gain = 1e-12 * std::max(parent, 1e-300);
      if (w.depth < cfg.max_depth && w.rows.size() >= 2 * static_cast<std::size_t>(cfg.min_leaf)) {
        for (std::size_t f = 0; f < p; ++f) {
          const auto& cuts = binned.cuts[f];
          if (cuts.empty()) continue;
          hist.assign(cuts.size() + 1, {});
          const auto& b = binned.bins[f];
          for (std::size_t i : w.rows) {
            auto& hb = hist[b[i]];
            hb.g += grad[i];
            hb.h += hess[i];
            ++hb.n;
          }
          double gl = 0, hl = 0;
          std::size_t nl = 0;
          for (std::size_t k = 0; k < cuts.size(); ++k) {
            gl += hist[k].g;
            hl += hist[k].h;
            nl += hist[k].n;
            std::size_t nr = w.rows.size() - nl;
            if (nl < static_cast<std::size_t>(cfg.min_leaf)) continue;
            if (nr < static_cast<std::size_t>(cfg.min_leaf)) break;
            double gr = G - gl, hr = H - hl;
            double gain = gl * gl / (hl + cfg.l2) + gr * gr / (hr + cfg.l2) - parent;
            if (gain > best_gain) {
              best_gain = gain;
              best_f = static_cast<int>(f);
              best_b = static_cast<int>(k);
            }
          }
        }
      }
      if (best_f < 0) {
        double value = -cfg.learning_rate * G / (H + cfg.l2);
        tree.nodes[static_cast<std::size_t>(w.node)].value = value;
        for (std::size_t i : w.rows) margin[i] += value;
        continue;
      }
      std::vector<std::size_t> left, right;
      const auto& b = binned.bins[static_cast<std::size_t>(best_f)];
      for (std::size_t i : w.rows) (b[i] <= best_b ? left : right).push_back(i);
      int li = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& nd = tree.nodes[static_cast<std::size_t>(w.node)];
      nd.feature = best_f;
      nd.threshold = binned.cuts[static_cast<std::size_t>(best_f)][static_cast<std::size_t>(best_b)];
      nd.left = li;
      nd.right = li + 1;
      stack.push_back({li + 1, std::move(right), w.depth + 1});
      stack.push_back({li, std::move(left), w.depth + 1});
    }
    trees.push_back(std::move(tree));
  }
  return GbtModel(loss, base, std::move(trees), features.cols());
}

}  // namespace cfa
