#pragma once

// Gradient-boosted regression trees with a softmax multiclass objective.
//
// Each boosting round fits one depth-limited tree per class on the softmax gradients and
// hessians of the current scores. Splits are chosen greedily by the regularized loss
// reduction
//
//   gain = 1/2 [ GL^2/(HL+lambda) + GR^2/(HR+lambda) - (GL+GR)^2/(HL+HR+lambda) ] - gamma
//
// over candidate thresholds taken from per-feature quantile histograms (or every midpoint
// between distinct values in exact mode). Gains of executed splits accumulate per feature
// as the importance measure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gamc/error.hpp"
#include "gamc/io.hpp"
#include "gamc/linalg.hpp"
#include "gamc/rng.hpp"

namespace gamc {

enum class SplitMode { hist, exact };

struct TrainParams {
  double learning_rate = 0.3;
  int max_depth = 6;
  int n_estimators = 100;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  double min_child_weight = 1.0;
  double gamma = 0.0;
  double reg_alpha = 0.0;
  double reg_lambda = 1.0;
  std::uint64_t rng_seed = 0;
  SplitMode split_mode = SplitMode::hist;
  int max_bins = 256;

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(what);
    };
    need(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
    need(max_depth >= 1, "max_depth must be >= 1");
    need(n_estimators >= 0, "n_estimators must be >= 0");
    need(subsample > 0.0 && subsample <= 1.0, "subsample must lie in (0, 1]");
    need(colsample_bytree > 0.0 && colsample_bytree <= 1.0, "colsample_bytree must lie in (0, 1]");
    need(min_child_weight >= 0.0, "min_child_weight must be >= 0");
    need(gamma >= 0.0, "gamma must be >= 0");
    need(reg_alpha >= 0.0, "reg_alpha must be >= 0");
    need(reg_lambda >= 0.0, "reg_lambda must be >= 0");
    need(max_bins >= 2 && max_bins <= 65536, "max_bins must lie in [2, 65536]");
  }
};

// Channel-quality gate defaults.
inline TrainParams cqi_params() {
  TrainParams p;
  p.learning_rate = 0.1;
  p.max_depth = 2;
  p.n_estimators = 200;
  p.colsample_bytree = 0.8;
  p.subsample = 0.8;
  p.min_child_weight = 1.0;
  p.gamma = 0.1;
  p.reg_alpha = 0.1;
  p.reg_lambda = 0.1;
  return p;
}

// Per-band expert defaults. reg_lambda is not fixed by the expert table; 1 is the usual default.
inline TrainParams expert_params() {
  TrainParams p;
  p.learning_rate = 0.1;
  p.max_depth = 2;
  p.n_estimators = 200;
  p.subsample = 0.8;
  p.colsample_bytree = 0.8;
  p.min_child_weight = 3.0;
  p.gamma = 0.1;
  p.reg_alpha = 0.0;
  p.reg_lambda = 1.0;
  p.split_mode = SplitMode::hist;
  return p;
}

inline double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
  const double g = gl + gr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (hl + hr + lambda)) - gamma;
}

// True when `gain` beats `best` by more than rounding noise; near-ties keep the earlier candidate.
inline bool improves_on(double gain, double best) {
  if (best == -std::numeric_limits<double>::infinity()) return true;
  return gain > best + 1e-12 * std::max(1.0, std::abs(best));
}

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf value before shrinkage
  double gain = 0.0;    // split gain for internal nodes
  double hessian = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].weight;
  }

  int depth(int node = 0) const {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth(n.left), depth(n.right));
  }

  std::size_t internal_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
  }
  std::size_t leaf_count() const { return nodes.size() - internal_count(); }
};

struct BoostedEnsemble {
  int n_classes = 0;
  int n_features = 0;
  double learning_rate = 0.1;
  std::vector<double> base_score;  // per class
  std::vector<Tree> trees;         // round-major: trees[round * n_classes + class]
  std::vector<double> importance;  // total split gain per feature
  bool single_class = false;       // fitted on one class only; model is constant

  std::size_t rounds() const { return n_classes > 0 ? trees.size() / static_cast<std::size_t>(n_classes) : 0; }

  std::vector<double> raw_scores(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_features) {
      throw DataError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                      std::to_string(n_features));
    }
    std::vector<double> s = base_score;
    for (std::size_t t = 0; t < trees.size(); ++t) {
      s[t % static_cast<std::size_t>(n_classes)] += learning_rate * trees[t].predict(x);
    }
    return s;
  }
};

// An ensemble with no trees and uniform base scores.
inline BoostedEnsemble constant_ensemble(int n_classes, int n_features) {
  BoostedEnsemble m;
  m.n_classes = n_classes;
  m.n_features = n_features;
  m.base_score.assign(static_cast<std::size_t>(n_classes), 0.0);
  m.importance.assign(static_cast<std::size_t>(n_features), 0.0);
  return m;
}

inline std::vector<double> predict_proba(const BoostedEnsemble& m, std::span<const double> x) {
  return softmax(m.raw_scores(x));
}

// Features with nonzero accumulated gain; absent features have importance 0.
inline std::map<int, double> feature_importance(const BoostedEnsemble& m) {
  std::map<int, double> out;
  for (std::size_t f = 0; f < m.importance.size(); ++f) {
    if (m.importance[f] > 0.0) out[static_cast<int>(f)] = m.importance[f];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

// Quantized, feature-major copy of the training matrix. Bin b of feature f holds values in
// (cuts[f][b-1], cuts[f][b]]; splitting after bin j sends x <= cuts[f][j] left.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> cuts;
  std::vector<std::size_t> offset;  // histogram offset of each feature
  std::size_t total_bins = 0;
  std::vector<std::uint16_t> bins;  // cols x rows

  const std::uint16_t* column(std::size_t f) const { return bins.data() + f * rows; }
};

namespace detail {

inline double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

}  // namespace detail

inline BinnedMatrix bin_features(const Matrix& x, SplitMode mode, int max_bins) {
  BinnedMatrix bm;
  bm.rows = static_cast<std::size_t>(x.rows());
  bm.cols = static_cast<std::size_t>(x.cols());
  bm.cuts.resize(bm.cols);
  bm.offset.resize(bm.cols);
  bm.bins.resize(bm.rows * bm.cols);
  std::vector<double> sorted(bm.rows);
  for (std::size_t f = 0; f < bm.cols; ++f) {
    for (std::size_t r = 0; r < bm.rows; ++r) sorted[r] = x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f));
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct;
    std::unique_copy(sorted.begin(), sorted.end(), std::back_inserter(distinct));
    auto& cuts = bm.cuts[f];
    if (mode == SplitMode::exact || distinct.size() <= static_cast<std::size_t>(max_bins)) {
      if (distinct.size() > 65536) throw ConfigError("exact split mode supports at most 65536 distinct values");
      for (std::size_t i = 1; i < distinct.size(); ++i) cuts.push_back(detail::midpoint(distinct[i - 1], distinct[i]));
    } else {
      for (int b = 1; b < max_bins; ++b) {
        const double v = sorted[static_cast<std::size_t>(b) * bm.rows / static_cast<std::size_t>(max_bins)];
        const auto p = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin());
        if (p == 0) continue;
        const double c = detail::midpoint(distinct[p - 1], distinct[p]);
        if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
      }
    }
    bm.offset[f] = bm.total_bins;
    bm.total_bins += cuts.size() + 1;
    auto* col = bm.bins.data() + f * bm.rows;
    for (std::size_t r = 0; r < bm.rows; ++r) {
      const double v = x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f));
      col[r] = static_cast<std::uint16_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
    }
  }
  return bm;
}

struct SplitCandidate {
  int feature = -1;
  int bin = -1;  // last bin going left
  double threshold = 0.0;
  double gain = -std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedMatrix& bm, const TrainParams& p)
      : bm_(bm), p_(p), hist_g_(bm.total_bins), hist_h_(bm.total_bins) {}

  Tree build(std::span<const double> g, std::span<const double> h, std::vector<int> rows,
             std::span<const int> features, std::vector<double>& importance) {
    g_ = g;
    h_ = h;
    features_ = features;
    Tree tree;
    tree.nodes.emplace_back();
    grow(tree, 0, std::move(rows), 0, importance);
    return tree;
  }

  // Best split of a node holding `rows`; the histograms are left filled for inspection.
  SplitCandidate best_split(const std::vector<int>& rows, double gsum, double hsum) {
    for (int f : features_) {
      const auto fu = static_cast<std::size_t>(f);
      const std::size_t off = bm_.offset[fu];
      const std::size_t nb = bm_.cuts[fu].size() + 1;
      std::fill_n(hist_g_.begin() + static_cast<std::ptrdiff_t>(off), nb, 0.0);
      std::fill_n(hist_h_.begin() + static_cast<std::ptrdiff_t>(off), nb, 0.0);
      const auto* col = bm_.column(fu);
      for (int r : rows) {
        const std::size_t b = off + col[r];
        hist_g_[b] += g_[static_cast<std::size_t>(r)];
        hist_h_[b] += h_[static_cast<std::size_t>(r)];
      }
    }
    SplitCandidate best;
    for (int f : features_) {
      const auto fu = static_cast<std::size_t>(f);
      const std::size_t off = bm_.offset[fu];
      const std::size_t ncut = bm_.cuts[fu].size();
      double gl = 0.0;
      double hl = 0.0;
      for (std::size_t j = 0; j < ncut; ++j) {
        gl += hist_g_[off + j];
        hl += hist_h_[off + j];
        const double gr = gsum - gl;
        const double hr = hsum - hl;
        if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
        if (hl + p_.reg_lambda <= 0.0 || hr + p_.reg_lambda <= 0.0) continue;
        const double gain = split_gain(gl, hl, gr, hr, p_.reg_lambda, p_.gamma);
        if (improves_on(gain, best.gain)) {
          best.feature = f;
          best.bin = static_cast<int>(j);
          best.threshold = bm_.cuts[fu][j];
          best.gain = gain;
        }
      }
    }
    return best;
  }

 private:
  double leaf_weight(double gsum, double hsum) const {
    double g = gsum;
    if (p_.reg_alpha > 0.0) {
      g = gsum > p_.reg_alpha ? gsum - p_.reg_alpha : (gsum < -p_.reg_alpha ? gsum + p_.reg_alpha : 0.0);
    }
    const double denom = hsum + p_.reg_lambda;
    return denom > 0.0 ? -g / denom : 0.0;
  }

  void grow(Tree& tree, int node, std::vector<int> rows, int depth, std::vector<double>& importance) {
    double gsum = 0.0;
    double hsum = 0.0;
    for (int r : rows) {
      gsum += g_[static_cast<std::size_t>(r)];
      hsum += h_[static_cast<std::size_t>(r)];
    }
    {
      auto& n = tree.nodes[static_cast<std::size_t>(node)];
      n.weight = leaf_weight(gsum, hsum);
      n.hessian = hsum;
    }
    if (depth >= p_.max_depth || rows.size() < 2) return;
    const auto split = best_split(rows, gsum, hsum);
    if (split.feature < 0 || !(split.gain > 0.0)) return;

    std::vector<int> left;
    std::vector<int> right;
    const auto* col = bm_.column(static_cast<std::size_t>(split.feature));
    for (int r : rows) (col[r] <= split.bin ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int ri = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& n = tree.nodes[static_cast<std::size_t>(node)];
    n.feature = split.feature;
    n.threshold = split.threshold;
    n.gain = split.gain;
    n.left = li;
    n.right = ri;
    importance[static_cast<std::size_t>(split.feature)] += split.gain;
    grow(tree, li, std::move(left), depth + 1, importance);
    grow(tree, ri, std::move(right), depth + 1, importance);
  }

  const BinnedMatrix& bm_;
  const TrainParams& p_;
  std::vector<double> hist_g_;
  std::vector<double> hist_h_;
  std::span<const double> g_;
  std::span<const double> h_;
  std::span<const int> features_;
};

// Mean softmax cross-entropy of raw scores (rows x classes) against labels.
inline double softmax_loss(const Matrix& scores, std::span<const int> labels) {
  double loss = 0.0;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const auto row = row_span(scores, r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double s : row) sum += std::exp(s - mx);
    loss += std::log(sum) + mx - row[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];
  }
  return scores.rows() > 0 ? loss / static_cast<double>(scores.rows()) : 0.0;
}

// Fits the ensemble. When `loss_history` is given it receives the training loss before the
// first round and after every round.
inline BoostedEnsemble fit(const Matrix& x, std::span<const int> labels, int n_classes, const TrainParams& params,
                           std::vector<double>* loss_history = nullptr) {
  params.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n == 0 || d == 0) throw DataError("cannot fit on empty data");
  if (labels.size() != n) throw DataError("label count does not match row count");
  if (n_classes < 2) throw ConfigError("need at least 2 classes");
  if (!x.allFinite()) throw DataError("feature matrix contains NaN or Inf");

  std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw DataError("label " + std::to_string(y) + " out of range");
    counts[static_cast<std::size_t>(y)] += 1.0;
  }

  BoostedEnsemble m = constant_ensemble(n_classes, static_cast<int>(d));
  m.learning_rate = params.learning_rate;
  // Laplace-smoothed log priors keep every class probability strictly positive.
  for (int c = 0; c < n_classes; ++c) {
    m.base_score[static_cast<std::size_t>(c)] =
        std::log((counts[static_cast<std::size_t>(c)] + 1.0) / (static_cast<double>(n) + n_classes));
  }
  const auto present = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; });
  if (present < 2) {
    m.single_class = true;
    return m;
  }

  const auto bm = bin_features(x, params.split_mode, params.max_bins);
  TreeBuilder builder(bm, params);
  Rng rng(params.rng_seed);
  const auto cls = static_cast<std::size_t>(n_classes);

  Matrix scores(static_cast<Eigen::Index>(n), n_classes);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < cls; ++c) scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.base_score[c];
  }
  if (loss_history) loss_history->push_back(softmax_loss(scores, labels));

  Matrix prob(static_cast<Eigen::Index>(n), n_classes);
  std::vector<double> g(n);
  std::vector<double> h(n);
  std::vector<int> all_features(d);
  std::iota(all_features.begin(), all_features.end(), 0);
  const auto n_cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.colsample_bytree * static_cast<double>(d))));

  for (int round = 0; round < params.n_estimators; ++round) {
    std::vector<int> rows;
    if (params.subsample < 1.0) {
      for (std::size_t r = 0; r < n; ++r) {
        if (rng.uniform() < params.subsample) rows.push_back(static_cast<int>(r));
      }
      if (rows.empty()) rows.push_back(static_cast<int>(rng.below(n)));
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const auto p = softmax(row_span(scores, static_cast<Eigen::Index>(r)));
      for (std::size_t c = 0; c < cls; ++c) prob(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = p[c];
    }
    std::vector<Tree> round_trees;
    round_trees.reserve(cls);
    for (std::size_t c = 0; c < cls; ++c) {
      std::vector<int> features;
      if (n_cols < d) {
        auto pool = all_features;
        for (std::size_t i = 0; i < n_cols; ++i) {
          std::swap(pool[i], pool[i + rng.below(d - i)]);
        }
        features.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_cols));
        std::sort(features.begin(), features.end());
      } else {
        features = all_features;
      }
      for (std::size_t r = 0; r < n; ++r) {
        const double p = prob(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        g[r] = p - (labels[r] == static_cast<int>(c) ? 1.0 : 0.0);
        h[r] = std::max(p * (1.0 - p), 1e-16);
      }
      round_trees.push_back(builder.build(g, h, rows, features, m.importance));
    }
    for (std::size_t r = 0; r < n; ++r) {
      const auto xr = row_span(x, static_cast<Eigen::Index>(r));
      for (std::size_t c = 0; c < cls; ++c) {
        scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += params.learning_rate * round_trees[c].predict(xr);
      }
    }
    for (auto& t : round_trees) m.trees.push_back(std::move(t));
    if (loss_history) loss_history->push_back(softmax_loss(scores, labels));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void write_ensemble(io::BinaryWriter& w, const BoostedEnsemble& m) {
  w.i32(m.n_classes);
  w.i32(m.n_features);
  w.f64(m.learning_rate);
  w.u8(m.single_class ? 1 : 0);
  w.f64_vector(m.base_score);
  w.f64_vector(m.importance);
  w.u32(static_cast<std::uint32_t>(m.trees.size()));
  for (const auto& t : m.trees) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.f64(n.weight);
      w.f64(n.gain);
      w.f64(n.hessian);
    }
  }
}

inline BoostedEnsemble read_ensemble(io::BinaryReader& r) {
  BoostedEnsemble m;
  m.n_classes = r.i32();
  m.n_features = r.i32();
  m.learning_rate = r.f64();
  m.single_class = r.u8() != 0;
  m.base_score = r.f64_vector();
  m.importance = r.f64_vector();
  auto corrupt = [&](const std::string& what) {
    return FormatError(FormatError::Kind::corrupt, r.context() + ": " + what);
  };
  if (m.n_classes < 1 || m.n_features < 0 || m.base_score.size() != static_cast<std::size_t>(m.n_classes) ||
      m.importance.size() != static_cast<std::size_t>(m.n_features)) {
    throw corrupt("inconsistent ensemble header");
  }
  const auto count = r.u32();
  if (count % static_cast<std::uint32_t>(m.n_classes) != 0) throw corrupt("tree count not a multiple of class count");
  m.trees.resize(count);
  for (auto& t : m.trees) {
    const auto nodes = r.u32();
    r.require(std::size_t{nodes} * 44);
    t.nodes.resize(nodes);
    for (auto& n : t.nodes) {
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.i32();
      n.right = r.i32();
      n.weight = r.f64();
      n.gain = r.f64();
      n.hessian = r.f64();
    }
    if (t.nodes.empty()) throw corrupt("empty tree");
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      if (n.is_leaf()) continue;
      const auto sz = static_cast<int>(t.nodes.size());
      if (n.feature >= m.n_features || n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= sz ||
          n.right >= sz) {
        throw corrupt("malformed tree node");
      }
    }
  }
  return m;
}

}  // namespace gamc
