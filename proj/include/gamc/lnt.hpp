#pragma once

// Supervised linear projection features: importance-ranked feature subspaces are
// standardized, projected by one-vs-rest logistic regression, and turned into class
// probabilities that are appended to the raw feature vector.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gamc/error.hpp"
#include "gamc/io.hpp"
#include "gamc/linalg.hpp"
#include "gamc/rng.hpp"

namespace gamc {

struct SubspaceSpec {
  std::vector<int> sizes;                 // effective (clipped) sizes, ascending
  std::vector<std::vector<int>> indices;  // per size, feature indices by descending importance
};

// The `s` highest-importance features for each requested size s (ties by lower index).
// Sizes above the feature count are clipped, so smaller subspaces nest inside larger ones.
inline SubspaceSpec select_subspaces(std::span<const double> importance, std::span<const int> sizes) {
  if (importance.empty()) throw DataError("importance vector is empty");
  std::vector<int> order(importance.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return importance[static_cast<std::size_t>(a)] > importance[static_cast<std::size_t>(b)];
  });
  std::vector<int> sorted_sizes(sizes.begin(), sizes.end());
  std::sort(sorted_sizes.begin(), sorted_sizes.end());
  SubspaceSpec spec;
  for (int s : sorted_sizes) {
    if (s < 1) throw ConfigError("subspace sizes must be positive");
    const auto take = std::min(static_cast<std::size_t>(s), order.size());
    spec.sizes.push_back(static_cast<int>(take));
    spec.indices.emplace_back(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return spec;
}

inline std::vector<std::vector<int>> subspace_indices_for_importance(std::span<const double> importance,
                                                                     std::span<const int> sizes) {
  return select_subspaces(importance, sizes).indices;
}

// z = (x - mu) / sigma with population statistics; zero-variance columns get sigma = 1.
struct Standardizer {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;

  Eigen::Index dim() const { return mu.size(); }

  Matrix apply(const Matrix& x) const {
    Matrix z = x;
    for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j) = (z.col(j).array() - mu(j)) / sigma(j);
    return z;
  }

  Eigen::VectorXd apply(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != mu.size()) throw DataError("standardizer dimension mismatch");
    Eigen::VectorXd z(mu.size());
    for (Eigen::Index j = 0; j < mu.size(); ++j) z(j) = (x[static_cast<std::size_t>(j)] - mu(j)) / sigma(j);
    return z;
  }

  Matrix unapply(const Matrix& z) const {
    Matrix x = z;
    for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = x.col(j).array() * sigma(j) + mu(j);
    return x;
  }
};

inline constexpr double kMinSigma = 1e-12;

inline Standardizer fit_standardizer(const Matrix& x) {
  if (x.rows() == 0) throw DataError("cannot standardize an empty matrix");
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  s.mu = x.colwise().sum().transpose() / n;
  s.sigma.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mu(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.sigma(j) = sd > kMinSigma ? sd : 1.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// One-vs-rest logistic regression
// ---------------------------------------------------------------------------

// Sum over classes c of  mean_i softplus(-y_ic s_ic) + l2/2 ||w_c||^2,  s = Z W + b,
// y_ic = +1 for the row's class and -1 otherwise. Biases are not penalized.
struct LogisticObjective {
  const Matrix& z;
  Eigen::MatrixXd targets;  // rows x classes, 0/1
  double l2 = 1e-2;

  LogisticObjective(const Matrix& z_in, std::span<const int> labels, int n_classes, double l2_in)
      : z(z_in), targets(Eigen::MatrixXd::Zero(z_in.rows(), n_classes)), l2(l2_in) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) targets(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  }

  Eigen::MatrixXd scores(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) const {
    Eigen::MatrixXd s = z * w;
    s.rowwise() += b.transpose();
    return s;
  }

  double loss_from_scores(const Eigen::MatrixXd& s, const Eigen::MatrixXd& w) const {
    double total = 0.0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double m = targets(i, c) > 0.5 ? -s(i, c) : s(i, c);  // softplus argument
        total += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
      }
    }
    return total / static_cast<double>(s.rows()) + 0.5 * l2 * w.squaredNorm();
  }

  double loss(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) const { return loss_from_scores(scores(w, b), w); }

  // Gradient with respect to (w, b) given precomputed scores.
  void gradient_from_scores(const Eigen::MatrixXd& s, const Eigen::MatrixXd& w, Eigen::MatrixXd& gw,
                            Eigen::VectorXd& gb) const {
    Eigen::MatrixXd resid(s.rows(), s.cols());
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double v = s(i, c);
        const double sig = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        resid(i, c) = sig - targets(i, c);
      }
    }
    const double inv = 1.0 / static_cast<double>(s.rows());
    gw = (z.transpose() * resid) * inv + l2 * w;
    gb = resid.colwise().sum().transpose() * inv;
  }

  void gradient(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, Eigen::MatrixXd& gw, Eigen::VectorXd& gb) const {
    gradient_from_scores(scores(w, b), w, gw, gb);
  }
};

struct LogisticFit {
  Eigen::MatrixXd weights;  // features x classes
  Eigen::VectorXd bias;     // classes
  std::vector<double> loss_history;
  int iterations = 0;
  bool converged = false;
};

struct OptimizerOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // stop when max |gradient| falls below this
};

// Largest eigenvalue of [Z 1]^T [Z 1] / n by power iteration.
inline double design_curvature(const Matrix& z) {
  const Eigen::Index d = z.cols();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d + 1) / std::sqrt(static_cast<double>(d + 1));
  double lambda = 1.0;
  const double inv = 1.0 / static_cast<double>(std::max<Eigen::Index>(1, z.rows()));
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd u = z * v.head(d);
    u.array() += v(d);
    Eigen::VectorXd next(d + 1);
    next.head(d) = z.transpose() * u * inv;
    next(d) = u.sum() * inv;
    const double norm = next.norm();
    if (!(norm > 0.0)) break;
    lambda = norm;
    v = next / norm;
  }
  return lambda;
}

// Full-batch gradient descent with step 1/L and backtracking, so the loss never increases.
inline LogisticFit fit_logistic_ovr(const Matrix& z, std::span<const int> labels, int n_classes, double l2,
                                    const OptimizerOptions& opt = {}) {
  LogisticObjective obj(z, labels, n_classes, l2);
  LogisticFit fit;
  fit.weights = Eigen::MatrixXd::Zero(z.cols(), n_classes);
  fit.bias = Eigen::VectorXd::Zero(n_classes);
  double step = 1.0 / (0.25 * design_curvature(z) * 1.05 + l2);

  Eigen::MatrixXd s = obj.scores(fit.weights, fit.bias);
  double loss = obj.loss_from_scores(s, fit.weights);
  fit.loss_history.push_back(loss);
  Eigen::MatrixXd gw;
  Eigen::VectorXd gb;
  for (int it = 0; it < opt.max_iterations; ++it) {
    obj.gradient_from_scores(s, fit.weights, gw, gb);
    const double gmax = std::max(gw.cwiseAbs().maxCoeff(), gb.cwiseAbs().maxCoeff());
    if (gmax < opt.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      Eigen::MatrixXd w_new = fit.weights - step * gw;
      Eigen::VectorXd b_new = fit.bias - step * gb;
      Eigen::MatrixXd s_new = obj.scores(w_new, b_new);
      const double l_new = obj.loss_from_scores(s_new, w_new);
      if (l_new <= loss) {
        fit.weights = std::move(w_new);
        fit.bias = std::move(b_new);
        s = std::move(s_new);
        loss = l_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    fit.iterations = it + 1;
    if (!accepted) {
      fit.converged = true;
      break;
    }
    fit.loss_history.push_back(loss);
  }
  return fit;
}

struct LinearProjector {
  Eigen::MatrixXd weights;  // subspace size x classes
  Eigen::VectorXd bias;
  int n_classes = 0;
  double l2 = 1e-2;
  int fold = -1;  // cross-validation fold that produced the weights
  int folds_used = 0;
  bool folds_reduced = false;  // a class had fewer rows than the requested fold count
  double validation_macro_accuracy = 0.0;
};

struct ProjectorOptions {
  int folds = 5;
  double l2 = 1e-2;
  std::uint64_t seed = 0;
  bool standardize_per_fold = false;  // fit a standardizer on each fold's training split
  OptimizerOptions optimizer;
};

// Row order sorted by (label, content hash, content, original index). Folds and sums follow
// this order, so the fit does not depend on how the caller ordered the rows.
inline std::vector<Eigen::Index> canonical_row_order(const Matrix& x, std::span<const int> labels, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  std::vector<std::uint64_t> hash(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto bytes = std::string_view(reinterpret_cast<const char*>(x.data() + i * x.cols()),
                                        static_cast<std::size_t>(x.cols()) * sizeof(double));
    hash[static_cast<std::size_t>(i)] = io::fnv1a(bytes, Rng::mix(seed) ^ static_cast<std::uint64_t>(labels[static_cast<std::size_t>(i)]));
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto ua = static_cast<std::size_t>(a);
    const auto ub = static_cast<std::size_t>(b);
    if (labels[ua] != labels[ub]) return labels[ua] < labels[ub];
    if (hash[ua] != hash[ub]) return hash[ua] < hash[ub];
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return a < b;
  });
  return order;
}

inline Matrix take_rows(const Matrix& x, std::span<const Eigen::Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

inline Matrix take_cols(const Matrix& x, std::span<const int> cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  return out;
}

inline std::vector<double> logits(const LinearProjector& p, std::span<const double> z) {
  if (static_cast<Eigen::Index>(z.size()) != p.weights.rows()) {
    throw DataError("projector expects " + std::to_string(p.weights.rows()) + " inputs, got " + std::to_string(z.size()));
  }
  std::vector<double> l(static_cast<std::size_t>(p.n_classes));
  for (int c = 0; c < p.n_classes; ++c) {
    double s = p.bias(c);
    for (Eigen::Index j = 0; j < p.weights.rows(); ++j) s += p.weights(j, c) * z[static_cast<std::size_t>(j)];
    l[static_cast<std::size_t>(c)] = s;
  }
  return l;
}

// Softmax over the per-class logits w_c . z + b_c.
inline std::vector<double> project(const LinearProjector& p, std::span<const double> z) { return softmax(logits(p, z)); }

// Trains a one-vs-rest projector on each stratified fold's training split and keeps the one
// with the best validation macro-accuracy (mean per-class recall; ties to the lowest fold).
inline LinearProjector fit_projector(const Matrix& z_in, std::span<const int> labels_in, int n_classes,
                                     const ProjectorOptions& opt = {}) {
  const auto n = static_cast<std::size_t>(z_in.rows());
  if (n == 0) throw DataError("cannot fit projector on empty data");
  if (labels_in.size() != n) throw DataError("label count does not match row count");
  if (opt.folds < 2) throw ConfigError("projector needs at least 2 folds");
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (int y : labels_in) {
    if (y < 0 || y >= n_classes) throw DataError("label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  std::size_t present = 0;
  std::size_t min_count = n;
  for (auto c : counts) {
    if (c > 0) {
      ++present;
      min_count = std::min(min_count, c);
    }
  }
  if (present < 2) throw DegenerateError("projector needs at least two classes");

  const auto order = canonical_row_order(z_in, labels_in, opt.seed);
  const Matrix z = take_rows(z_in, order);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = labels_in[static_cast<std::size_t>(order[i])];

  LinearProjector best;
  best.n_classes = n_classes;
  best.l2 = opt.l2;
  best.folds_used = static_cast<int>(std::max<std::size_t>(2, std::min<std::size_t>(static_cast<std::size_t>(opt.folds), min_count)));
  best.folds_reduced = best.folds_used < opt.folds;
  const auto folds = static_cast<std::size_t>(best.folds_used);

  // Stratified assignment: within each class (contiguous after canonical ordering) rows are
  // dealt round-robin starting from a seeded offset.
  std::vector<int> fold_of(n);
  {
    Rng rng(opt.seed, 0xf01d);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j < n && labels[j] == labels[i]) ++j;
      const std::size_t start = rng.below(folds);
      for (std::size_t k = i; k < j; ++k) fold_of[k] = static_cast<int>((start + (k - i)) % folds);
      i = j;
    }
  }

  double best_score = -1.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train_rows;
    std::vector<Eigen::Index> val_rows;
    for (std::size_t i = 0; i < n; ++i) (static_cast<std::size_t>(fold_of[i]) == f ? val_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
    if (train_rows.empty() || val_rows.empty()) continue;
    Matrix zt = take_rows(z, train_rows);
    Matrix zv = take_rows(z, val_rows);
    if (opt.standardize_per_fold) {
      const auto st = fit_standardizer(zt);
      zt = st.apply(zt);
      zv = st.apply(zv);
    }
    std::vector<int> yt;
    yt.reserve(train_rows.size());
    for (auto r : train_rows) yt.push_back(labels[static_cast<std::size_t>(r)]);
    auto lf = fit_logistic_ovr(zt, yt, n_classes, opt.l2, opt.optimizer);

    LinearProjector cand;
    cand.weights = std::move(lf.weights);
    cand.bias = std::move(lf.bias);
    cand.n_classes = n_classes;
    std::vector<double> hit(static_cast<std::size_t>(n_classes), 0.0);
    std::vector<double> tot(static_cast<std::size_t>(n_classes), 0.0);
    for (Eigen::Index i = 0; i < zv.rows(); ++i) {
      const int y = labels[static_cast<std::size_t>(val_rows[static_cast<std::size_t>(i)])];
      const auto pred = argmax(logits(cand, row_span(zv, i)));
      tot[static_cast<std::size_t>(y)] += 1.0;
      if (static_cast<int>(pred) == y) hit[static_cast<std::size_t>(y)] += 1.0;
    }
    double macro = 0.0;
    int seen = 0;
    for (std::size_t c = 0; c < hit.size(); ++c) {
      if (tot[c] > 0) {
        macro += hit[c] / tot[c];
        ++seen;
      }
    }
    macro = seen ? macro / seen : 0.0;
    if (macro > best_score) {
      best_score = macro;
      best.weights = std::move(cand.weights);
      best.bias = std::move(cand.bias);
      best.fold = static_cast<int>(f);
      best.validation_macro_accuracy = macro;
    }
  }
  if (best.fold < 0) throw DataError("no usable cross-validation fold");
  return best;
}

// ---------------------------------------------------------------------------
// LNT block
// ---------------------------------------------------------------------------

struct LntBlock {
  SubspaceSpec spec;
  std::vector<Standardizer> standardizers;
  std::vector<LinearProjector> projectors;
  int n_classes = 0;
  int input_dim = 0;

  int output_dim() const { return input_dim + static_cast<int>(spec.sizes.size()) * n_classes; }
};

// Fold statistics standardize inside cross-validation; the retained projector is then paired
// with a standardizer refit on all rows.
inline LntBlock fit_lnt_block(const Matrix& x, std::span<const int> labels, int n_classes, const SubspaceSpec& spec,
                              const ProjectorOptions& opt = {}) {
  if (x.rows() == 0) throw DataError("cannot fit LNT block on empty data");
  LntBlock block;
  block.spec = spec;
  block.n_classes = n_classes;
  block.input_dim = static_cast<int>(x.cols());
  const auto order = canonical_row_order(x, labels, opt.seed);
  const Matrix xc = take_rows(x, order);
  std::vector<int> yc(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) yc[i] = labels[static_cast<std::size_t>(order[i])];
  ProjectorOptions popt = opt;
  popt.standardize_per_fold = true;
  for (const auto& idx : spec.indices) {
    for (int j : idx) {
      if (j < 0 || j >= x.cols()) throw ConfigError("subspace index out of range");
    }
    const Matrix sub = take_cols(xc, idx);
    block.projectors.push_back(fit_projector(sub, yc, n_classes, popt));
    block.standardizers.push_back(fit_standardizer(sub));
  }
  return block;
}

// [x, p_size1, p_size2, ...] in ascending subspace size.
inline std::vector<double> augment(const LntBlock& block, std::span<const double> x) {
  if (static_cast<int>(x.size()) != block.input_dim) {
    throw DataError("LNT block expects " + std::to_string(block.input_dim) + " features, got " + std::to_string(x.size()));
  }
  std::vector<double> out(x.begin(), x.end());
  out.reserve(static_cast<std::size_t>(block.output_dim()));
  std::vector<double> sub;
  for (std::size_t s = 0; s < block.spec.indices.size(); ++s) {
    const auto& idx = block.spec.indices[s];
    sub.resize(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) sub[j] = x[static_cast<std::size_t>(idx[j])];
    const Eigen::VectorXd z = block.standardizers[s].apply(sub);
    const auto p = project(block.projectors[s], std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

inline Matrix augment(const LntBlock& block, const Matrix& x) {
  Matrix out(x.rows(), block.output_dim());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto v = augment(block, row_span(x, i));
    out.row(i) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return out;
}

inline std::vector<std::string> lnt_feature_names(const LntBlock& block, const std::vector<std::string>& base_names) {
  std::vector<std::string> names = base_names;
  for (int s : block.spec.sizes) {
    for (int c = 0; c < block.n_classes; ++c) names.push_back("lnt.s" + std::to_string(s) + ".p" + std::to_string(c));
  }
  return names;
}

inline void write_lnt_block(io::BinaryWriter& w, const LntBlock& b) {
  w.i32(b.n_classes);
  w.i32(b.input_dim);
  w.u32(static_cast<std::uint32_t>(b.spec.sizes.size()));
  for (std::size_t s = 0; s < b.spec.sizes.size(); ++s) {
    w.i32(b.spec.sizes[s]);
    w.i32_vector(b.spec.indices[s]);
    write_vector(w, b.standardizers[s].mu);
    write_vector(w, b.standardizers[s].sigma);
    const auto& p = b.projectors[s];
    write_matrix(w, p.weights);
    write_vector(w, p.bias);
    w.f64(p.l2);
    w.i32(p.fold);
    w.i32(p.folds_used);
    w.u8(p.folds_reduced ? 1 : 0);
    w.f64(p.validation_macro_accuracy);
  }
}

inline LntBlock read_lnt_block(io::BinaryReader& r) {
  LntBlock b;
  b.n_classes = r.i32();
  b.input_dim = r.i32();
  const auto count = r.u32();
  for (std::uint32_t s = 0; s < count; ++s) {
    b.spec.sizes.push_back(r.i32());
    b.spec.indices.push_back(r.i32_vector());
    Standardizer st;
    st.mu = read_vector(r);
    st.sigma = read_vector(r);
    LinearProjector p;
    p.weights = read_matrix(r);
    p.bias = read_vector(r);
    p.n_classes = b.n_classes;
    p.l2 = r.f64();
    p.fold = r.i32();
    p.folds_used = r.i32();
    p.folds_reduced = r.u8() != 0;
    p.validation_macro_accuracy = r.f64();
    const auto size = b.spec.indices.back().size();
    if (st.mu.size() != static_cast<Eigen::Index>(size) || st.sigma.size() != static_cast<Eigen::Index>(size) ||
        p.weights.rows() != static_cast<Eigen::Index>(size) || p.weights.cols() != b.n_classes ||
        p.bias.size() != b.n_classes) {
      throw FormatError(FormatError::Kind::corrupt, r.context() + ": inconsistent LNT block");
    }
    for (int j : b.spec.indices.back()) {
      if (j < 0 || j >= b.input_dim) throw FormatError(FormatError::Kind::corrupt, r.context() + ": LNT index out of range");
    }
    b.standardizers.push_back(std::move(st));
    b.projectors.push_back(std::move(p));
  }
  return b;
}

}  // namespace gamc
