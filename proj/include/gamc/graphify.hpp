#pragma once

// Dual-metric k-NN spatio-temporal graphs over the samples of a frame and the
// normalized-Laplacian spectral descriptors computed from them.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gamc/error.hpp"
#include "gamc/frames.hpp"

namespace gamc {

enum class Metric { cartesian, polar };

inline std::string_view metric_name(Metric m) { return m == Metric::cartesian ? "cart" : "polar"; }

struct ConstellationPoint {
  double i = 0.0;
  double q = 0.0;
  double a = 0.0;    // amplitude
  double phi = 0.0;  // phase in (-pi, pi]
};

struct GraphConfig {
  int k = 8;
  Metric metric = Metric::cartesian;
  double lambda_t = 50.0;
  // Kernel bandwidth: median k-NN distance of the graph, floored at this value.
  double sigma_floor = 1e-6;

  void validate(std::size_t n) const {
    if (k < 1 || static_cast<std::size_t>(k) >= n) {
      throw ConfigError("graph k must satisfy 1 <= k < N (k=" + std::to_string(k) +
                        ", N=" + std::to_string(n) + ")");
    }
    if (!std::isfinite(lambda_t) || lambda_t < 0.0) throw ConfigError("lambda_t must be finite and >= 0");
    if (!(sigma_floor > 0.0)) throw ConfigError("sigma_floor must be positive");
  }
};

inline constexpr double kZeroEigenvalue = 1e-8;

struct StGraph {
  Eigen::MatrixXd a_s;         // spatial k-NN kernel weights, symmetric
  Eigen::MatrixXd a_t;         // temporal chain
  Eigen::MatrixXd a_st;        // a_s + lambda * a_t
  Eigen::VectorXd degree;      // row sums of a_st
  Eigen::MatrixXd laplacian;   // I - D^-1/2 A D^-1/2
  Eigen::VectorXd eigenvalues;  // ascending
  double sigma = 0.0;
};

inline double wrap_phase(double d) { return std::remainder(d, 2.0 * std::numbers::pi); }

inline ConstellationPoint to_polar(cd v) {
  ConstellationPoint p;
  p.i = v.real();
  p.q = v.imag();
  p.a = std::hypot(p.i, p.q);
  if (p.a == 0.0) {
    p.phi = 0.0;
  } else {
    p.phi = std::atan2(p.q, p.i);
    if (p.phi <= -std::numbers::pi) p.phi = std::numbers::pi;
  }
  return p;
}

inline std::vector<ConstellationPoint> to_polar(std::span<const cd> samples) {
  std::vector<ConstellationPoint> out;
  out.reserve(samples.size());
  for (const auto& v : samples) out.push_back(to_polar(v));
  return out;
}

inline std::vector<ConstellationPoint> to_polar(const IqFrame& frame) { return to_polar(frame.samples); }

inline double squared_distance(const ConstellationPoint& x, const ConstellationPoint& y, Metric m) {
  if (m == Metric::cartesian) {
    const double di = x.i - y.i;
    const double dq = x.q - y.q;
    return di * di + dq * dq;
  }
  const double da = x.a - y.a;
  const double dphi = wrap_phase(x.phi - y.phi);
  return da * da + dphi * dphi;
}

// For every node, its `kmax` nearest other nodes ordered by (distance, node index).
struct NeighborTable {
  std::size_t n = 0;
  std::size_t kmax = 0;
  std::vector<int> index;   // n x kmax
  std::vector<double> d2;   // n x kmax squared distances

  int neighbor(std::size_t node, std::size_t rank) const { return index[node * kmax + rank]; }
  double dist2(std::size_t node, std::size_t rank) const { return d2[node * kmax + rank]; }
};

inline NeighborTable nearest_neighbors(std::span<const ConstellationPoint> pts, Metric metric,
                                       std::size_t kmax) {
  const std::size_t n = pts.size();
  if (kmax < 1 || kmax >= n) throw ConfigError("k must satisfy 1 <= k < N");
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_distance(pts[i], pts[j], metric);
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  }
  NeighborTable t;
  t.n = n;
  t.kmax = kmax;
  t.index.resize(n * kmax);
  t.d2.resize(n * kmax);
  std::vector<int> order(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order[w++] = static_cast<int>(j);
    }
    const double* row = &dist[i * n];
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kmax), order.end(),
                      [row](int a, int b) { return row[a] < row[b] || (row[a] == row[b] && a < b); });
    for (std::size_t r = 0; r < kmax; ++r) {
      t.index[i * kmax + r] = order[r];
      t.d2[i * kmax + r] = row[order[r]];
    }
  }
  return t;
}

// Median of the Euclidean (not squared) distances to the first k neighbors of every node.
inline double median_knn_distance(const NeighborTable& t, std::size_t k) {
  std::vector<double> d;
  d.reserve(t.n * k);
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t r = 0; r < k; ++r) d.push_back(std::sqrt(t.dist2(i, r)));
  }
  const std::size_t m = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m), d.end());
  if (d.size() % 2 == 1) return d[m];
  const double upper = d[m];
  const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m));
  return 0.5 * (lower + upper);
}

// Directed Gaussian-kernel k-NN weights symmetrized by elementwise max; zero diagonal.
inline Eigen::MatrixXd adjacency_from_neighbors(const NeighborTable& t, std::size_t k, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("kernel bandwidth sigma must be positive");
  if (k < 1 || k > t.kmax) throw ConfigError("k exceeds neighbor table depth");
  const double inv = 1.0 / (sigma * sigma);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.n), static_cast<Eigen::Index>(t.n));
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t r = 0; r < k; ++r) {
      const auto j = static_cast<Eigen::Index>(t.neighbor(i, r));
      const auto ii = static_cast<Eigen::Index>(i);
      const double w = std::exp(-t.dist2(i, r) * inv);
      a(ii, j) = std::max(a(ii, j), w);
      a(j, ii) = std::max(a(j, ii), w);
    }
  }
  return a;
}

inline Eigen::MatrixXd knn_spatial_adjacency(std::span<const ConstellationPoint> pts, int k,
                                             Metric metric, double sigma) {
  if (k < 1 || static_cast<std::size_t>(k) >= pts.size()) throw ConfigError("k must satisfy 1 <= k < N");
  if (!(sigma > 0.0)) throw ConfigError("kernel bandwidth sigma must be positive");
  const auto table = nearest_neighbors(pts, metric, static_cast<std::size_t>(k));
  return adjacency_from_neighbors(table, static_cast<std::size_t>(k), sigma);
}

inline Eigen::MatrixXd temporal_adjacency(std::size_t n) {
  if (n < 2) throw ConfigError("temporal adjacency needs at least 2 nodes");
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    a(i, i + 1) = 1.0;
    a(i + 1, i) = 1.0;
  }
  return a;
}

// Ascending eigenvalues of the symmetric normalized Laplacian; negatives above -1e-8 clamp to 0.
inline Eigen::VectorXd laplacian_spectrum(const Eigen::MatrixXd& laplacian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DataError("eigen decomposition failed");
  Eigen::VectorXd ev = solver.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size());
  for (auto& v : ev) {
    if (v < 0.0 && v > -kZeroEigenvalue) v = 0.0;
  }
  return ev;
}

// Combines spatial and temporal adjacency and computes the normalized Laplacian spectrum.
inline StGraph combine_graph(Eigen::MatrixXd a_s, Eigen::MatrixXd a_t, double lambda_t) {
  if (a_s.rows() != a_s.cols() || a_t.rows() != a_s.rows() || a_t.cols() != a_s.cols()) {
    throw ConfigError("adjacency matrices must be square and of equal size");
  }
  StGraph g;
  g.a_s = std::move(a_s);
  g.a_t = std::move(a_t);
  g.a_st = g.a_s + lambda_t * g.a_t;
  const Eigen::Index n = g.a_st.rows();
  g.degree = g.a_st.rowwise().sum();
  Eigen::VectorXd dinv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(g.degree(i) > 0.0)) {
      throw DegenerateError("graph node " + std::to_string(i) + " is isolated");
    }
    dinv(i) = 1.0 / std::sqrt(g.degree(i));
  }
  g.laplacian.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // Product order is symmetric in (i, j), keeping the matrix exactly symmetric.
      const double off = g.a_st(i, j) * (dinv(i) * dinv(j));
      g.laplacian(i, j) = (i == j ? 1.0 : 0.0) - off;
    }
  }
  g.eigenvalues = laplacian_spectrum(g.laplacian);
  return g;
}

inline StGraph spectral_pipeline(std::span<const cd> samples, const GraphConfig& cfg) {
  cfg.validate(samples.size());
  const auto pts = to_polar(samples);
  const auto table = nearest_neighbors(pts, cfg.metric, static_cast<std::size_t>(cfg.k));
  const double sigma = std::max(median_knn_distance(table, static_cast<std::size_t>(cfg.k)), cfg.sigma_floor);
  auto g = combine_graph(adjacency_from_neighbors(table, static_cast<std::size_t>(cfg.k), sigma),
                         temporal_adjacency(samples.size()), cfg.lambda_t);
  g.sigma = sigma;
  return g;
}

inline StGraph spectral_pipeline(const IqFrame& frame, const GraphConfig& cfg) {
  return spectral_pipeline(std::span<const cd>(frame.samples), cfg);
}

// ---------------------------------------------------------------------------
// Spectral descriptors
// ---------------------------------------------------------------------------

inline constexpr std::size_t kFirstEigenvalues = 8;
inline constexpr std::size_t kLastEigenvalues = 4;
inline constexpr std::size_t kSpectralBlockSize = 8 + kFirstEigenvalues + kLastEigenvalues;

inline const std::array<std::string, kSpectralBlockSize>& spectral_descriptor_names() {
  static const std::array<std::string, kSpectralBlockSize> names = [] {
    std::array<std::string, kSpectralBlockSize> n{};
    const char* fixed[] = {"entropy", "mean", "var", "skew", "lambda1", "lambda2", "gap_ratio", "max_gap"};
    std::size_t w = 0;
    for (const char* f : fixed) n[w++] = f;
    for (std::size_t i = 0; i < kFirstEigenvalues; ++i) n[w++] = "ev_first" + std::to_string(i);
    for (std::size_t i = 0; i < kLastEigenvalues; ++i) n[w++] = "ev_last" + std::to_string(i);
    return n;
  }();
  return names;
}

struct SpectralBlock {
  double entropy = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double lambda1 = 0.0;  // smallest eigenvalue above 1e-8
  double lambda2 = 0.0;  // second smallest eigenvalue above 1e-8
  double gap_ratio = 0.0;
  double max_gap = 0.0;
  std::array<double, kFirstEigenvalues> first{};
  std::array<double, kLastEigenvalues> last{};  // ascending: last[3] is the largest
  bool degenerate = false;  // fewer than two nonzero eigenvalues; lambda1/lambda2/gap_ratio are 0

  std::array<double, kSpectralBlockSize> values() const {
    std::array<double, kSpectralBlockSize> v{};
    std::size_t w = 0;
    for (double x : {entropy, mean, variance, skewness, lambda1, lambda2, gap_ratio, max_gap}) v[w++] = x;
    for (double x : first) v[w++] = x;
    for (double x : last) v[w++] = x;
    return v;
  }
};

inline SpectralBlock spectral_features(std::span<const double> ev) {
  SpectralBlock b;
  const std::size_t n = ev.size();
  if (n == 0) throw DataError("empty spectrum");
  const double total = std::accumulate(ev.begin(), ev.end(), 0.0);
  if (total > 0.0) {
    for (double v : ev) {
      const double p = v / total;
      if (p > 0.0) b.entropy -= p * std::log(p);
    }
  }
  b.mean = total / static_cast<double>(n);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : ev) {
    const double d = v - b.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  b.variance = m2 / static_cast<double>(n);
  const double sd = std::sqrt(b.variance);
  b.skewness = sd < 1e-12 ? 0.0 : (m3 / static_cast<double>(n)) / (sd * sd * sd);

  std::size_t found = 0;
  for (double v : ev) {
    if (v > kZeroEigenvalue) {
      (found == 0 ? b.lambda1 : b.lambda2) = v;
      if (++found == 2) break;
    }
  }
  if (found < 2) {
    b.degenerate = true;
    b.lambda1 = 0.0;
    b.lambda2 = 0.0;
  } else {
    b.gap_ratio = b.lambda2 / b.lambda1;
  }
  for (std::size_t i = 1; i < n; ++i) b.max_gap = std::max(b.max_gap, ev[i] - ev[i - 1]);
  for (std::size_t i = 0; i < kFirstEigenvalues && i < n; ++i) b.first[i] = ev[i];
  for (std::size_t i = 0; i < kLastEigenvalues && i < n; ++i) {
    b.last[kLastEigenvalues - 1 - i] = ev[n - 1 - i];
  }
  return b;
}

inline SpectralBlock spectral_features(const StGraph& g) {
  return spectral_features(std::span<const double>(g.eigenvalues.data(), static_cast<std::size_t>(g.eigenvalues.size())));
}

struct GraphFeatureConfig {
  std::vector<int> k_set = {4, 8, 16, 32};
  double lambda_t = 50.0;
  double sigma_floor = 1e-6;

  std::size_t dimension() const { return k_set.size() * 2 * kSpectralBlockSize; }

  void validate() const {
    if (k_set.empty()) throw ConfigError("k_set must not be empty");
    for (int k : k_set) {
      if (k < 1) throw ConfigError("k_set entries must be positive");
    }
    if (!std::is_sorted(k_set.begin(), k_set.end()) ||
        std::adjacent_find(k_set.begin(), k_set.end()) != k_set.end()) {
      throw ConfigError("k_set must be strictly ascending");
    }
    if (!std::isfinite(lambda_t) || lambda_t < 0.0) throw ConfigError("lambda_t must be finite and >= 0");
    if (!(sigma_floor > 0.0)) throw ConfigError("sigma_floor must be positive");
  }
};

// Names "g.{metric}.k{k}.{descriptor}", k ascending, cartesian before polar.
inline std::vector<std::string> graph_feature_names(const GraphFeatureConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(cfg.dimension());
  for (int k : cfg.k_set) {
    for (Metric m : {Metric::cartesian, Metric::polar}) {
      for (const auto& d : spectral_descriptor_names()) {
        names.push_back("g." + std::string(metric_name(m)) + ".k" + std::to_string(k) + "." + d);
      }
    }
  }
  return names;
}

// Concatenated spectral blocks over k_set x {cartesian, polar}. Expects a normalized frame.
inline std::vector<double> extract_graph_features(std::span<const cd> samples, const GraphFeatureConfig& cfg) {
  cfg.validate();
  const std::size_t n = samples.size();
  const auto kmax = static_cast<std::size_t>(cfg.k_set.back());
  if (n <= kmax) {
    throw ConfigError("frame length " + std::to_string(n) + " must exceed max k " + std::to_string(kmax));
  }
  const auto pts = to_polar(samples);
  const auto a_t = temporal_adjacency(n);
  std::array<NeighborTable, 2> tables = {nearest_neighbors(pts, Metric::cartesian, kmax),
                                         nearest_neighbors(pts, Metric::polar, kmax)};
  std::vector<double> out;
  out.reserve(cfg.dimension());
  for (int k : cfg.k_set) {
    for (const auto& table : tables) {
      const auto ku = static_cast<std::size_t>(k);
      const double sigma = std::max(median_knn_distance(table, ku), cfg.sigma_floor);
      const auto g = combine_graph(adjacency_from_neighbors(table, ku, sigma), a_t, cfg.lambda_t);
      const auto v = spectral_features(g).values();
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  return out;
}

inline std::vector<double> extract_graph_features(const IqFrame& frame, const GraphFeatureConfig& cfg = {}) {
  return extract_graph_features(std::span<const cd>(frame.samples), cfg);
}

}  // namespace gamc
