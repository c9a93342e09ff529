#pragma once

// End-to-end orchestration: dataset resolution, stratified split, feature extraction,
// selector / gate / expert training, evaluation, complexity accounting and the model bundle.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gamc/bands.hpp"
#include "gamc/config.hpp"
#include "gamc/error.hpp"
#include "gamc/frames.hpp"
#include "gamc/gbt.hpp"
#include "gamc/graphify.hpp"
#include "gamc/io.hpp"
#include "gamc/linalg.hpp"
#include "gamc/lnt.hpp"
#include "gamc/parallel.hpp"
#include "gamc/router.hpp"
#include "gamc/statfeat.hpp"

namespace gamc {

using Logger = std::function<void(const std::string&)>;

namespace detail {

inline void log(const Logger& logger, const std::string& msg) {
  if (logger) logger(msg);
}

// Runs fn and prefixes any library error with the stage name, keeping the error category.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const VersionError& e) {
    throw VersionError(e.expected(), e.found(), stage);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), stage + ": " + e.what());
  } catch (const DegenerateError& e) {
    throw DegenerateError(stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(stage + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

// Frames are ordered by (scheme in recipe order, SNR in recipe order, frame index).
inline Dataset synthesize_dataset(const SyntheticRecipe& r) {
  Dataset ds;
  ds.provenance = "synthetic";
  std::vector<ModulationScheme> schemes;
  for (const auto& name : r.schemes) {
    const auto s = parse_scheme(name);
    if (!s) throw ConfigError("unknown scheme '" + name + "'");
    schemes.push_back(*s);
  }
  const auto per_cell = static_cast<std::size_t>(r.frames_per_cell);
  const std::size_t cells = schemes.size() * r.snr_db.size();
  ds.frames.resize(cells * per_cell);
  parallel_for(ds.frames.size(), [&](std::size_t i) {
    const std::size_t cell = i / per_cell;
    const auto scheme = schemes[cell / r.snr_db.size()];
    const int snr = r.snr_db[cell % r.snr_db.size()];
    const std::uint64_t seed = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(static_cast<std::int8_t>(snr))) << 40) |
                               static_cast<std::uint64_t>(i % per_cell);
    ds.frames[i] = synthesize_frame(scheme, snr, static_cast<std::size_t>(r.frame_length), r.synth, seed);
  });
  return ds;
}

inline Dataset resolve_dataset(const PipelineConfig& cfg) {
  if (!cfg.dataset_path.empty()) return load_dataset(cfg.dataset_path);
  return synthesize_dataset(cfg.synthetic);
}

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.label_table = ds.label_table;
  out.provenance = ds.provenance;
  out.frames.reserve(rows.size());
  for (auto r : rows) out.frames.push_back(ds.frames.at(r));
  return out;
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per (label, SNR) cell, round(test_fraction * count) frames go to the test side, chosen by a
// seeded shuffle. A single-frame cell always stays in training.
inline SplitIndices stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in [0, 1)");
  std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < ds.frames.size(); ++i) cells[{ds.frames[i].label, ds.frames[i].snr_db}].push_back(i);
  std::vector<char> is_test(ds.frames.size(), 0);
  for (auto& [key, rows] : cells) {
    Rng rng(seed, (static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.first)) << 32) |
                      static_cast<std::uint32_t>(key.second));
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.below(i)]);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    n_test = std::min(n_test, rows.size() - 1);
    for (std::size_t i = 0; i < n_test; ++i) is_test[rows[i]] = 1;
  }
  SplitIndices s;
  for (std::size_t i = 0; i < ds.frames.size(); ++i) (is_test[i] ? s.test : s.train).push_back(i);
  return s;
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

struct FeatureTable {
  Matrix x;
  std::vector<std::string> names;
  int graph_dim = 0;  // leading graph-feature columns
};

inline std::vector<std::string> feature_names(const PipelineConfig& cfg) {
  std::vector<std::string> names;
  if (cfg.use_graph) names = graph_feature_names(cfg.graph);
  if (cfg.use_stat) {
    const auto s = stat_feature_names(cfg.stat);
    names.insert(names.end(), s.begin(), s.end());
  }
  return names;
}

// Normalizes the frame, then concatenates graph and statistical features.
inline std::vector<double> frame_features(const IqFrame& frame, const PipelineConfig& cfg) {
  const auto norm = normalize_frame(frame);
  std::vector<double> out;
  out.reserve(cfg.feature_dim());
  if (cfg.use_graph) out = extract_graph_features(norm.samples, cfg.graph);
  if (cfg.use_stat) {
    const auto s = extract_stat_features(norm.samples, cfg.stat);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

inline FeatureTable extract_features(const Dataset& ds, const PipelineConfig& cfg, const Logger& logger = {}) {
  FeatureTable t;
  t.names = feature_names(cfg);
  t.graph_dim = static_cast<int>(cfg.graph_dim());
  t.x.resize(static_cast<Eigen::Index>(ds.frames.size()), static_cast<Eigen::Index>(t.names.size()));
  const auto start = std::chrono::steady_clock::now();
  parallel_for(ds.frames.size(), [&](std::size_t i) {
    std::vector<double> f;
    try {
      f = frame_features(ds.frames[i], cfg);
    } catch (const DegenerateError& e) {
      throw DegenerateError("frame " + std::to_string(i) + ": " + e.what());
    }
    std::copy(f.begin(), f.end(), t.x.data() + static_cast<Eigen::Index>(i) * t.x.cols());
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail::log(logger, "extracted " + std::to_string(t.names.size()) + " features from " +
                          std::to_string(ds.frames.size()) + " frames in " + detail::format_double(std::round(secs * 10) / 10) + " s");
  return t;
}

inline Matrix select_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

struct GamcBundle {
  PipelineConfig config;
  std::vector<std::string> feature_names;
  int frame_length = 0;
  BoostedEnsemble selector;  // auxiliary importance model; not used for prediction
  MoeModel moe;
};

inline constexpr std::string_view kBundleMagic = "GAMB";
inline constexpr std::uint32_t kBundleVersion = 1;

// Labels present in training, in dataset label order.
inline std::vector<int> present_labels(std::span<const int> labels, std::size_t table_size) {
  std::vector<char> seen(table_size, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= table_size) throw DataError("label out of range");
    seen[static_cast<std::size_t>(y)] = 1;
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

// Trains every model from precomputed training-row features. `labels` index `label_table`.
inline GamcBundle train_from_features(const PipelineConfig& cfg, const FeatureTable& train, std::span<const int> labels,
                                      std::span<const int> snr_db, const std::vector<std::string>& label_table,
                                      int frame_length, const Logger& logger = {}) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(train.x.rows());
  if (n == 0) throw DataError("training set is empty");
  if (labels.size() != n || snr_db.size() != n) throw DataError("label/SNR counts do not match row count");
  if (train.x.cols() != static_cast<Eigen::Index>(cfg.feature_dim()) || train.graph_dim != static_cast<int>(cfg.graph_dim())) {
    throw DataError("feature table does not match the configuration");
  }

  GamcBundle b;
  b.config = cfg;
  b.feature_names = train.names;
  b.frame_length = frame_length;

  const auto present = present_labels(labels, label_table.size());
  std::vector<int> remap(label_table.size(), -1);
  for (std::size_t i = 0; i < present.size(); ++i) {
    remap[static_cast<std::size_t>(present[i])] = static_cast<int>(i);
    b.moe.label_table.push_back(label_table[static_cast<std::size_t>(present[i])]);
  }
  const int n_classes = static_cast<int>(present.size());
  if (n_classes < 2) throw DegenerateError("training set holds fewer than two classes");
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = remap[static_cast<std::size_t>(labels[i])];

  const auto bands = cfg.snr_bands();
  const auto band_of = detail::run_stage("split", [&] { return band_labels(snr_db, bands); });
  b.moe.n_features = static_cast<int>(train.x.cols());

  SubspaceSpec spec;
  if (cfg.lnt.sizes.empty()) {
    b.selector = constant_ensemble(n_classes, b.moe.n_features);
  } else {
    detail::log(logger, "fitting auxiliary selector on " + std::to_string(n) + " rows");
    b.selector = detail::run_stage("selector", [&] { return fit(train.x, y, n_classes, cfg.expert); });
    spec = select_subspaces(b.selector.importance, cfg.lnt.sizes);
  }

  detail::log(logger, "fitting CQI gate over " + std::to_string(bands.size()) + " band(s)");
  const Matrix graph = train.x.leftCols(train.graph_dim);
  b.moe.cqi = detail::run_stage("cqi", [&] { return fit_cqi(graph, snr_db, bands, cfg.cqi); });

  const auto lnt_opt = cfg.lnt.projector_options(cfg.split.seed);
  for (std::size_t band = 0; band < bands.size(); ++band) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (band_of[i] == static_cast<int>(band)) rows.push_back(i);
    }
    std::vector<int> yb;
    yb.reserve(rows.size());
    for (auto r : rows) yb.push_back(y[r]);
    detail::log(logger, "fitting expert " + std::to_string(band) + " on " + std::to_string(rows.size()) + " rows");
    b.moe.experts.push_back(detail::run_stage("expert " + std::to_string(band), [&] {
      return fit_expert(static_cast<int>(band), select_rows(train.x, rows), yb, n_classes, spec, cfg.expert, lnt_opt);
    }));
  }
  return b;
}

struct TrainOutcome {
  GamcBundle bundle;
  Dataset dataset;
  SplitIndices split;
};

inline TrainOutcome train_with_split(const PipelineConfig& cfg, const Logger& logger = {}) {
  detail::run_stage("config", [&] {
    cfg.validate();
    return 0;
  });
  TrainOutcome out;
  out.dataset = detail::run_stage("dataset", [&] {
    auto ds = resolve_dataset(cfg);
    ds.validate();
    return ds;
  });
  detail::log(logger, "dataset: " + std::to_string(out.dataset.frames.size()) + " frames from " + out.dataset.provenance);
  out.split = stratified_split(out.dataset, cfg.split.test_fraction, cfg.split.seed);
  const auto train_ds = subset(out.dataset, out.split.train);
  const auto features = detail::run_stage("features", [&] { return extract_features(train_ds, cfg, logger); });
  std::vector<int> labels;
  std::vector<int> snr;
  for (const auto& f : train_ds.frames) {
    labels.push_back(f.label);
    snr.push_back(f.snr_db);
  }
  out.bundle = train_from_features(cfg, features, labels, snr, out.dataset.label_table,
                                   static_cast<int>(out.dataset.frame_length()), logger);
  return out;
}

inline GamcBundle train_pipeline(const PipelineConfig& cfg, const Logger& logger = {}) {
  return train_with_split(cfg, logger).bundle;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

// Class probabilities per row, in bundle label order. Reads features only.
inline Matrix predict_features(const GamcBundle& b, const Matrix& x) {
  if (x.cols() != b.moe.n_features) {
    throw DataError("bundle expects " + std::to_string(b.moe.n_features) + " features, got " + std::to_string(x.cols()));
  }
  Matrix p(x.rows(), b.moe.n_classes());
  parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
    const auto r = ensemble_predict(b.moe, row_span(x, static_cast<Eigen::Index>(i)));
    std::copy(r.begin(), r.end(), p.data() + static_cast<Eigen::Index>(i) * p.cols());
  });
  return p;
}

inline Matrix predict(const GamcBundle& b, const Dataset& ds) {
  return predict_features(b, extract_features(ds, b.config).x);
}

// Maps dataset labels onto the bundle's label table by name.
inline std::vector<int> map_labels(const GamcBundle& b, const Dataset& ds) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < b.moe.label_table.size(); ++i) index[b.moe.label_table[i]] = static_cast<int>(i);
  std::vector<int> out;
  out.reserve(ds.frames.size());
  for (const auto& f : ds.frames) {
    const auto& name = ds.label_table.at(static_cast<std::size_t>(f.label));
    const auto it = index.find(name);
    if (it == index.end()) throw DataError("dataset class '" + name + "' is not in the bundle's label table");
    out.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Complexity accounting
// ---------------------------------------------------------------------------

struct ComplexityRow {
  std::string name;
  double parameters = 0.0;
  double flops = 0.0;  // per frame
};

struct ComplexityReport {
  std::vector<ComplexityRow> rows;  // Feature Extraction, LNT, MoE, Total
  double lnt_parameters_per_expert = 0.0;
  std::string convention;

  const ComplexityRow& row(const std::string& name) const {
    for (const auto& r : rows) {
      if (r.name == name) return r;
    }
    throw DataError("no complexity row named " + name);
  }
};

inline double tree_parameters(const BoostedEnsemble& m) {
  double p = 0.0;
  for (const auto& t : m.trees) p += 2.0 * static_cast<double>(t.internal_count()) + static_cast<double>(t.leaf_count());
  return p;
}

inline double tree_flops(const BoostedEnsemble& m) {
  double f = 0.0;
  for (const auto& t : m.trees) f += static_cast<double>(t.depth());
  return f;
}

// Per-frame feature-extraction FLOPs for frame length n (see the report convention text).
inline double feature_extraction_flops(const PipelineConfig& cfg, double n) {
  double f = 4.0 * n;  // normalization
  if (cfg.use_graph) {
    for (int metric = 0; metric < 2; ++metric) {
      f += 4.0 * n * n;  // pairwise distances
      for (int k : cfg.graph.k_set) {
        f += 4.0 * n * k;                      // kernel weights
        f += 6.0 * n * n;                      // combine, degree, normalized Laplacian
        f += 4.0 * n * n * n / 3.0 + 9.0 * n * n;  // symmetric eigenvalues
        f += 20.0 * n;                         // spectral descriptors
      }
    }
  }
  if (cfg.use_stat) {
    const auto& s = cfg.stat;
    f += 3.0 * 8.0 * n * n;  // three direct DFTs
    double rot = 0.0;
    for (int k : s.rotational_orders) rot += 6.0 * k + 2.0;
    f += (40.0 + rot) * n;                                                    // amplitude, phase, moments
    f += 30.0 * n;                                                            // cumulants
    f += 12.0 * n * static_cast<double>(s.cyclic_alphas.size() * s.cyclic_lags.size());  // cyclic autocorrelation
    f += 10.0 * n;                                                            // spectrum summaries
  }
  return f;
}

inline ComplexityReport complexity_report(const GamcBundle& b) {
  ComplexityReport r;
  r.convention =
      "multiply-add = 2 FLOPs; tree parameters = 2 per internal node + 1 per leaf; tree FLOPs = depth "
      "comparisons per tree; LNT parameters = (size+1)*C and FLOPs = 2*size*C per subspace; feature "
      "extraction: eigenvalues 4N^3/3 + 9N^2, direct DFT 8N^2; the auxiliary selector is excluded";
  const double n = b.frame_length;
  const double c = b.moe.n_classes();
  ComplexityRow fe{"Feature Extraction", 0.0, feature_extraction_flops(b.config, n)};
  ComplexityRow lnt{"LNT", 0.0, 0.0};
  ComplexityRow moe{"MoE", tree_parameters(b.moe.cqi.gate), tree_flops(b.moe.cqi.gate)};
  for (const auto& e : b.moe.experts) {
    double per_expert = 0.0;
    for (int s : e.lnt.spec.sizes) {
      per_expert += (s + 1.0) * c;
      lnt.flops += 2.0 * s * c;
    }
    lnt.parameters += per_expert;
    r.lnt_parameters_per_expert = per_expert;
    moe.parameters += tree_parameters(e.model);
    moe.flops += tree_flops(e.model);
  }
  const double q = static_cast<double>(b.moe.experts.size());
  moe.flops += 2.0 * q * c;  // weighted sum of expert posteriors
  ComplexityRow total{"Total", fe.parameters + lnt.parameters + moe.parameters, fe.flops + lnt.flops + moe.flops};
  r.rows = {fe, lnt, moe, total};
  return r;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
  std::vector<std::vector<std::size_t>> counts;  // [true][predicted]

  explicit ConfusionMatrix(std::size_t classes = 0) : counts(classes, std::vector<std::size_t>(classes, 0)) {}

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
    return t;
  }
};

struct AccuracyCell {
  double key_lo = 0.0;  // SNR, or band lower edge
  double key_hi = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;

  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

inline constexpr std::array<int, 3> kConfusionSnrs = {-20, 0, 18};

struct EvalReport {
  std::vector<std::string> label_table;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::vector<AccuracyCell> per_snr;   // ascending SNR, key_lo = key_hi = SNR
  std::vector<AccuracyCell> per_band;  // one per bundle band
  ConfusionMatrix confusion;
  std::map<int, ConfusionMatrix> confusion_at_snr;  // representative SNRs that are present
  std::vector<int> predictions;
  ComplexityReport complexity;

  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }

  double accuracy_at(int snr) const {
    for (const auto& c : per_snr) {
      if (static_cast<int>(c.key_lo) == snr) return c.accuracy();
    }
    throw DataError("no frames at " + std::to_string(snr) + " dB");
  }
};

// `labels` index the bundle label table; `snr_db` only groups results and never reaches the model.
inline EvalReport evaluate_probabilities(const GamcBundle& b, const Matrix& probs, std::span<const int> labels,
                                         std::span<const int> snr_db) {
  const auto n = static_cast<std::size_t>(probs.rows());
  if (n == 0) throw DataError("cannot evaluate an empty dataset");
  if (labels.size() != n || snr_db.size() != n) throw DataError("label/SNR counts do not match row count");
  const auto classes = static_cast<std::size_t>(b.moe.n_classes());
  EvalReport r;
  r.label_table = b.moe.label_table;
  r.confusion = ConfusionMatrix(classes);
  const auto& bands = b.moe.cqi.bands;
  for (const auto& band : bands.bands()) r.per_band.push_back(AccuracyCell{band.lo, band.hi, 0, 0});
  std::map<int, AccuracyCell> snr_cells;
  for (std::size_t i = 0; i < n; ++i) {
    const int pred = static_cast<int>(argmax(row_span(probs, static_cast<Eigen::Index>(i))));
    const int y = labels[i];
    const bool ok = pred == y;
    r.predictions.push_back(pred);
    ++r.total;
    r.correct += ok;
    ++r.confusion.counts[static_cast<std::size_t>(y)][static_cast<std::size_t>(pred)];
    auto& cell = snr_cells[snr_db[i]];
    cell.key_lo = cell.key_hi = snr_db[i];
    ++cell.total;
    cell.correct += ok;
    const auto& bl = bands.bands();
    if (snr_db[i] >= bl.front().lo && snr_db[i] <= bl.back().hi) {
      auto& bc = r.per_band[snr_band_index(snr_db[i], bands)];
      ++bc.total;
      bc.correct += ok;
    }
    if (std::find(kConfusionSnrs.begin(), kConfusionSnrs.end(), snr_db[i]) != kConfusionSnrs.end()) {
      auto it = r.confusion_at_snr.try_emplace(snr_db[i], classes).first;
      ++it->second.counts[static_cast<std::size_t>(y)][static_cast<std::size_t>(pred)];
    }
  }
  for (auto& [_, cell] : snr_cells) r.per_snr.push_back(cell);
  r.complexity = complexity_report(b);
  return r;
}

inline EvalReport evaluate_features(const GamcBundle& b, const Matrix& x, std::span<const int> labels,
                                    std::span<const int> snr_db) {
  return evaluate_probabilities(b, predict_features(b, x), labels, snr_db);
}

inline EvalReport evaluate(const GamcBundle& b, const Dataset& ds, const Logger& logger = {}) {
  if (ds.frames.empty()) throw DataError("cannot evaluate an empty dataset");
  const auto labels = map_labels(b, ds);
  std::vector<int> snr;
  for (const auto& f : ds.frames) snr.push_back(f.snr_db);
  const auto features = detail::run_stage("features", [&] { return extract_features(ds, b.config, logger); });
  return evaluate_features(b, features.x, labels, snr);
}

// ---------------------------------------------------------------------------
// Bundle persistence:
//   "GAMB" | u32 version | u64 payload length | u64 FNV-1a of payload | payload
// ---------------------------------------------------------------------------

inline std::string encode_bundle(const GamcBundle& b) {
  io::BinaryWriter p;
  p.string(config_to_text(b.config));
  p.i32(b.frame_length);
  p.u32(static_cast<std::uint32_t>(b.feature_names.size()));
  for (const auto& name : b.feature_names) p.short_string(name);
  write_ensemble(p, b.selector);
  write_moe(p, b.moe);
  const auto payload = p.take();

  io::BinaryWriter w;
  w.bytes(kBundleMagic);
  w.u32(kBundleVersion);
  w.u64(payload.size());
  w.u64(io::fnv1a(payload));
  w.bytes(payload);
  return w.take();
}

inline GamcBundle decode_bundle(std::string_view bytes, const std::string& context = "bundle") {
  io::BinaryReader header(bytes, context);
  if (bytes.size() < kBundleMagic.size() || bytes.substr(0, kBundleMagic.size()) != kBundleMagic) {
    throw FormatError(FormatError::Kind::bad_magic, context + ": not a GAMC model bundle");
  }
  header.bytes(kBundleMagic.size());
  const auto version = header.u32();
  if (version != kBundleVersion) throw VersionError(kBundleVersion, version, context);
  const auto length = header.u64();
  const auto checksum = header.u64();
  const auto offset = bytes.size() - header.remaining();
  if (length > header.remaining()) {
    throw FormatError(FormatError::Kind::truncated, context + ": truncated bundle (" + std::to_string(header.remaining()) +
                                                        " of " + std::to_string(length) + " payload bytes)");
  }
  if (length < header.remaining()) throw FormatError(FormatError::Kind::corrupt, context + ": trailing bytes after payload");
  const auto payload = bytes.substr(offset, length);
  if (io::fnv1a(payload) != checksum) throw FormatError(FormatError::Kind::corrupt, context + ": checksum mismatch");

  io::BinaryReader r(payload, context);
  GamcBundle b;
  try {
    b.config = parse_config(r.string(), context + " config");
  } catch (const ConfigError& e) {
    throw FormatError(FormatError::Kind::corrupt, e.what());
  }
  b.frame_length = r.i32();
  const auto n_names = r.u32();
  for (std::uint32_t i = 0; i < n_names; ++i) b.feature_names.push_back(r.short_string());
  b.selector = read_ensemble(r);
  b.moe = read_moe(r);
  if (r.remaining() != 0) throw FormatError(FormatError::Kind::corrupt, context + ": unread payload bytes");
  if (static_cast<int>(b.feature_names.size()) != b.moe.n_features ||
      b.moe.n_features != static_cast<int>(b.config.feature_dim()) ||
      b.moe.cqi.n_inputs != static_cast<int>(b.config.graph_dim())) {
    throw FormatError(FormatError::Kind::corrupt, context + ": feature layout does not match the stored config");
  }
  return b;
}

inline void save_bundle(const GamcBundle& b, const std::string& path) { io::write_file(path, encode_bundle(b)); }

inline GamcBundle load_bundle(const std::string& path) { return decode_bundle(io::read_file(path), path); }

}  // namespace gamc
