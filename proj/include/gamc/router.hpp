#pragma once

// SNR-aware soft routing: a boosted gate over graph features assigns each frame a weight per
// SNR band, and the class posterior is the weighted sum of per-band expert posteriors.

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gamc/bands.hpp"
#include "gamc/error.hpp"
#include "gamc/gbt.hpp"
#include "gamc/io.hpp"
#include "gamc/linalg.hpp"
#include "gamc/lnt.hpp"

namespace gamc {

struct CqiModel {
  BoostedEnsemble gate;  // n_classes == bands.size(); unused when there is a single band
  SnrBands bands;
  int n_inputs = 0;

  std::size_t q() const { return bands.size(); }
};

inline std::vector<int> band_labels(std::span<const int> snr_db, const SnrBands& bands) {
  std::vector<int> out;
  out.reserve(snr_db.size());
  for (int s : snr_db) out.push_back(static_cast<int>(snr_band_index(s, bands)));
  return out;
}

inline CqiModel fit_cqi(const Matrix& graph_features, std::span<const int> snr_db, const SnrBands& bands,
                        const TrainParams& params = cqi_params()) {
  if (static_cast<std::size_t>(graph_features.rows()) != snr_db.size()) {
    throw DataError("CQI: SNR label count does not match row count");
  }
  if (graph_features.rows() == 0) throw DataError("CQI: no training rows");
  CqiModel m;
  m.bands = bands;
  m.n_inputs = static_cast<int>(graph_features.cols());
  const auto target = band_labels(snr_db, bands);
  std::vector<std::size_t> count(bands.size(), 0);
  for (int b : target) ++count[static_cast<std::size_t>(b)];
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] == 0) {
      throw DataError("CQI: band " + std::to_string(b) + " [" + std::to_string(bands[b].lo) + ", " +
                      std::to_string(bands[b].hi) + "] dB has no training rows");
    }
  }
  if (bands.size() == 1) {
    m.gate = constant_ensemble(1, m.n_inputs);
    return m;
  }
  m.gate = fit(graph_features, target, static_cast<int>(bands.size()), params);
  return m;
}

inline std::vector<double> cqi_weights(const CqiModel& m, std::span<const double> graph_features) {
  if (static_cast<int>(graph_features.size()) != m.n_inputs) {
    throw DataError("CQI expects " + std::to_string(m.n_inputs) + " graph features, got " +
                    std::to_string(graph_features.size()));
  }
  if (m.q() == 1) return {1.0};
  return predict_proba(m.gate, graph_features);
}

struct Expert {
  int band = 0;
  LntBlock lnt;
  BoostedEnsemble model;
};

inline std::vector<double> expert_predict(const Expert& e, std::span<const double> features) {
  const auto z = augment(e.lnt, features);
  return predict_proba(e.model, z);
}

// Fits the expert's LNT block, then its classifier on the augmented features.
inline Expert fit_expert(int band, const Matrix& x, std::span<const int> labels, int n_classes,
                         const SubspaceSpec& spec, const TrainParams& params, const ProjectorOptions& lnt_opt) {
  Expert e;
  e.band = band;
  e.lnt = fit_lnt_block(x, labels, n_classes, spec, lnt_opt);
  const Matrix z = augment(e.lnt, x);
  e.model = fit(z, labels, n_classes, params);
  return e;
}

struct MoeModel {
  CqiModel cqi;
  std::vector<Expert> experts;
  std::vector<std::string> label_table;
  int n_features = 0;  // raw feature dimension; the first cqi.n_inputs entries are graph features

  int n_classes() const { return static_cast<int>(label_table.size()); }
};

// P = sum_i w_i P_i.
inline std::vector<double> mix_experts(std::span<const double> w, const std::vector<std::vector<double>>& probs) {
  if (w.size() != probs.size() || probs.empty()) throw DataError("weight count does not match expert count");
  std::vector<double> out(probs.front().size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i].size() != out.size()) throw DataError("experts disagree on class count");
    if (w[i] == 0.0) continue;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[i] * probs[i][c];
  }
  return out;
}

// Zeroes expert `drop` and renormalizes; falls back to uniform weights over the remaining
// experts when they carried no mass.
inline std::vector<double> drop_expert(std::span<const double> w, std::size_t drop) {
  if (drop >= w.size()) throw DataError("expert index out of range");
  if (w.size() < 2) throw DataError("cannot drop the only expert");
  std::vector<double> out(w.begin(), w.end());
  out[drop] = 0.0;
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  if (sum > 0.0 && std::isfinite(sum)) {
    for (double& v : out) v /= sum;
  } else {
    const double u = 1.0 / static_cast<double>(w.size() - 1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i == drop ? 0.0 : u;
  }
  return out;
}

inline std::vector<std::vector<double>> expert_outputs(const MoeModel& m, std::span<const double> features) {
  std::vector<std::vector<double>> probs;
  probs.reserve(m.experts.size());
  for (const auto& e : m.experts) probs.push_back(expert_predict(e, features));
  return probs;
}

inline std::vector<double> routing_weights(const MoeModel& m, std::span<const double> features) {
  if (static_cast<int>(features.size()) != m.n_features) {
    throw DataError("model expects " + std::to_string(m.n_features) + " features, got " + std::to_string(features.size()));
  }
  return cqi_weights(m.cqi, features.first(static_cast<std::size_t>(m.cqi.n_inputs)));
}

// Experts with zero weight are skipped.
inline std::vector<double> ensemble_predict(const MoeModel& m, std::span<const double> features,
                                            std::span<const double> w) {
  if (w.size() != m.experts.size()) throw DataError("weight count does not match expert count");
  std::vector<std::vector<double>> probs(m.experts.size(), std::vector<double>(static_cast<std::size_t>(m.n_classes()), 0.0));
  for (std::size_t i = 0; i < m.experts.size(); ++i) {
    if (w[i] != 0.0) probs[i] = expert_predict(m.experts[i], features);
  }
  return mix_experts(w, probs);
}

inline std::vector<double> ensemble_predict(const MoeModel& m, std::span<const double> features) {
  const auto w = routing_weights(m, features);
  return ensemble_predict(m, features, w);
}

inline void write_moe(io::BinaryWriter& w, const MoeModel& m) {
  w.i32(m.n_features);
  w.u32(static_cast<std::uint32_t>(m.label_table.size()));
  for (const auto& name : m.label_table) w.short_string(name);
  w.u32(static_cast<std::uint32_t>(m.cqi.bands.size()));
  for (const auto& b : m.cqi.bands.bands()) {
    w.f64(b.lo);
    w.f64(b.hi);
  }
  w.i32(m.cqi.n_inputs);
  write_ensemble(w, m.cqi.gate);
  w.u32(static_cast<std::uint32_t>(m.experts.size()));
  for (const auto& e : m.experts) {
    w.i32(e.band);
    write_lnt_block(w, e.lnt);
    write_ensemble(w, e.model);
  }
}

inline MoeModel read_moe(io::BinaryReader& r) {
  auto corrupt = [&](const std::string& what) {
    return FormatError(FormatError::Kind::corrupt, r.context() + ": " + what);
  };
  MoeModel m;
  m.n_features = r.i32();
  const auto n_labels = r.u32();
  for (std::uint32_t i = 0; i < n_labels; ++i) m.label_table.push_back(r.short_string());
  const auto n_bands = r.u32();
  if (n_bands == 0 || n_bands > 255) throw corrupt("bad band count");
  std::vector<SnrBand> bands;
  for (std::uint32_t i = 0; i < n_bands; ++i) {
    SnrBand b;
    b.lo = r.f64();
    b.hi = r.f64();
    bands.push_back(b);
  }
  try {
    m.cqi.bands = SnrBands(std::move(bands));
  } catch (const ConfigError& e) {
    throw corrupt(e.what());
  }
  m.cqi.n_inputs = r.i32();
  m.cqi.gate = read_ensemble(r);
  const auto n_experts = r.u32();
  if (n_experts != n_bands) throw corrupt("expert count does not match band count");
  for (std::uint32_t i = 0; i < n_experts; ++i) {
    Expert e;
    e.band = r.i32();
    e.lnt = read_lnt_block(r);
    e.model = read_ensemble(r);
    if (e.lnt.input_dim != m.n_features || e.lnt.n_classes != m.n_classes() || e.model.n_classes != m.n_classes() ||
        e.model.n_features != e.lnt.output_dim()) {
      throw corrupt("expert " + std::to_string(i) + " has inconsistent dimensions");
    }
    m.experts.push_back(std::move(e));
  }
  if (m.cqi.n_inputs < 0 || m.cqi.n_inputs > m.n_features || m.cqi.gate.n_features != m.cqi.n_inputs ||
      (n_bands > 1 && m.cqi.gate.n_classes != static_cast<int>(n_bands))) {
    throw corrupt("CQI dimensions are inconsistent");
  }
  return m;
}

}  // namespace gamc
