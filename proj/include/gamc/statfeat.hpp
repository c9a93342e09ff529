#pragma once

// Statistical descriptors of a frame: amplitude, phase, frequency, higher-order
// cumulants, diagonal bispectrum and cyclic autocorrelation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gamc/error.hpp"
#include "gamc/frames.hpp"
#include "gamc/graphify.hpp"

namespace gamc {

struct StatConfig {
  int amp_bins = 32;
  double amp_max = 4.0;
  int phase_diff_bins = 32;
  int iq_bins = 8;  // per axis
  double iq_range = 3.0;
  int logmag_bins = 32;
  std::vector<double> tail_thresholds = {1.5, 2.0, 2.5};
  std::vector<double> cdf_quantiles = {0.1, 0.25, 0.5, 0.75, 0.9};
  std::vector<int> rotational_orders = {2, 4, 8};
  int phase_spectrum_bands = 8;
  int bispec_bins = 16;
  std::vector<double> cyclic_alphas = {0.125, 0.25, 0.5};
  std::vector<int> cyclic_lags = {1, 2, 4};

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(what);
    };
    need(amp_bins >= 2 && phase_diff_bins >= 2 && iq_bins >= 2 && logmag_bins >= 2 && bispec_bins >= 2 &&
             phase_spectrum_bands >= 2,
         "all stat bin counts must be >= 2");
    need(amp_max > 0.0 && iq_range > 0.0, "histogram ranges must be positive");
    for (double t : tail_thresholds) need(t > 0.0, "tail thresholds must be positive");
    for (double q : cdf_quantiles) need(q >= 0.0 && q <= 1.0, "cdf quantiles must lie in [0, 1]");
    for (int k : rotational_orders) need(k >= 1, "rotational orders must be >= 1");
    for (double a : cyclic_alphas) need(std::isfinite(a), "cyclic alphas must be finite");
    for (int l : cyclic_lags) need(l >= 0, "cyclic lags must be >= 0");
  }

  std::size_t amplitude_dim() const {
    return static_cast<std::size_t>(amp_bins) + cdf_quantiles.size() + tail_thresholds.size() +
           static_cast<std::size_t>(iq_bins * iq_bins);
  }
  // R, M_k, phase-difference histogram, circular mean, circular variance, band energies.
  std::size_t phase_dim() const {
    return 1 + rotational_orders.size() + static_cast<std::size_t>(phase_diff_bins) + 2 +
           static_cast<std::size_t>(phase_spectrum_bands);
  }
  std::size_t frequency_dim() const { return static_cast<std::size_t>(logmag_bins) + 2; }
  static constexpr std::size_t cumulant_dim() { return 10; }
  std::size_t bispectrum_dim() const { return static_cast<std::size_t>(bispec_bins); }
  std::size_t cyclo_dim() const { return cyclic_alphas.size() * cyclic_lags.size(); }

  std::size_t dimension() const {
    return amplitude_dim() + phase_dim() + frequency_dim() + cumulant_dim() + bispectrum_dim() + cyclo_dim();
  }
};

namespace detail {

inline std::size_t bin_of(double v, double lo, double hi, int bins) {
  if (!(v > lo)) return 0;
  if (v >= hi) return static_cast<std::size_t>(bins - 1);
  const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
  return std::min(b, static_cast<std::size_t>(bins - 1));
}

// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& s, double q) {
  if (s.empty()) return 0.0;
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

inline double phase_of(cd v) { return (v == cd(0.0, 0.0)) ? 0.0 : std::arg(v); }

}  // namespace detail

// Direct DFT, X(f) = sum_n x[n] e^{-j 2 pi f n / N}.
inline std::vector<cd> dft(std::span<const cd> x) {
  const std::size_t n = x.size();
  std::vector<cd> tw(n);
  for (std::size_t k = 0; k < n; ++k) {
    tw[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  }
  std::vector<cd> out(n);
  for (std::size_t f = 0; f < n; ++f) {
    cd acc = 0.0;
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * tw[idx];
      idx += f;
      if (idx >= n) idx -= n;
    }
    out[f] = acc;
  }
  return out;
}

inline std::vector<double> amplitude_features(std::span<const cd> x, const StatConfig& cfg = {}) {
  const std::size_t n = x.size();
  std::vector<double> out;
  out.reserve(cfg.amplitude_dim());
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = std::abs(x[i]);
  const double inv = n ? 1.0 / static_cast<double>(n) : 0.0;

  std::vector<double> hist(static_cast<std::size_t>(cfg.amp_bins), 0.0);
  for (double v : r) hist[detail::bin_of(v, 0.0, cfg.amp_max, cfg.amp_bins)] += inv;
  out.insert(out.end(), hist.begin(), hist.end());

  auto sorted = r;
  std::sort(sorted.begin(), sorted.end());
  for (double q : cfg.cdf_quantiles) out.push_back(detail::quantile_sorted(sorted, q));

  for (double tau : cfg.tail_thresholds) {
    std::size_t c = 0;
    for (double v : r) c += v > tau ? 1 : 0;
    out.push_back(static_cast<double>(c) * inv);
  }

  const auto nb = static_cast<std::size_t>(cfg.iq_bins);
  std::vector<double> iq(nb * nb, 0.0);
  for (const auto& v : x) {
    const auto bi = detail::bin_of(v.real(), -cfg.iq_range, cfg.iq_range, cfg.iq_bins);
    const auto bq = detail::bin_of(v.imag(), -cfg.iq_range, cfg.iq_range, cfg.iq_bins);
    iq[bi * nb + bq] += inv;
  }
  out.insert(out.end(), iq.begin(), iq.end());
  return out;
}

inline std::vector<double> phase_features(std::span<const cd> x, const StatConfig& cfg = {}) {
  using std::numbers::pi;
  const std::size_t n = x.size();
  std::vector<double> out;
  out.reserve(cfg.phase_dim());
  const double inv = n ? 1.0 / static_cast<double>(n) : 0.0;

  std::vector<double> theta(n);
  cd unit_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = detail::phase_of(x[i]);
    unit_sum += std::polar(1.0, theta[i]);
  }
  out.push_back(std::abs(unit_sum) * inv);

  for (int k : cfg.rotational_orders) {
    cd acc = 0.0;
    for (const auto& v : x) {
      cd p = 1.0;
      for (int e = 0; e < k; ++e) p *= v;
      acc += p;
    }
    out.push_back(std::abs(acc) * inv);
  }

  std::vector<cd> diffs;
  diffs.reserve(n > 0 ? n - 1 : 0);
  std::vector<double> hist(static_cast<std::size_t>(cfg.phase_diff_bins), 0.0);
  cd diff_sum = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = wrap_phase(theta[i] - theta[i - 1]);
    diffs.emplace_back(d, 0.0);
    diff_sum += std::polar(1.0, d);
  }
  const double dinv = diffs.empty() ? 0.0 : 1.0 / static_cast<double>(diffs.size());
  for (const auto& d : diffs) hist[detail::bin_of(d.real(), -pi, pi, cfg.phase_diff_bins)] += dinv;
  out.insert(out.end(), hist.begin(), hist.end());
  const double conc = std::abs(diff_sum) * dinv;
  out.push_back(conc > 0.0 ? std::arg(diff_sum) : 0.0);
  out.push_back(1.0 - conc);

  // Band energies of the phase-difference spectrum over frequencies [0, L/2].
  std::vector<double> bands(static_cast<std::size_t>(cfg.phase_spectrum_bands), 0.0);
  if (!diffs.empty()) {
    const auto spec = dft(diffs);
    const std::size_t len = diffs.size();
    const std::size_t half = len / 2 + 1;
    const double norm = 1.0 / (static_cast<double>(len) * static_cast<double>(len));
    for (std::size_t f = 0; f < half; ++f) {
      const auto b = std::min(f * bands.size() / half, bands.size() - 1);
      bands[b] += std::norm(spec[f]) * norm;
    }
  }
  out.insert(out.end(), bands.begin(), bands.end());
  return out;
}

inline std::vector<double> frequency_features(std::span<const cd> x, const StatConfig& cfg = {}) {
  std::vector<double> out;
  out.reserve(cfg.frequency_dim());
  const auto spec = dft(x);
  const std::size_t n = spec.size();
  std::vector<double> logmag(n);
  std::vector<double> power(n);
  double total = 0.0;
  double peak = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    logmag[f] = std::log(std::abs(spec[f]) + 1e-12);
    power[f] = std::norm(spec[f]);
    total += power[f];
    peak = std::max(peak, power[f]);
  }
  std::vector<double> hist(static_cast<std::size_t>(cfg.logmag_bins), 0.0);
  if (n > 0) {
    const auto [lo_it, hi_it] = std::minmax_element(logmag.begin(), logmag.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const double inv = 1.0 / static_cast<double>(n);
    for (double v : logmag) {
      const std::size_t b = hi > lo ? detail::bin_of(v, lo, hi, cfg.logmag_bins) : 0;
      hist[b] += inv;
    }
  }
  out.insert(out.end(), hist.begin(), hist.end());
  const double mean = n ? total / static_cast<double>(n) : 0.0;
  out.push_back(mean > 0.0 ? peak / mean : 0.0);
  double h = 0.0;
  if (total > 0.0) {
    for (double p : power) {
      const double q = p / total;
      if (q > 0.0) h -= q * std::log(q);
    }
  }
  out.push_back(h);
  return out;
}

struct Cumulants {
  cd c20, c21, c40, c41, c42, c63;
};

// Sample cumulants from raw (non-centered) moments.
inline Cumulants cumulants(std::span<const cd> x) {
  const double n = static_cast<double>(x.size());
  cd m20 = 0.0, m40 = 0.0, m41 = 0.0;
  double m21 = 0.0, m42 = 0.0, m63 = 0.0;
  for (const auto& v : x) {
    const cd v2 = v * v;
    const double p = std::norm(v);
    m20 += v2;
    m21 += p;
    m40 += v2 * v2;
    m41 += v2 * p;  // x^3 x* = x^2 |x|^2
    m42 += p * p;
    m63 += p * p * p;
  }
  if (n > 0) {
    m20 /= n;
    m21 /= n;
    m40 /= n;
    m41 /= n;
    m42 /= n;
    m63 /= n;
  }
  Cumulants c;
  c.c20 = m20;
  c.c21 = m21;
  c.c40 = m40 - 3.0 * m20 * m20;
  c.c41 = m41 - 3.0 * m20 * m21;
  c.c42 = m42 - std::norm(m20) - 2.0 * m21 * m21;
  c.c63 = m63 - 9.0 * m42 * m21 + 12.0 * std::norm(m20) * m21 + 12.0 * m21 * m21 * m21;
  return c;
}

// |C20|, |C21|, |C40|, |C41|, |C42|, |C63|, Re/Im C20, Re/Im C40.
inline std::vector<double> cumulant_features(std::span<const cd> x) {
  const auto c = cumulants(x);
  return {std::abs(c.c20), std::abs(c.c21), std::abs(c.c40), std::abs(c.c41), std::abs(c.c42),
          std::abs(c.c63), c.c20.real(),     c.c20.imag(),     c.c40.real(),     c.c40.imag()};
}

// |X(f) X(f) X*(2f)| averaged over `bispec_bins` frequency bins, normalized by (sum |X|^2)^1.5.
inline std::vector<double> bispectrum_features(std::span<const cd> x, const StatConfig& cfg = {}) {
  const auto spec = dft(x);
  const std::size_t n = spec.size();
  const auto bins = static_cast<std::size_t>(cfg.bispec_bins);
  std::vector<double> acc(bins, 0.0);
  std::vector<double> count(bins, 0.0);
  double energy = 0.0;
  for (const auto& v : spec) energy += std::norm(v);
  const double norm = energy > 0.0 ? 1.0 / std::pow(energy, 1.5) : 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    const cd b = spec[f] * spec[f] * std::conj(spec[(2 * f) % n]);
    const std::size_t k = std::min(f * bins / n, bins - 1);
    acc[k] += std::abs(b) * norm;
    count[k] += 1.0;
  }
  for (std::size_t k = 0; k < bins; ++k) {
    if (count[k] > 0) acc[k] /= count[k];
  }
  return acc;
}

// |(1/N) sum_{n >= tau} x[n] x*[n - tau] e^{-j 2 pi alpha n}|, alpha-major over the configured grid.
inline std::vector<double> cyclo_features(std::span<const cd> x, const StatConfig& cfg = {}) {
  const std::size_t n = x.size();
  std::vector<double> out;
  out.reserve(cfg.cyclo_dim());
  for (double alpha : cfg.cyclic_alphas) {
    for (int lag : cfg.cyclic_lags) {
      cd acc = 0.0;
      for (std::size_t t = static_cast<std::size_t>(lag); t < n; ++t) {
        const double arg = -2.0 * std::numbers::pi * alpha * static_cast<double>(t);
        acc += x[t] * std::conj(x[t - static_cast<std::size_t>(lag)]) * std::polar(1.0, arg);
      }
      out.push_back(n ? std::abs(acc) / static_cast<double>(n) : 0.0);
    }
  }
  return out;
}

// Slot names "s.{family}.{slot}" in extraction order.
inline std::vector<std::string> stat_feature_names(const StatConfig& cfg = {}) {
  std::vector<std::string> names;
  names.reserve(cfg.dimension());
  auto add = [&](const std::string& family, const std::string& slot) {
    names.push_back("s." + family + "." + slot);
  };
  for (int i = 0; i < cfg.amp_bins; ++i) add("amp", "hist" + std::to_string(i));
  for (std::size_t i = 0; i < cfg.cdf_quantiles.size(); ++i) add("amp", "q" + std::to_string(i));
  for (std::size_t i = 0; i < cfg.tail_thresholds.size(); ++i) add("amp", "tail" + std::to_string(i));
  for (int i = 0; i < cfg.iq_bins; ++i) {
    for (int j = 0; j < cfg.iq_bins; ++j) add("amp", "iq" + std::to_string(i) + "_" + std::to_string(j));
  }
  add("phase", "R");
  for (int k : cfg.rotational_orders) add("phase", "M" + std::to_string(k));
  for (int i = 0; i < cfg.phase_diff_bins; ++i) add("phase", "dhist" + std::to_string(i));
  add("phase", "dmean");
  add("phase", "dvar");
  for (int i = 0; i < cfg.phase_spectrum_bands; ++i) add("phase", "dspec" + std::to_string(i));
  for (int i = 0; i < cfg.logmag_bins; ++i) add("freq", "loghist" + std::to_string(i));
  add("freq", "papr");
  add("freq", "entropy");
  for (const char* s : {"C20", "C21", "C40", "C41", "C42", "C63", "C20re", "C20im", "C40re", "C40im"}) {
    add("hoc", s);
  }
  for (int i = 0; i < cfg.bispec_bins; ++i) add("bispec", "b" + std::to_string(i));
  for (std::size_t a = 0; a < cfg.cyclic_alphas.size(); ++a) {
    for (std::size_t l = 0; l < cfg.cyclic_lags.size(); ++l) {
      add("cyclo", "a" + std::to_string(a) + "t" + std::to_string(cfg.cyclic_lags[l]));
    }
  }
  return names;
}

// All families concatenated in declared order: amplitude, phase, frequency, cumulants,
// bispectrum, cyclic autocorrelation. Expects a normalized frame.
inline std::vector<double> extract_stat_features(std::span<const cd> x, const StatConfig& cfg = {}) {
  cfg.validate();
  std::vector<double> out;
  out.reserve(cfg.dimension());
  for (auto part : {amplitude_features(x, cfg), phase_features(x, cfg), frequency_features(x, cfg),
                    cumulant_features(x), bispectrum_features(x, cfg), cyclo_features(x, cfg)}) {
    out.insert(out.end(), part.begin(), part.end());
  }
  for (double& v : out) {
    if (!std::isfinite(v)) v = 0.0;
  }
  return out;
}

inline std::vector<double> extract_stat_features(const IqFrame& frame, const StatConfig& cfg = {}) {
  return extract_stat_features(std::span<const cd>(frame.samples), cfg);
}

}  // namespace gamc
