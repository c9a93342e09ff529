#pragma once

// I/Q frame data model, synthetic signal generation with AWGN, per-frame normalization
// and the portable binary dataset format.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gamc/error.hpp"
#include "gamc/io.hpp"
#include "gamc/rng.hpp"

namespace gamc {

using cd = std::complex<double>;

// Enumerators are ordered by the ascending lexicographic order of the canonical names,
// so the underlying value is the stable class index.
enum class ModulationScheme : std::uint8_t {
  psk8 = 0,
  am_dsb,
  am_ssb,
  bpsk,
  cpfsk,
  gfsk,
  pam4,
  qam16,
  qam64,
  qpsk,
  wbfm,
};

inline constexpr std::size_t kSchemeCount = 11;

inline constexpr std::array<std::string_view, kSchemeCount> kSchemeNames = {
    "8PSK", "AM-DSB", "AM-SSB", "BPSK", "CPFSK", "GFSK", "PAM4", "QAM16", "QAM64", "QPSK", "WBFM"};

inline std::string_view scheme_name(ModulationScheme s) {
  return kSchemeNames.at(static_cast<std::size_t>(s));
}

inline std::size_t scheme_index(ModulationScheme s) { return static_cast<std::size_t>(s); }

inline std::optional<ModulationScheme> parse_scheme(std::string_view name) {
  for (std::size_t i = 0; i < kSchemeCount; ++i) {
    if (kSchemeNames[i] == name) return static_cast<ModulationScheme>(i);
  }
  return std::nullopt;
}

inline std::array<ModulationScheme, kSchemeCount> all_schemes() {
  std::array<ModulationScheme, kSchemeCount> out{};
  for (std::size_t i = 0; i < kSchemeCount; ++i) out[i] = static_cast<ModulationScheme>(i);
  return out;
}

inline std::vector<std::string> canonical_label_table() {
  return {kSchemeNames.begin(), kSchemeNames.end()};
}

inline bool is_analog(ModulationScheme s) {
  return s == ModulationScheme::am_dsb || s == ModulationScheme::am_ssb ||
         s == ModulationScheme::wbfm;
}

struct IqFrame {
  std::vector<cd> samples;
  int label = 0;  // index into the owning dataset's label table
  int snr_db = 0;

  std::size_t size() const noexcept { return samples.size(); }
};

struct Dataset {
  std::vector<IqFrame> frames;
  std::vector<std::string> label_table = canonical_label_table();
  std::string provenance;

  std::size_t frame_length() const noexcept {
    return frames.empty() ? 0 : frames.front().samples.size();
  }

  // Throws DataError when frames disagree in length or carry out-of-range labels.
  void validate() const {
    const std::size_t n = frame_length();
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (frames[i].samples.size() != n) {
        throw DataError("frame " + std::to_string(i) + " has length " +
                        std::to_string(frames[i].samples.size()) + ", expected " +
                        std::to_string(n));
      }
      if (frames[i].label < 0 || static_cast<std::size_t>(frames[i].label) >= label_table.size()) {
        throw DataError("frame " + std::to_string(i) + " label index " +
                        std::to_string(frames[i].label) + " outside label table of size " +
                        std::to_string(label_table.size()));
      }
    }
  }
};

struct SynthConfig {
  int samples_per_symbol = 8;
  double fsk_modulation_index = 0.5;
  double gfsk_bt = 0.35;
  // Analog source: equal-power tone mixture, frequencies in cycles/sample.
  std::vector<double> tone_frequencies = {0.01, 0.023, 0.037};
  // Peak-ish WBFM deviation in cycles/sample per unit source amplitude.
  double fm_deviation = 0.08;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (samples_per_symbol < 2) throw ConfigError("samples_per_symbol must be >= 2");
    if (!(fsk_modulation_index > 0.0) || !std::isfinite(fsk_modulation_index)) {
      throw ConfigError("fsk_modulation_index must be positive");
    }
    if (!(gfsk_bt > 0.0) || !std::isfinite(gfsk_bt)) throw ConfigError("gfsk_bt must be positive");
    if (tone_frequencies.empty()) throw ConfigError("analog source needs at least one tone");
    for (double f : tone_frequencies) {
      if (!(f > 0.0 && f < 0.5)) throw ConfigError("tone frequencies must lie in (0, 0.5)");
    }
    if (!(fm_deviation > 0.0 && fm_deviation < 0.5)) {
      throw ConfigError("fm_deviation must lie in (0, 0.5)");
    }
  }
};

// Unit-average-power constellation for a linearly modulated digital scheme.
inline std::vector<cd> constellation(ModulationScheme s) {
  using std::numbers::pi;
  std::vector<cd> pts;
  switch (s) {
    case ModulationScheme::bpsk:
      pts = {{1, 0}, {-1, 0}};
      break;
    case ModulationScheme::qpsk: {
      const double a = 1.0 / std::sqrt(2.0);
      pts = {{a, a}, {-a, a}, {-a, -a}, {a, -a}};
      break;
    }
    case ModulationScheme::psk8:
      for (int k = 0; k < 8; ++k) pts.push_back(std::polar(1.0, 2.0 * pi * k / 8.0));
      break;
    case ModulationScheme::pam4: {
      const double a = 1.0 / std::sqrt(5.0);
      pts = {{-3 * a, 0}, {-a, 0}, {a, 0}, {3 * a, 0}};
      break;
    }
    case ModulationScheme::qam16:
    case ModulationScheme::qam64: {
      const int m = s == ModulationScheme::qam16 ? 4 : 8;
      const double scale = 1.0 / std::sqrt(s == ModulationScheme::qam16 ? 10.0 : 42.0);
      for (int i = 0; i < m; ++i) {
        for (int q = 0; q < m; ++q) {
          pts.emplace_back((2 * i - m + 1) * scale, (2 * q - m + 1) * scale);
        }
      }
      break;
    }
    default:
      throw ConfigError(std::string(scheme_name(s)) + " has no discrete constellation");
  }
  return pts;
}

// Clean and noise parts of a synthetic frame, kept apart so tests can measure the SNR.
struct SynthComponents {
  std::vector<cd> clean;
  std::vector<cd> noise;
};

namespace detail {

inline std::vector<double> gaussian_taps(double bt, int sps) {
  // Frequency-pulse shaping filter: Gaussian with bandwidth-time product bt, span +-2 symbols.
  const double sigma = std::sqrt(std::log(2.0)) / (2.0 * std::numbers::pi * bt) * sps;
  const int half = 2 * sps;
  std::vector<double> taps(2 * half + 1);
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
    taps[i + half] = v;
    sum += v;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

inline std::vector<cd> fsk_signal(bool gaussian, std::size_t n, const SynthConfig& cfg, Rng& rng) {
  const int sps = cfg.samples_per_symbol;
  const std::size_t pad = static_cast<std::size_t>(2 * sps);
  const std::size_t total = n + 2 * pad;
  const std::size_t n_sym = (total + sps - 1) / sps;
  std::vector<double> freq(n_sym * sps);
  for (std::size_t k = 0; k < n_sym; ++k) {
    const double a = rng.below(2) == 0 ? -1.0 : 1.0;
    for (int j = 0; j < sps; ++j) freq[k * sps + j] = a;
  }
  if (gaussian) {
    const auto taps = gaussian_taps(cfg.gfsk_bt, sps);
    const int half = static_cast<int>(taps.size() / 2);
    std::vector<double> smooth(freq.size());
    for (std::size_t i = 0; i < freq.size(); ++i) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t) {
        const auto idx = static_cast<std::ptrdiff_t>(i) + t;
        const auto clamped = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(freq.size()) - 1);
        acc += taps[t + half] * freq[static_cast<std::size_t>(clamped)];
      }
      smooth[i] = acc;
    }
    freq = std::move(smooth);
  }
  // A symbol of constant frequency advances the phase by pi * h.
  const double step = std::numbers::pi * cfg.fsk_modulation_index / sps;
  std::vector<cd> out(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < pad + n; ++i) {
    phase += step * freq[i];
    if (i >= pad) out[i - pad] = std::polar(1.0, phase);
  }
  return out;
}

inline std::vector<cd> analog_signal(ModulationScheme s, std::size_t n, const SynthConfig& cfg,
                                     Rng& rng) {
  using std::numbers::pi;
  const std::size_t tones = cfg.tone_frequencies.size();
  std::vector<double> phases(tones);
  for (auto& p : phases) p = 2.0 * pi * rng.uniform();
  std::vector<cd> out(n);
  const double gain = std::sqrt(2.0 / static_cast<double>(tones));
  double fm_phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double real_src = 0.0;
    cd analytic = 0.0;
    for (std::size_t k = 0; k < tones; ++k) {
      const double arg = 2.0 * pi * cfg.tone_frequencies[k] * static_cast<double>(i) + phases[k];
      real_src += gain * std::cos(arg);
      analytic += std::polar(1.0, arg);
    }
    switch (s) {
      case ModulationScheme::am_dsb:
        out[i] = real_src;
        break;
      case ModulationScheme::am_ssb:
        out[i] = analytic;
        break;
      case ModulationScheme::wbfm:
        fm_phase += 2.0 * pi * cfg.fm_deviation * real_src;
        out[i] = std::polar(1.0, fm_phase);
        break;
      default:
        break;
    }
  }
  // The tone mixture is deterministic, so scale it to exactly unit empirical power.
  double power = 0.0;
  for (const auto& v : out) power += std::norm(v);
  power /= static_cast<double>(n);
  if (power > 0.0) {
    const double g = 1.0 / std::sqrt(power);
    for (auto& v : out) v *= g;
  }
  return out;
}

}  // namespace detail

inline SynthComponents synthesize_components(ModulationScheme scheme, double snr_db, std::size_t n,
                                              const SynthConfig& cfg, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
  if (n < 4) throw ConfigError("frame length must be >= 4");
  if (static_cast<std::size_t>(scheme) >= kSchemeCount) throw ConfigError("unknown scheme");
  cfg.validate();

  Rng rng(cfg.rng_seed, Rng::mix(seed) ^ (static_cast<std::uint64_t>(scheme) << 56));
  SynthComponents out;
  switch (scheme) {
    case ModulationScheme::gfsk:
    case ModulationScheme::cpfsk:
      out.clean = detail::fsk_signal(scheme == ModulationScheme::gfsk, n, cfg, rng);
      break;
    case ModulationScheme::am_dsb:
    case ModulationScheme::am_ssb:
    case ModulationScheme::wbfm:
      out.clean = detail::analog_signal(scheme, n, cfg, rng);
      break;
    default: {
      const auto alphabet = constellation(scheme);
      out.clean.resize(n);
      cd symbol = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i % static_cast<std::size_t>(cfg.samples_per_symbol) == 0) {
          symbol = alphabet[rng.below(alphabet.size())];
        }
        out.clean[i] = symbol;
      }
      break;
    }
  }
  const double noise_power = std::pow(10.0, -snr_db / 10.0);
  const double sd = std::sqrt(noise_power / 2.0);
  out.noise.resize(n);
  for (auto& v : out.noise) {
    const double re = rng.normal();
    const double im = rng.normal();
    v = cd(sd * re, sd * im);
  }
  return out;
}

// Unit-average-power clean signal plus circular complex Gaussian noise of power
// 10^(-snr_db/10). Deterministic in all arguments.
inline IqFrame synthesize_frame(ModulationScheme scheme, double snr_db, std::size_t n,
                                const SynthConfig& cfg, std::uint64_t seed) {
  auto parts = synthesize_components(scheme, snr_db, n, cfg, seed);
  IqFrame frame;
  frame.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) frame.samples[i] = parts.clean[i] + parts.noise[i];
  frame.label = static_cast<int>(scheme);
  frame.snr_db = static_cast<int>(std::lround(snr_db));
  return frame;
}

inline double rms(std::span<const cd> samples) {
  if (samples.empty()) return 0.0;
  double p = 0.0;
  for (const auto& v : samples) p += std::norm(v);
  return std::sqrt(p / static_cast<double>(samples.size()));
}

// Scales the frame to unit RMS amplitude; phases, label and SNR are untouched.
inline IqFrame normalize_frame(IqFrame frame) {
  const double r = rms(frame.samples);
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw DegenerateError("cannot normalize a frame without nonzero finite samples");
  }
  const double g = 1.0 / r;
  for (auto& v : frame.samples) v *= g;
  return frame;
}

// ---------------------------------------------------------------------------
// Portable dataset format (little-endian):
//   "GAMC" | u32 version | u16 label count | label count x (u16 len, UTF-8 name)
//   | u32 frame count | u32 frame length
//   | per frame: u8 label, i8 snr_db, length x f32 I, length x f32 Q
// ---------------------------------------------------------------------------

inline constexpr std::string_view kDatasetMagic = "GAMC";
inline constexpr std::uint32_t kDatasetVersion = 1;

inline std::string encode_dataset(const Dataset& ds) {
  ds.validate();
  if (ds.label_table.size() > 256) throw DataError("label table larger than 256 entries");
  io::BinaryWriter w;
  w.bytes(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.u16(static_cast<std::uint16_t>(ds.label_table.size()));
  for (const auto& name : ds.label_table) w.short_string(name);
  w.u32(static_cast<std::uint32_t>(ds.frames.size()));
  const std::size_t n = ds.frame_length();
  w.u32(static_cast<std::uint32_t>(n));
  for (const auto& f : ds.frames) {
    if (f.snr_db < -128 || f.snr_db > 127) throw DataError("snr_db does not fit in i8");
    w.u8(static_cast<std::uint8_t>(f.label));
    w.i8(static_cast<std::int8_t>(f.snr_db));
    for (const auto& v : f.samples) w.f32(static_cast<float>(v.real()));
    for (const auto& v : f.samples) w.f32(static_cast<float>(v.imag()));
  }
  return w.take();
}

inline Dataset decode_dataset(std::string_view bytes, const std::string& context = "dataset") {
  io::BinaryReader r(bytes, context);
  if (r.remaining() < 4 || r.bytes(4) != kDatasetMagic) {
    throw FormatError(FormatError::Kind::bad_magic, context + ": bad magic (expected \"GAMC\")");
  }
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) throw VersionError(kDatasetVersion, version, context);
  Dataset ds;
  ds.label_table.clear();
  const std::uint16_t labels = r.u16();
  for (std::uint16_t i = 0; i < labels; ++i) ds.label_table.push_back(r.short_string());
  const std::uint32_t count = r.u32();
  const std::uint32_t n = r.u32();
  const std::size_t per_frame = 2 + std::size_t{n} * 8;
  r.require(per_frame * count);
  ds.frames.resize(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    auto& f = ds.frames[k];
    f.label = r.u8();
    f.snr_db = r.i8();
    if (static_cast<std::size_t>(f.label) >= ds.label_table.size()) {
      throw FormatError(FormatError::Kind::label_out_of_range,
                        context + ": frame " + std::to_string(k) + " label index " +
                            std::to_string(f.label) + " >= label count " +
                            std::to_string(ds.label_table.size()));
    }
    f.samples.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) f.samples[i].real(r.f32());
    for (std::uint32_t i = 0; i < n; ++i) f.samples[i].imag(r.f32());
  }
  if (r.remaining() != 0) {
    throw FormatError(FormatError::Kind::corrupt,
                      context + ": " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  io::write_file(path, encode_dataset(ds));
}

inline Dataset load_dataset(const std::string& path) {
  auto ds = decode_dataset(io::read_file(path), path);
  ds.provenance = path;
  return ds;
}

}  // namespace gamc
