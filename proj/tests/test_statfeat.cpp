#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "gamc/rng.hpp"
#include "gamc/statfeat.hpp"

namespace {

using gamc::cd;
using std::numbers::pi;

std::vector<cd> tone(double f0, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<cd> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::polar(amp, 2.0 * pi * f0 * static_cast<double>(i) + phase);
  return x;
}

std::vector<cd> awgn(std::size_t n, std::uint64_t seed) {
  gamc::Rng rng(seed, 1);
  std::vector<cd> x(n);
  const double sd = std::sqrt(0.5);
  for (auto& v : x) {
    const double re = rng.normal();
    const double im = rng.normal();
    v = cd(sd * re, sd * im);
  }
  return x;
}

std::vector<cd> repeat_alphabet(const std::vector<cd>& alphabet, std::size_t copies) {
  std::vector<cd> x;
  for (std::size_t c = 0; c < copies; ++c) x.insert(x.end(), alphabet.begin(), alphabet.end());
  return x;
}

double sum(std::vector<double>::const_iterator b, std::vector<double>::const_iterator e) {
  return std::accumulate(b, e, 0.0);
}

}  // namespace

TEST(Amplitude, UnitModulusFillsOneBin) {
  const auto x = tone(0.1, 128);
  const auto v = gamc::amplitude_features(x);
  ASSERT_EQ(v.size(), 32u + 5 + 3 + 64);
  // modulus 1 sits on the edge between bins 7 and 8
  EXPECT_NEAR(v[7] + v[8], 1.0, 1e-12);
  EXPECT_EQ(std::count_if(v.begin(), v.begin() + 32, [](double h) { return h > 0.0; }),
            std::count_if(v.begin() + 7, v.begin() + 9, [](double h) { return h > 0.0; }));
  for (int t = 0; t < 3; ++t) EXPECT_EQ(v[37 + t], 0.0);
  for (int q = 0; q < 5; ++q) EXPECT_NEAR(v[32 + q], 1.0, 1e-12);
}

TEST(Amplitude, TailRate) {
  std::vector<cd> x;
  for (int i = 0; i < 64; ++i) x.push_back(std::polar(i % 2 ? 0.5 : 2.5, 0.3 * i));
  const auto v = gamc::amplitude_features(x);
  EXPECT_DOUBLE_EQ(v[37], 0.5);  // tau 1.5
  EXPECT_DOUBLE_EQ(v[38], 0.5);  // tau 2.0
}

TEST(Amplitude, Qam16RadiusOccupancy) {
  const auto f = gamc::synthesize_frame(gamc::ModulationScheme::qam16, 80.0, 100000, {}, 17);
  std::map<long, double> levels;
  for (const auto& v : f.samples) levels[std::lround(std::norm(v) * 10.0)] += 1.0;
  ASSERT_EQ(levels.size(), 3u);
  const double n = static_cast<double>(f.samples.size());
  EXPECT_NEAR(levels[2] / n, 0.25, 0.02);
  EXPECT_NEAR(levels[10] / n, 0.5, 0.02);
  EXPECT_NEAR(levels[18] / n, 0.25, 0.02);
}

TEST(Amplitude, DensitiesSumToOneWithClipping) {
  auto x = awgn(256, 3);
  x[0] = cd(100.0, -100.0);
  const auto v = gamc::amplitude_features(x);
  EXPECT_NEAR(sum(v.begin(), v.begin() + 32), 1.0, 1e-9);
  EXPECT_NEAR(sum(v.begin() + 40, v.end()), 1.0, 1e-9);
}

TEST(Phase, QpskAlphabet) {
  const auto x = repeat_alphabet(gamc::constellation(gamc::ModulationScheme::qpsk), 8);
  const auto v = gamc::phase_features(x);
  EXPECT_NEAR(v[0], 0.0, 1e-12);  // R
  EXPECT_NEAR(v[1], 0.0, 1e-12);  // M2
  EXPECT_NEAR(v[2], 1.0, 1e-12);  // M4
}

TEST(Phase, Psk8Alphabet) {
  const auto x = repeat_alphabet(gamc::constellation(gamc::ModulationScheme::psk8), 8);
  const auto v = gamc::phase_features(x);
  EXPECT_NEAR(v[2], 0.0, 1e-12);  // M4
  EXPECT_NEAR(v[3], 1.0, 1e-12);  // M8
}

TEST(Phase, ConstantPhase) {
  const std::vector<cd> x(64, std::polar(1.0, 0.4));
  const gamc::StatConfig cfg;
  const auto v = gamc::phase_features(x, cfg);
  ASSERT_EQ(v.size(), cfg.phase_dim());
  EXPECT_NEAR(v[0], 1.0, 1e-12);
  // All phase differences are zero, so a single histogram bin holds the mass.
  const auto hist_begin = v.begin() + 4;
  EXPECT_NEAR(*std::max_element(hist_begin, hist_begin + 32), 1.0, 1e-12);
  EXPECT_NEAR(sum(hist_begin, hist_begin + 32), 1.0, 1e-12);
  EXPECT_NEAR(v[36], 0.0, 1e-12);  // circular mean
  EXPECT_NEAR(v[37], 0.0, 1e-12);  // circular variance
}

TEST(Phase, BoundsOnNoise) {
  const auto v = gamc::phase_features(gamc::normalize_frame(gamc::IqFrame{awgn(128, 9)}).samples);
  EXPECT_GE(v[0], 0.0);
  EXPECT_LE(v[0], 1.0);
  EXPECT_NEAR(sum(v.begin() + 4, v.begin() + 36), 1.0, 1e-9);
}

TEST(Frequency, OnBinToneConcentrates) {
  const std::size_t n = 128;
  const auto v = gamc::frequency_features(tone(5.0 / n, n));
  EXPECT_NEAR(v[33], 0.0, 1e-9);                          // entropy
  EXPECT_NEAR(v[32], static_cast<double>(n), 1e-6);       // PAPR
  EXPECT_NEAR(sum(v.begin(), v.begin() + 32), 1.0, 1e-9);  // log-magnitude density
}

TEST(Frequency, TwoEqualTones) {
  const std::size_t n = 128;
  auto x = tone(5.0 / n, n);
  const auto y = tone(17.0 / n, n, 1.0, 0.9);
  for (std::size_t i = 0; i < n; ++i) x[i] += y[i];
  EXPECT_NEAR(gamc::frequency_features(x)[33], std::log(2.0), 1e-6);
}

TEST(Frequency, WhiteNoiseEntropyNearMaximum) {
  const std::size_t n = 128;
  double h = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) h += gamc::frequency_features(awgn(n, s))[33];
  h /= 100.0;
  EXPECT_NEAR(h, std::log(static_cast<double>(n)), 0.15 * std::log(static_cast<double>(n)));
}

TEST(Cumulants, ClosedForms) {
  const auto bpsk = gamc::synthesize_frame(gamc::ModulationScheme::bpsk, 200.0, 100000, {}, 1);
  const auto qpsk = gamc::synthesize_frame(gamc::ModulationScheme::qpsk, 200.0, 100000, {}, 2);
  EXPECT_NEAR(gamc::cumulants(bpsk.samples).c40.real(), -2.0, 0.02);
  EXPECT_NEAR(gamc::cumulants(qpsk.samples).c40.real(), -1.0, 0.02);
  EXPECT_LE(std::abs(gamc::cumulants(awgn(1000000, 4)).c40), 0.02);
}

TEST(Cumulants, ExactOnAlphabets) {
  // Equal occupancy of an alphabet gives the population moments exactly.
  const auto bpsk = gamc::cumulants(gamc::constellation(gamc::ModulationScheme::bpsk));
  EXPECT_NEAR(bpsk.c20.real(), 1.0, 1e-12);
  EXPECT_NEAR(bpsk.c21.real(), 1.0, 1e-12);
  EXPECT_NEAR(bpsk.c40.real(), -2.0, 1e-12);
  EXPECT_NEAR(bpsk.c42.real(), -2.0, 1e-12);
  EXPECT_NEAR(bpsk.c63.real(), 16.0, 1e-12);
  const auto qpsk = gamc::cumulants(gamc::constellation(gamc::ModulationScheme::qpsk));
  EXPECT_NEAR(std::abs(qpsk.c20), 0.0, 1e-12);
  EXPECT_NEAR(qpsk.c40.real(), -1.0, 1e-12);
  EXPECT_NEAR(qpsk.c42.real(), -1.0, 1e-12);
  EXPECT_NEAR(qpsk.c63.real(), 4.0, 1e-12);
  const auto f = gamc::cumulant_features(gamc::constellation(gamc::ModulationScheme::qpsk));
  ASSERT_EQ(f.size(), 10u);
  EXPECT_NEAR(f[2], 1.0, 1e-12);
  EXPECT_NEAR(f[8], -1.0, 1e-12);
}

TEST(Bispectrum, SingleToneVanishes) {
  const std::size_t n = 128;
  for (double v : gamc::bispectrum_features(tone(5.0 / n, n))) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Bispectrum, PhaseLockedPairPeaksAtBaseBin) {
  const std::size_t n = 128;
  const std::size_t f0 = 20;
  auto x = tone(static_cast<double>(f0) / n, n, 1.0, 0.3);
  const auto y = tone(2.0 * f0 / n, n, 1.0, 0.6);
  for (std::size_t i = 0; i < n; ++i) x[i] += y[i];
  const auto v = gamc::bispectrum_features(x);
  const auto peak = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  EXPECT_EQ(peak, f0 * 16 / n);
  EXPECT_GT(v[peak], 0.0);
}

TEST(Bispectrum, NoiseIsFinite) {
  for (double v : gamc::bispectrum_features(awgn(128, 8))) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
}

TEST(Cyclo, ToneBoundAndSymbolRateLine) {
  const std::size_t n = 128;
  const auto t = gamc::cyclo_features(tone(0.07, n));
  ASSERT_EQ(t.size(), 9u);
  const gamc::StatConfig cfg;
  std::size_t slot = 0;
  for (double alpha : cfg.cyclic_alphas) {
    for (int lag : cfg.cyclic_lags) {
      const double terms = static_cast<double>(n) - lag;
      const double dirichlet = std::abs(std::sin(pi * alpha * terms) / std::sin(pi * alpha)) / static_cast<double>(n);
      EXPECT_NEAR(t[slot++], dirichlet, 1e-12) << alpha << " " << lag;
    }
  }
  double bpsk = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto f = gamc::synthesize_frame(gamc::ModulationScheme::bpsk, 100.0, n, {}, s);
    bpsk += gamc::cyclo_features(f.samples)[0];  // alpha 1/8, lag 1
  }
  bpsk /= 100.0;
  EXPECT_GE(bpsk, 10.0 * t[0]);
}

TEST(Cyclo, ZeroLagZeroFrequencyIsPower) {
  gamc::StatConfig cfg;
  cfg.cyclic_alphas = {0.0};
  cfg.cyclic_lags = {0};
  const auto x = gamc::normalize_frame(gamc::IqFrame{awgn(64, 2)}).samples;
  EXPECT_NEAR(gamc::cyclo_features(x, cfg)[0], 1.0, 1e-12);
}

TEST(StatFeatures, DimensionNamesAndDeterminism) {
  const gamc::StatConfig cfg;
  EXPECT_EQ(cfg.dimension(), 219u);
  EXPECT_EQ(gamc::stat_feature_names(cfg).size(), cfg.dimension());
  const auto f = gamc::normalize_frame(gamc::synthesize_frame(gamc::ModulationScheme::cpfsk, 3.0, 128, {}, 6));
  const auto a = gamc::extract_stat_features(f, cfg);
  const auto b = gamc::extract_stat_features(f, cfg);
  EXPECT_EQ(a.size(), cfg.dimension());
  EXPECT_EQ(a, b);
  for (double v : a) EXPECT_TRUE(std::isfinite(v));

  gamc::StatConfig small;
  small.amp_bins = 4;
  small.cyclic_lags = {1};
  EXPECT_EQ(gamc::extract_stat_features(f, small).size(), small.dimension());
  EXPECT_EQ(gamc::stat_feature_names(small).size(), small.dimension());
}

TEST(StatFeatures, RotationInvariantSlots) {
  const gamc::StatConfig cfg;
  const auto f = gamc::normalize_frame(gamc::synthesize_frame(gamc::ModulationScheme::qam64, 10.0, 128, {}, 12));
  auto r = f;
  for (auto& v : r.samples) v *= std::polar(1.0, 1.234);
  const auto a = gamc::amplitude_features(f.samples, cfg);
  const auto b = gamc::amplitude_features(r.samples, cfg);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(a[i], b[i], 1e-9) << i;
  const auto pa = gamc::phase_features(f.samples, cfg);
  const auto pb = gamc::phase_features(r.samples, cfg);
  for (std::size_t i = 1; i <= 3; ++i) EXPECT_NEAR(pa[i], pb[i], 1e-9) << i;
}

TEST(StatFeatures, InvalidConfig) {
  gamc::StatConfig cfg;
  cfg.amp_bins = 1;
  EXPECT_THROW(gamc::extract_stat_features(std::vector<cd>(16, cd(1, 0)), cfg), gamc::ConfigError);
  cfg = {};
  cfg.tail_thresholds = {-1.0};
  EXPECT_THROW(cfg.validate(), gamc::ConfigError);
}
