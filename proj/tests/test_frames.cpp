#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "gamc/bands.hpp"
#include "gamc/frames.hpp"

namespace {

using gamc::cd;
using gamc::ModulationScheme;

double power(const std::vector<cd>& x) {
  double p = 0.0;
  for (const auto& v : x) p += std::norm(v);
  return p / static_cast<double>(x.size());
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gamc_test_" + name)).string();
}

}  // namespace

TEST(Schemes, LexicographicOrder) {
  const auto table = gamc::canonical_label_table();
  ASSERT_EQ(table.size(), 11u);
  EXPECT_TRUE(std::is_sorted(table.begin(), table.end()));
  EXPECT_EQ(table.front(), "8PSK");
  EXPECT_EQ(table.back(), "WBFM");
  for (auto s : gamc::all_schemes()) {
    EXPECT_EQ(gamc::parse_scheme(gamc::scheme_name(s)), s);
    EXPECT_EQ(table[gamc::scheme_index(s)], gamc::scheme_name(s));
  }
  EXPECT_FALSE(gamc::parse_scheme("OOK").has_value());
}

TEST(Synthesis, HighSnrBpskSitsOnTheRealAxis) {
  const auto f = gamc::synthesize_frame(ModulationScheme::bpsk, 60.0, 128, {}, 1);
  for (const auto& v : f.samples) {
    EXPECT_NEAR(std::abs(v.real()), 1.0, 1e-2);
    EXPECT_LE(std::abs(v.imag()), 1e-2);
  }
}

TEST(Synthesis, MeasuredSnrMatchesRequest) {
  const auto parts = gamc::synthesize_components(ModulationScheme::qpsk, 0.0, 100000, {}, 7);
  const double snr = 10.0 * std::log10(power(parts.clean) / power(parts.noise));
  EXPECT_NEAR(snr, 0.0, 0.2);
}

TEST(Synthesis, Qam64HasSixtyFourClusters) {
  const auto f = gamc::synthesize_frame(ModulationScheme::qam64, 60.0, 100000, {}, 3);
  const double step = 2.0 / std::sqrt(42.0);  // lattice spacing at unit power
  std::set<std::pair<long, long>> clusters;
  for (const auto& v : f.samples) clusters.insert({std::lround(v.real() / step * 2), std::lround(v.imag() / step * 2)});
  EXPECT_EQ(clusters.size(), 64u);
  EXPECT_NEAR(power(f.samples), 1.0, 0.01);
}

TEST(Synthesis, CleanPowerIsUnitForEveryScheme) {
  for (auto s : gamc::all_schemes()) {
    const auto parts = gamc::synthesize_components(s, 40.0, 200000, {}, 5);
    EXPECT_NEAR(power(parts.clean), 1.0, 0.02) << gamc::scheme_name(s);
  }
}

TEST(Synthesis, ConstellationsHaveUnitAveragePower) {
  for (auto s : {ModulationScheme::bpsk, ModulationScheme::qpsk, ModulationScheme::psk8, ModulationScheme::qam16,
                 ModulationScheme::qam64, ModulationScheme::pam4}) {
    const auto pts = gamc::constellation(s);
    double p = 0.0;
    for (const auto& v : pts) p += std::norm(v);
    EXPECT_NEAR(p / static_cast<double>(pts.size()), 1.0, 1e-12) << gamc::scheme_name(s);
  }
}

TEST(Synthesis, Deterministic) {
  for (auto s : gamc::all_schemes()) {
    const auto a = gamc::synthesize_frame(s, 4.0, 128, {}, 99);
    const auto b = gamc::synthesize_frame(s, 4.0, 128, {}, 99);
    EXPECT_EQ(a.samples, b.samples);
    const auto c = gamc::synthesize_frame(s, 4.0, 128, {}, 100);
    EXPECT_NE(a.samples, c.samples);
  }
}

TEST(Synthesis, RejectsBadArguments) {
  EXPECT_THROW(gamc::synthesize_frame(ModulationScheme::bpsk, 0.0, 3, {}, 1), gamc::ConfigError);
  EXPECT_THROW(gamc::synthesize_frame(ModulationScheme::bpsk, NAN, 16, {}, 1), gamc::ConfigError);
  gamc::SynthConfig cfg;
  cfg.samples_per_symbol = 1;
  EXPECT_THROW(gamc::synthesize_frame(ModulationScheme::bpsk, 0.0, 16, cfg, 1), gamc::ConfigError);
  cfg = {};
  cfg.tone_frequencies = {0.6};
  EXPECT_THROW(gamc::synthesize_frame(ModulationScheme::am_dsb, 0.0, 16, cfg, 1), gamc::ConfigError);
}

TEST(Normalize, UniformScaling) {
  gamc::IqFrame f;
  f.samples.assign(8, cd(2.0, 0.0));
  f.label = 3;
  f.snr_db = -4;
  const auto g = gamc::normalize_frame(f);
  for (const auto& v : g.samples) EXPECT_EQ(v, cd(1.0, 0.0));
  EXPECT_EQ(g.label, 3);
  EXPECT_EQ(g.snr_db, -4);
}

TEST(Normalize, PreservesRatiosAndPhases) {
  gamc::IqFrame f;
  f.samples = {cd(3.0, 0.0), cd(0.0, 4.0)};
  const auto g = gamc::normalize_frame(f);
  EXPECT_NEAR(gamc::rms(g.samples), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(g.samples[0]) / std::abs(g.samples[1]), 0.75, 1e-12);
  EXPECT_DOUBLE_EQ(std::arg(g.samples[1]), std::arg(f.samples[1]));
}

TEST(Normalize, IdempotentAndIdentityAtUnitRms) {
  const auto f = gamc::normalize_frame(gamc::synthesize_frame(ModulationScheme::qam16, 3.0, 128, {}, 8));
  const auto g = gamc::normalize_frame(f);
  for (std::size_t i = 0; i < f.samples.size(); ++i) EXPECT_NEAR(std::abs(f.samples[i] - g.samples[i]), 0.0, 1e-9);
}

TEST(Normalize, AllZeroIsDegenerate) {
  gamc::IqFrame f;
  f.samples.assign(16, cd(0.0, 0.0));
  EXPECT_THROW(gamc::normalize_frame(f), gamc::DegenerateError);
}

TEST(DatasetFormat, EmptyRoundTrip) {
  gamc::Dataset ds;
  const auto back = gamc::decode_dataset(gamc::encode_dataset(ds));
  EXPECT_TRUE(back.frames.empty());
  EXPECT_EQ(back.label_table, ds.label_table);
}

TEST(DatasetFormat, ZeroFrameRoundTripsBitExactly) {
  gamc::Dataset ds;
  gamc::IqFrame f;
  f.samples.assign(128, cd(0.0, 0.0));
  f.label = 10;
  f.snr_db = -20;
  ds.frames.push_back(f);
  const auto bytes = gamc::encode_dataset(ds);
  const auto back = gamc::decode_dataset(bytes);
  ASSERT_EQ(back.frames.size(), 1u);
  EXPECT_EQ(back.frames[0].samples, f.samples);
  EXPECT_EQ(back.frames[0].label, 10);
  EXPECT_EQ(back.frames[0].snr_db, -20);
  EXPECT_EQ(gamc::encode_dataset(back), bytes);
}

TEST(DatasetFormat, FileRoundTripAtFloat32Precision) {
  gamc::Dataset ds;
  for (int i = 0; i < 5; ++i) ds.frames.push_back(gamc::synthesize_frame(ModulationScheme::gfsk, 2.0 * i, 128, {}, i));
  const auto path = temp_path("roundtrip.gamc");
  gamc::save_dataset(ds, path);
  const auto back = gamc::load_dataset(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.frames.size(), ds.frames.size());
  EXPECT_EQ(back.provenance, path);
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    for (std::size_t j = 0; j < 128; ++j) {
      EXPECT_EQ(back.frames[i].samples[j].real(), static_cast<float>(ds.frames[i].samples[j].real()));
      EXPECT_EQ(back.frames[i].samples[j].imag(), static_cast<float>(ds.frames[i].samples[j].imag()));
    }
  }
}

TEST(DatasetFormat, DistinctErrors) {
  gamc::Dataset ds;
  ds.frames.push_back(gamc::synthesize_frame(ModulationScheme::bpsk, 0.0, 16, {}, 1));
  const auto good = gamc::encode_dataset(ds);

  auto kind_of = [](const std::string& bytes) {
    try {
      gamc::decode_dataset(bytes);
    } catch (const gamc::FormatError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error";
    return gamc::FormatError::Kind::corrupt;
  };
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of(bad_magic), gamc::FormatError::Kind::bad_magic);

  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(kind_of(bad_version), gamc::FormatError::Kind::version_mismatch);
  try {
    gamc::decode_dataset(bad_version);
  } catch (const gamc::VersionError& e) {
    EXPECT_EQ(e.expected(), 1u);
    EXPECT_EQ(e.found(), 2u);
    EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }

  EXPECT_EQ(kind_of(good.substr(0, good.size() - 3)), gamc::FormatError::Kind::truncated);

  // Label byte of the only frame follows the fixed header and the label table.
  const std::size_t label_pos = good.size() - 16 * 8 - 2;
  auto bad_label = good;
  bad_label[label_pos] = static_cast<char>(11);
  EXPECT_EQ(kind_of(bad_label), gamc::FormatError::Kind::label_out_of_range);

  EXPECT_EQ(kind_of(good + "x"), gamc::FormatError::Kind::corrupt);
}

TEST(DatasetFormat, EncodesHeaderLayout) {
  gamc::Dataset ds;
  ds.label_table = {"A", "BC"};
  const auto b = gamc::encode_dataset(ds);
  const std::string expected = std::string("GAMC") + std::string("\x01\x00\x00\x00", 4) + std::string("\x02\x00", 2) +
                               std::string("\x01\x00", 2) + "A" + std::string("\x02\x00", 2) + "BC" +
                               std::string("\x00\x00\x00\x00", 4) + std::string("\x00\x00\x00\x00", 4);
  EXPECT_EQ(b, expected);
}

TEST(Bands, Defaults) {
  EXPECT_EQ(gamc::default_bands(5)[1].lo, -10);
  EXPECT_EQ(gamc::default_bands(5)[1].hi, -6);
  EXPECT_EQ(gamc::default_bands(5)[0].lo, -20);
  EXPECT_EQ(gamc::default_bands(5)[0].hi, -12);
  EXPECT_EQ(gamc::default_bands(2)[0].hi, -2);
  EXPECT_EQ(gamc::default_bands(2)[1].lo, 0);
  for (int q = 1; q <= 5; ++q) EXPECT_EQ(gamc::default_bands(q).size(), static_cast<std::size_t>(q));
  EXPECT_THROW(gamc::default_bands(0), gamc::ConfigError);
  EXPECT_THROW(gamc::default_bands(6), gamc::ConfigError);
}

TEST(Bands, IndexLookup) {
  const auto b5 = gamc::default_bands(5);
  EXPECT_EQ(gamc::snr_band_index(-10, b5), 1u);
  for (int q = 1; q <= 5; ++q) {
    const auto b = gamc::default_bands(q);
    EXPECT_EQ(gamc::snr_band_index(-20, b), 0u);
    EXPECT_EQ(gamc::snr_band_index(18, b), b.size() - 1);
    for (int s = -20; s <= 18; s += 2) {
      const auto i = gamc::snr_band_index(s, b);
      EXPECT_GE(s, b[i].lo);
      EXPECT_LE(s, b[i].hi);
    }
  }
  EXPECT_THROW(gamc::snr_band_index(-22, b5), gamc::DataError);
  EXPECT_THROW(gamc::snr_band_index(20, b5), gamc::DataError);
}

TEST(Bands, SharedBoundaryGoesToLowerBandAndGapsGoUp) {
  const gamc::SnrBands shared({{-20, 0}, {0, 18}});
  EXPECT_EQ(gamc::snr_band_index(0, shared), 0u);
  const auto b3 = gamc::default_bands(3);
  EXPECT_EQ(gamc::snr_band_index(-7, b3), 1u);
}

TEST(Bands, Validation) {
  EXPECT_THROW(gamc::SnrBands({{-20, 0}, {-2, 18}}), gamc::ConfigError);
  EXPECT_THROW(gamc::SnrBands({{-18, 18}}), gamc::ConfigError);
  EXPECT_THROW(gamc::SnrBands({{-20, 10}}), gamc::ConfigError);
  EXPECT_THROW(gamc::SnrBands(std::vector<gamc::SnrBand>{}), gamc::ConfigError);
}
