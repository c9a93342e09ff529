#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gamc/error.hpp"

namespace gamc {

inline constexpr double kMinSnrDb = -20.0;
inline constexpr double kMaxSnrDb = 18.0;

// Closed dB interval.
struct SnrBand {
  double lo = kMinSnrDb;
  double hi = kMaxSnrDb;

  bool operator==(const SnrBand&) const = default;
};

// Ascending, non-overlapping (shared endpoints allowed) bands covering [-20, 18] dB.
class SnrBands {
 public:
  SnrBands() : bands_{SnrBand{}} {}

  explicit SnrBands(std::vector<SnrBand> bands) : bands_(std::move(bands)) {
    if (bands_.empty() || bands_.size() > 255) throw ConfigError("need between 1 and 255 SNR bands");
    for (std::size_t i = 0; i < bands_.size(); ++i) {
      const auto& b = bands_[i];
      if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi) {
        throw ConfigError("SNR band " + std::to_string(i) + " is not a valid interval");
      }
      if (i > 0 && b.lo < bands_[i - 1].hi) {
        throw ConfigError("SNR bands must be ascending and non-overlapping");
      }
    }
    if (bands_.front().lo > kMinSnrDb || bands_.back().hi < kMaxSnrDb) {
      throw ConfigError("SNR bands must cover [-20, 18] dB");
    }
  }

  std::size_t size() const noexcept { return bands_.size(); }
  const SnrBand& operator[](std::size_t i) const { return bands_.at(i); }
  const std::vector<SnrBand>& bands() const noexcept { return bands_; }

  bool operator==(const SnrBands&) const = default;

 private:
  std::vector<SnrBand> bands_;
};

// Band layouts for 1..5 experts on the even-dB grid.
inline SnrBands default_bands(int q) {
  switch (q) {
    case 1:
      return SnrBands({{-20, 18}});
    case 2:
      return SnrBands({{-20, -2}, {0, 18}});
    case 3:
      return SnrBands({{-20, -8}, {-6, 2}, {4, 18}});
    case 4:
      return SnrBands({{-20, -12}, {-10, -2}, {0, 8}, {10, 18}});
    case 5:
      return SnrBands({{-20, -12}, {-10, -6}, {-4, 2}, {4, 10}, {12, 18}});
    default:
      throw ConfigError("expert count q must be in 1..5, got " + std::to_string(q));
  }
}

// Index of the band containing snr_db. A value equal to a band's upper edge belongs to that
// band; a value falling strictly between two bands goes to the upper one, so every real
// value in the covered range maps to exactly one band.
inline std::size_t snr_band_index(double snr_db, const SnrBands& bands) {
  const auto& b = bands.bands();
  if (!(snr_db >= b.front().lo && snr_db <= b.back().hi)) {
    throw DataError("SNR " + std::to_string(snr_db) + " dB outside the covered band range");
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (snr_db <= b[i].hi) return i;
  }
  return b.size() - 1;
}

}  // namespace gamc
