#pragma once

// CSV and plain-text renderings of evaluation and complexity reports.

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gamc/pipeline.hpp"

namespace gamc {

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

inline std::string accuracy_by_snr_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "snr_db,correct,total,accuracy\n";
  for (const auto& c : r.per_snr) {
    os << static_cast<int>(c.key_lo) << ',' << c.correct << ',' << c.total << ',' << detail::fixed(c.accuracy(), 6) << '\n';
  }
  return os.str();
}

inline std::string accuracy_by_band_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "band,lo_db,hi_db,correct,total,accuracy\n";
  for (std::size_t i = 0; i < r.per_band.size(); ++i) {
    const auto& c = r.per_band[i];
    os << i << ',' << detail::format_double(c.key_lo) << ',' << detail::format_double(c.key_hi) << ',' << c.correct << ','
       << c.total << ',' << detail::fixed(c.accuracy(), 6) << '\n';
  }
  return os.str();
}

// Rows are true classes, columns predicted classes.
inline std::string confusion_csv(const ConfusionMatrix& m, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "true\\pred";
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  for (std::size_t i = 0; i < m.counts.size(); ++i) {
    os << labels[i];
    for (auto v : m.counts[i]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

inline std::string complexity_csv(const ComplexityReport& r) {
  std::ostringstream os;
  os << "component,parameters,flops\n";
  for (const auto& row : r.rows) {
    os << row.name << ',' << detail::fixed(row.parameters, 0) << ',' << detail::fixed(row.flops, 0) << '\n';
  }
  return os.str();
}

inline std::string complexity_text(const ComplexityReport& r) {
  std::ostringstream os;
  os << "# " << r.convention << "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-20s %16s %16s\n", "Component", "Params (K)", "FLOPs (K)");
  os << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof(line), "%-20s %16.1f %16.1f\n", row.name.c_str(), row.parameters / 1000.0, row.flops / 1000.0);
    os << line;
  }
  return os.str();
}

inline std::string importance_csv(const BoostedEnsemble& m, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "feature,gain\n";
  for (const auto& [f, gain] : feature_importance(m)) {
    const auto name = static_cast<std::size_t>(f) < names.size() ? names[static_cast<std::size_t>(f)] : std::to_string(f);
    os << name << ',' << detail::format_double(gain) << '\n';
  }
  return os.str();
}

inline std::string summary_text(const EvalReport& r) {
  std::ostringstream os;
  os << "overall accuracy: " << detail::fixed(100.0 * r.accuracy(), 2) << "% (" << r.correct << "/" << r.total << ")\n";
  os << "per SNR:\n";
  for (const auto& c : r.per_snr) {
    char line[96];
    std::snprintf(line, sizeof(line), "  %4d dB  %6.2f%%  (%zu)\n", static_cast<int>(c.key_lo), 100.0 * c.accuracy(), c.total);
    os << line;
  }
  os << "per band:\n";
  for (const auto& c : r.per_band) {
    char line[96];
    std::snprintf(line, sizeof(line), "  [%g, %g] dB  %6.2f%%  (%zu)\n", c.key_lo, c.key_hi, 100.0 * c.accuracy(), c.total);
    os << line;
  }
  os << complexity_text(r.complexity);
  return os.str();
}

}  // namespace gamc
