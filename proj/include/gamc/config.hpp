#pragma once

// Pipeline configuration and its INI text form. Every field is read and written by the same
// visitor, so the file format and the struct cannot drift apart.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gamc/bands.hpp"
#include "gamc/error.hpp"
#include "gamc/frames.hpp"
#include "gamc/gbt.hpp"
#include "gamc/graphify.hpp"
#include "gamc/lnt.hpp"
#include "gamc/statfeat.hpp"

namespace gamc {

struct SyntheticRecipe {
  std::vector<std::string> schemes = canonical_label_table();
  std::vector<int> snr_db = {-20, -18, -16, -14, -12, -10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10, 12, 14, 16, 18};
  int frames_per_cell = 50;
  int frame_length = 128;
  SynthConfig synth;
};

struct SplitConfig {
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
};

struct LntConfig {
  std::vector<int> sizes = {64, 128, 256, 512};  // empty disables LNT augmentation
  int folds = 5;
  double l2 = 1e-2;
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;

  ProjectorOptions projector_options(std::uint64_t seed) const {
    ProjectorOptions o;
    o.folds = folds;
    o.l2 = l2;
    o.seed = seed;
    o.optimizer.max_iterations = max_iterations;
    o.optimizer.gradient_tolerance = gradient_tolerance;
    return o;
  }
};

struct PipelineConfig {
  std::string dataset_path;  // empty selects the synthetic recipe
  SyntheticRecipe synthetic;
  SplitConfig split;
  bool use_graph = true;
  GraphFeatureConfig graph;
  bool use_stat = true;
  StatConfig stat;
  int q = 3;
  std::vector<SnrBand> bands;  // explicit band list; empty selects default_bands(q)
  LntConfig lnt;
  TrainParams cqi = cqi_params();
  TrainParams expert = expert_params();

  SnrBands snr_bands() const {
    if (bands.empty()) return default_bands(q);
    SnrBands b(bands);
    if (static_cast<int>(b.size()) != q) {
      throw ConfigError("moe.bands lists " + std::to_string(b.size()) + " bands but q = " + std::to_string(q));
    }
    return b;
  }

  std::size_t graph_dim() const { return use_graph ? graph.dimension() : 0; }
  std::size_t feature_dim() const { return graph_dim() + (use_stat ? stat.dimension() : 0); }

  void validate() const {
    if (dataset_path.empty()) {
      if (synthetic.schemes.empty()) throw ConfigError("synthetic.schemes must not be empty");
      for (const auto& s : synthetic.schemes) {
        if (!parse_scheme(s)) throw ConfigError("synthetic.schemes: unknown scheme '" + s + "'");
      }
      if (synthetic.snr_db.empty()) throw ConfigError("synthetic.snr_db must not be empty");
      for (int s : synthetic.snr_db) {
        if (s < -128 || s > 127) throw ConfigError("synthetic.snr_db values must fit in a signed byte");
      }
      if (synthetic.frames_per_cell < 1) throw ConfigError("synthetic.frames_per_cell must be >= 1");
      if (synthetic.frame_length < 4) throw ConfigError("synthetic.frame_length must be >= 4");
      synthetic.synth.validate();
    }
    if (!(split.test_fraction >= 0.0 && split.test_fraction < 1.0)) {
      throw ConfigError("split.test_fraction must lie in [0, 1)");
    }
    if (!use_graph && !use_stat) throw ConfigError("at least one of graph.enabled and stat.enabled must be true");
    if (use_graph) graph.validate();
    if (use_stat) stat.validate();
    if (q < 1 || q > 255) throw ConfigError("moe.q must lie in 1..255");
    if (bands.empty() && q > 5) throw ConfigError("moe.q above 5 requires explicit moe.bands");
    snr_bands();
    if (q > 1 && !use_graph) throw ConfigError("a gate over more than one band needs graph features");
    for (int s : lnt.sizes) {
      if (s < 1) throw ConfigError("lnt.sizes entries must be positive");
    }
    if (lnt.folds < 2) throw ConfigError("lnt.folds must be >= 2");
    if (!(lnt.l2 >= 0.0)) throw ConfigError("lnt.l2 must be >= 0");
    if (lnt.max_iterations < 0) throw ConfigError("lnt.max_iterations must be >= 0");
    if (!(lnt.gradient_tolerance > 0.0)) throw ConfigError("lnt.gradient_tolerance must be positive");
    cqi.validate();
    expert.validate();
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
  return s;
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  const auto s = trim(text);
  T v{};
  const auto* end = s.data() + s.size();
  auto res = std::from_chars(s.data() + (!s.empty() && s[0] == '+' ? 1 : 0), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(key + ": cannot parse '" + s + "'");
  }
  return v;
}

class ConfigReader {
 public:
  explicit ConfigReader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  template <typename T>
  void field(const std::string& section, const std::string& key, T& value) {
    const std::string path = section + "." + key;
    known_.insert(path);
    const auto node = tree_.get_child_optional(boost::property_tree::ptree::path_type(path, '.'));
    if (!node) return;
    const auto text = node->get_value<std::string>();
    assign(text, path, value);
  }

  void check_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
      for (const auto& [key, _] : body) {
        if (!known_.count(section + "." + key)) throw ConfigError("unknown config key " + section + "." + key);
      }
    }
  }

 private:
  static void assign(const std::string& t, const std::string& k, int& v) { v = parse_number<int>(t, k); }
  static void assign(const std::string& t, const std::string& k, double& v) { v = parse_number<double>(t, k); }
  static void assign(const std::string& t, const std::string& k, std::uint64_t& v) {
    v = parse_number<std::uint64_t>(t, k);
  }
  static void assign(const std::string& t, const std::string&, std::string& v) { v = trim(t); }
  static void assign(const std::string& t, const std::string& k, bool& v) {
    const auto s = trim(t);
    if (s == "true" || s == "1" || s == "yes") {
      v = true;
    } else if (s == "false" || s == "0" || s == "no") {
      v = false;
    } else {
      throw ConfigError(k + ": expected a boolean, got '" + s + "'");
    }
  }
  static void assign(const std::string& t, const std::string& k, SplitMode& v) {
    const auto s = trim(t);
    if (s == "hist") {
      v = SplitMode::hist;
    } else if (s == "exact") {
      v = SplitMode::exact;
    } else {
      throw ConfigError(k + ": expected hist or exact, got '" + s + "'");
    }
  }
  template <typename T>
  static void assign(const std::string& t, const std::string& k, std::vector<T>& v) {
    v.clear();
    for (const auto& item : split_list(t)) {
      T x{};
      assign(item, k, x);
      v.push_back(x);
    }
  }
  static void assign(const std::string& t, const std::string& k, std::vector<SnrBand>& v) {
    v.clear();
    for (const auto& item : split_list(t)) {
      const auto colon = item.find(':', 1);
      if (colon == std::string::npos) throw ConfigError(k + ": band '" + item + "' is not lo:hi");
      v.push_back(SnrBand{parse_number<double>(item.substr(0, colon), k), parse_number<double>(item.substr(colon + 1), k)});
    }
  }

  const boost::property_tree::ptree& tree_;
  std::set<std::string> known_;
};

class ConfigWriter {
 public:
  template <typename T>
  void field(const std::string& section, const std::string& key, const T& value) {
    tree_.put(boost::property_tree::ptree::path_type(section + "." + key, '.'), render(value));
  }

  std::string text() const {
    std::ostringstream os;
    boost::property_tree::write_ini(os, tree_);
    return os.str();
  }

 private:
  static std::string render(int v) { return std::to_string(v); }
  static std::string render(double v) { return format_double(v); }
  static std::string render(std::uint64_t v) { return std::to_string(v); }
  static std::string render(const std::string& v) { return v; }
  static std::string render(bool v) { return v ? "true" : "false"; }
  static std::string render(SplitMode v) { return v == SplitMode::hist ? "hist" : "exact"; }
  static std::string render(const SnrBand& b) { return format_double(b.lo) + ":" + format_double(b.hi); }
  template <typename T>
  static std::string render(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      out += render(v[i]);
    }
    return out;
  }

  boost::property_tree::ptree tree_;
};

template <typename Visitor, typename Params>
void visit_train_params(Visitor& v, const std::string& s, Params& p) {
  v.field(s, "learning_rate", p.learning_rate);
  v.field(s, "max_depth", p.max_depth);
  v.field(s, "n_estimators", p.n_estimators);
  v.field(s, "subsample", p.subsample);
  v.field(s, "colsample_bytree", p.colsample_bytree);
  v.field(s, "min_child_weight", p.min_child_weight);
  v.field(s, "gamma", p.gamma);
  v.field(s, "reg_alpha", p.reg_alpha);
  v.field(s, "reg_lambda", p.reg_lambda);
  v.field(s, "seed", p.rng_seed);
  v.field(s, "split_mode", p.split_mode);
  v.field(s, "max_bins", p.max_bins);
}

// Works for both PipelineConfig& and const PipelineConfig&.
template <typename Visitor, typename Config>
void visit_config(Visitor& v, Config& c) {
  v.field("data", "path", c.dataset_path);

  auto& syn = c.synthetic;
  v.field("synthetic", "schemes", syn.schemes);
  v.field("synthetic", "snr_db", syn.snr_db);
  v.field("synthetic", "frames_per_cell", syn.frames_per_cell);
  v.field("synthetic", "frame_length", syn.frame_length);
  v.field("synthetic", "samples_per_symbol", syn.synth.samples_per_symbol);
  v.field("synthetic", "fsk_modulation_index", syn.synth.fsk_modulation_index);
  v.field("synthetic", "gfsk_bt", syn.synth.gfsk_bt);
  v.field("synthetic", "tone_frequencies", syn.synth.tone_frequencies);
  v.field("synthetic", "fm_deviation", syn.synth.fm_deviation);
  v.field("synthetic", "seed", syn.synth.rng_seed);

  v.field("split", "test_fraction", c.split.test_fraction);
  v.field("split", "seed", c.split.seed);

  v.field("graph", "enabled", c.use_graph);
  v.field("graph", "k_set", c.graph.k_set);
  v.field("graph", "lambda_t", c.graph.lambda_t);
  v.field("graph", "sigma_floor", c.graph.sigma_floor);

  auto& st = c.stat;
  v.field("stat", "enabled", c.use_stat);
  v.field("stat", "amp_bins", st.amp_bins);
  v.field("stat", "amp_max", st.amp_max);
  v.field("stat", "phase_diff_bins", st.phase_diff_bins);
  v.field("stat", "iq_bins", st.iq_bins);
  v.field("stat", "iq_range", st.iq_range);
  v.field("stat", "logmag_bins", st.logmag_bins);
  v.field("stat", "tail_thresholds", st.tail_thresholds);
  v.field("stat", "cdf_quantiles", st.cdf_quantiles);
  v.field("stat", "rotational_orders", st.rotational_orders);
  v.field("stat", "phase_spectrum_bands", st.phase_spectrum_bands);
  v.field("stat", "bispec_bins", st.bispec_bins);
  v.field("stat", "cyclic_alphas", st.cyclic_alphas);
  v.field("stat", "cyclic_lags", st.cyclic_lags);

  v.field("moe", "q", c.q);
  v.field("moe", "bands", c.bands);

  v.field("lnt", "sizes", c.lnt.sizes);
  v.field("lnt", "folds", c.lnt.folds);
  v.field("lnt", "l2", c.lnt.l2);
  v.field("lnt", "max_iterations", c.lnt.max_iterations);
  v.field("lnt", "gradient_tolerance", c.lnt.gradient_tolerance);

  visit_train_params(v, "cqi", c.cqi);
  visit_train_params(v, "expert", c.expert);
}

}  // namespace detail

// Keys absent from the text keep their defaults; unknown keys are rejected.
inline PipelineConfig parse_config(const std::string& text, const std::string& context = "config") {
  boost::property_tree::ptree tree;
  try {
    std::istringstream is(text);
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(context + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  PipelineConfig cfg;
  detail::ConfigReader reader(tree);
  try {
    detail::visit_config(reader, cfg);
    reader.check_unknown();
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(context + ": " + e.what());
  }
  return cfg;
}

inline std::string config_to_text(const PipelineConfig& cfg) {
  detail::ConfigWriter writer;
  detail::visit_config(writer, cfg);
  return writer.text();
}

inline PipelineConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path);
}

}  // namespace gamc
