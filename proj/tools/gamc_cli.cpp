// gamc: synthesize datasets, extract features, train, evaluate, predict and report.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 internal error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "gamc/gamc.hpp"
#include "gamc/report.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

gamc::Logger stderr_logger(bool quiet) {
  if (quiet) return {};
  return [](const std::string& msg) { std::cerr << "gamc: " << msg << '\n'; };
}

gamc::PipelineConfig config_or_default(const std::string& path) {
  return path.empty() ? gamc::PipelineConfig{} : gamc::load_config(path);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  gamc::io::write_file(path.string(), text);
}

std::string features_csv(const gamc::Dataset& ds, const gamc::FeatureTable& t) {
  std::ostringstream os;
  os << "index,label,snr_db";
  for (const auto& n : t.names) os << ',' << n;
  os << '\n';
  for (Eigen::Index i = 0; i < t.x.rows(); ++i) {
    const auto& f = ds.frames[static_cast<std::size_t>(i)];
    os << i << ',' << ds.label_table[static_cast<std::size_t>(f.label)] << ',' << f.snr_db;
    for (Eigen::Index j = 0; j < t.x.cols(); ++j) os << ',' << gamc::detail::format_double(t.x(i, j));
    os << '\n';
  }
  return os.str();
}

std::string predictions_csv(const gamc::GamcBundle& b, const gamc::Matrix& p) {
  std::ostringstream os;
  os << "index,predicted";
  for (const auto& l : b.moe.label_table) os << ",p." << l;
  os << '\n';
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    os << i << ',' << b.moe.label_table[gamc::argmax(gamc::row_span(p, i))];
    for (Eigen::Index j = 0; j < p.cols(); ++j) os << ',' << gamc::detail::format_double(p(i, j));
    os << '\n';
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAMC automatic modulation classification"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  app.add_flag("-q,--quiet", quiet, "Suppress progress messages");

  std::string config_path;
  std::string data_path;
  std::string model_path;
  std::string out_path;

  auto* init = app.add_subcommand("init-config", "Print the default configuration");

  auto* synth = app.add_subcommand("synth", "Write the configured synthetic recipe as a portable dataset");
  synth->add_option("-c,--config", config_path, "Pipeline config (INI)");
  synth->add_option("-o,--out", out_path, "Output dataset")->required();

  auto* extract = app.add_subcommand("extract", "Extract features to CSV");
  extract->add_option("-c,--config", config_path, "Pipeline config (INI)");
  extract->add_option("-d,--data", data_path, "Dataset (defaults to the config's dataset or recipe)");
  extract->add_option("-o,--out", out_path, "Output CSV")->required();

  std::string test_out;
  auto* train = app.add_subcommand("train", "Train a model bundle");
  train->add_option("-c,--config", config_path, "Pipeline config (INI)");
  train->add_option("-o,--out", out_path, "Output bundle")->required();
  train->add_option("--test-out", test_out, "Also write the held-out split as a dataset");

  auto* eval = app.add_subcommand("eval", "Evaluate a bundle on a dataset");
  eval->add_option("-m,--model", model_path, "Model bundle")->required();
  eval->add_option("-d,--data", data_path, "Dataset")->required();
  eval->add_option("-o,--out-dir", out_path, "Directory for CSV reports");

  auto* pred = app.add_subcommand("predict", "Per-frame class probabilities");
  pred->add_option("-m,--model", model_path, "Model bundle")->required();
  pred->add_option("-d,--data", data_path, "Dataset")->required();
  pred->add_option("-o,--out", out_path, "Output CSV")->required();

  std::string importance_out;
  auto* report = app.add_subcommand("report", "Parameter and FLOP accounting");
  report->add_option("-m,--model", model_path, "Model bundle")->required();
  report->add_option("-o,--out", out_path, "Complexity CSV");
  report->add_option("--importance", importance_out, "Selector feature importance CSV (feature,gain)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    gamc::parallel_threads() = threads;
    const auto logger = stderr_logger(quiet);

    if (*init) {
      std::cout << gamc::config_to_text(gamc::PipelineConfig{});
    } else if (*synth) {
      const auto cfg = config_or_default(config_path);
      const auto ds = gamc::synthesize_dataset(cfg.synthetic);
      gamc::save_dataset(ds, out_path);
      if (logger) logger("wrote " + std::to_string(ds.frames.size()) + " frames to " + out_path);
    } else if (*extract) {
      auto cfg = config_or_default(config_path);
      if (!data_path.empty()) cfg.dataset_path = data_path;
      const auto ds = gamc::resolve_dataset(cfg);
      ds.validate();
      write_text(out_path, features_csv(ds, gamc::extract_features(ds, cfg, logger)));
    } else if (*train) {
      const auto cfg = config_or_default(config_path);
      const auto outcome = gamc::train_with_split(cfg, logger);
      gamc::save_bundle(outcome.bundle, out_path);
      if (!test_out.empty()) gamc::save_dataset(gamc::subset(outcome.dataset, outcome.split.test), test_out);
      if (logger) logger("wrote bundle to " + out_path);
    } else if (*eval) {
      const auto bundle = gamc::load_bundle(model_path);
      const auto ds = gamc::load_dataset(data_path);
      const auto r = gamc::evaluate(bundle, ds, logger);
      const auto summary = gamc::summary_text(r);
      std::cout << summary;
      if (!out_path.empty()) {
        const fs::path dir(out_path);
        write_text(dir / "summary.txt", summary);
        write_text(dir / "accuracy_by_snr.csv", gamc::accuracy_by_snr_csv(r));
        write_text(dir / "accuracy_by_band.csv", gamc::accuracy_by_band_csv(r));
        write_text(dir / "confusion_overall.csv", gamc::confusion_csv(r.confusion, r.label_table));
        for (const auto& [snr, m] : r.confusion_at_snr) {
          write_text(dir / ("confusion_" + std::to_string(snr) + "dB.csv"), gamc::confusion_csv(m, r.label_table));
        }
        write_text(dir / "complexity.csv", gamc::complexity_csv(r.complexity));
      }
    } else if (*pred) {
      const auto bundle = gamc::load_bundle(model_path);
      const auto ds = gamc::load_dataset(data_path);
      write_text(out_path, predictions_csv(bundle, gamc::predict(bundle, ds)));
    } else if (*report) {
      const auto bundle = gamc::load_bundle(model_path);
      const auto c = gamc::complexity_report(bundle);
      std::cout << gamc::complexity_text(c);
      if (!out_path.empty()) write_text(out_path, gamc::complexity_csv(c));
      if (!importance_out.empty()) write_text(importance_out, gamc::importance_csv(bundle.selector, bundle.feature_names));
    }
  } catch (const gamc::ConfigError& e) {
    std::cerr << "gamc: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gamc::DataError& e) {
    std::cerr << "gamc: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "gamc: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
