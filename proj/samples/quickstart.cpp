// Train a small two-band model on synthetic frames and print its held-out accuracy.

#include <iostream>

#include "gamc/gamc.hpp"
#include "gamc/report.hpp"

int main() {
  gamc::PipelineConfig cfg;
  cfg.synthetic.schemes = {"BPSK", "QPSK", "8PSK", "QAM16"};
  cfg.synthetic.snr_db = {-10, 0, 10, 18};
  cfg.synthetic.frames_per_cell = 40;
  cfg.q = 2;
  cfg.lnt.sizes = {16, 32};
  cfg.expert.n_estimators = 40;
  cfg.cqi.n_estimators = 40;

  const auto outcome = gamc::train_with_split(cfg, [](const std::string& m) { std::cerr << m << '\n'; });
  const auto test = gamc::subset(outcome.dataset, outcome.split.test);
  const auto report = gamc::evaluate(outcome.bundle, test);
  std::cout << gamc::summary_text(report);
}
