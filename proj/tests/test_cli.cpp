#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "gamc/gamc.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(GAMC_CLI_PATH) + " -q " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gamc_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    auto c = gamc::PipelineConfig{};
    c.synthetic.schemes = {"BPSK", "QPSK"};
    c.synthetic.snr_db = {0, 10};
    c.synthetic.frames_per_cell = 6;
    c.synthetic.frame_length = 48;
    c.graph.k_set = {4};
    c.q = 1;
    c.lnt.sizes = {4};
    c.lnt.folds = 2;
    c.cqi.n_estimators = 2;
    c.expert.n_estimators = 4;
    gamc::io::write_file(path("cfg.ini"), gamc::config_to_text(c));
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, EndToEnd) {
  EXPECT_EQ(run("init-config > " + path("default.ini")), 0);
  EXPECT_EQ(gamc::config_to_text(gamc::load_config(path("default.ini"))), gamc::config_to_text(gamc::PipelineConfig{}));

  ASSERT_EQ(run("synth -c " + path("cfg.ini") + " -o " + path("data.gamc")), 0);
  EXPECT_EQ(gamc::load_dataset(path("data.gamc")).frames.size(), 24u);

  ASSERT_EQ(run("train -c " + path("cfg.ini") + " -o " + path("model.gamb") + " --test-out " + path("test.gamc")), 0);
  EXPECT_EQ(run("eval -m " + path("model.gamb") + " -d " + path("test.gamc") + " -o " + path("report")), 0);
  EXPECT_TRUE(fs::exists(path("report/summary.txt")));
  EXPECT_TRUE(fs::exists(path("report/accuracy_by_snr.csv")));
  EXPECT_TRUE(fs::exists(path("report/confusion_0dB.csv")));
  EXPECT_TRUE(fs::exists(path("report/complexity.csv")));

  EXPECT_EQ(run("predict -m " + path("model.gamb") + " -d " + path("data.gamc") + " -o " + path("pred.csv")), 0);
  const auto pred = gamc::io::read_file(path("pred.csv"));
  EXPECT_EQ(pred.rfind("index,predicted,p.BPSK,p.QPSK\n", 0), 0u);
  EXPECT_EQ(std::count(pred.begin(), pred.end(), '\n'), 25);

  EXPECT_EQ(run("report -m " + path("model.gamb") + " -o " + path("complexity.csv") + " --importance " +
                path("importance.csv")),
            0);
  EXPECT_EQ(run("extract -c " + path("cfg.ini") + " -d " + path("data.gamc") + " -o " + path("features.csv")), 0);
}

TEST_F(CliTest, ExitCodes) {
  gamc::io::write_file(path("bad.ini"), "[moe]\nq = 0\n");
  EXPECT_EQ(run("train -c " + path("bad.ini") + " -o " + path("m.gamb")), 2);
  EXPECT_EQ(run("train -c " + path("missing.ini") + " -o " + path("m.gamb")), 2);
  EXPECT_EQ(run("train"), 2);
  EXPECT_EQ(run("--no-such-flag"), 2);

  gamc::io::write_file(path("junk.gamb"), "not a bundle");
  gamc::io::write_file(path("junk.gamc"), "not a dataset");
  EXPECT_EQ(run("report -m " + path("junk.gamb")), 3);
  EXPECT_EQ(run("eval -m " + path("junk.gamb") + " -d " + path("junk.gamc")), 3);
  EXPECT_EQ(run("eval -m " + path("missing.gamb") + " -d " + path("junk.gamc")), 3);
}
