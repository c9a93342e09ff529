#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gamc/gbt.hpp"

namespace {

gamc::TrainParams stump_params() {
  gamc::TrainParams p;
  p.max_depth = 1;
  p.n_estimators = 1;
  p.min_child_weight = 0.0;
  p.gamma = 0.0;
  p.reg_lambda = 1.0;
  p.split_mode = gamc::SplitMode::exact;
  return p;
}

struct Toy {
  gamc::Matrix x;
  std::vector<int> y;
};

Toy random_toy(std::size_t n, int d, int classes, std::uint64_t seed) {
  gamc::Rng rng(seed);
  Toy t{gamc::Matrix(static_cast<Eigen::Index>(n), d), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    t.y[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    for (int j = 0; j < d; ++j) t.x(static_cast<Eigen::Index>(i), j) = rng.normal() + (j == 0 ? t.y[i] : 0.0);
  }
  return t;
}

std::string serialize(const gamc::BoostedEnsemble& m) {
  gamc::io::BinaryWriter w;
  gamc::write_ensemble(w, m);
  return w.take();
}

}  // namespace

TEST(SplitGain, Examples) {
  EXPECT_DOUBLE_EQ(gamc::split_gain(1, 1, -1, 1, 1, 0), 0.5);
  for (double gl : {-3.0, 0.5, 2.0}) {
    const double g = gamc::split_gain(gl, 2.0, 0.0, 1.5, 1.0, 0.0);
    EXPECT_GE(g, 0.0);
    EXPECT_NEAR(g, 0.5 * (gl * gl / 3.0 - gl * gl / 4.5), 1e-12);
  }
  EXPECT_LT(gamc::split_gain(5, 1, -5, 1, 0.1, 1e6), 0.0);
}

TEST(Fit, OneDimensionalThreshold) {
  Toy t{gamc::Matrix(40, 1), std::vector<int>(40)};
  for (int i = 0; i < 40; ++i) {
    t.x(i, 0) = -2.0 + 0.1 * i;
    t.y[static_cast<std::size_t>(i)] = t.x(i, 0) < 0.0 ? 0 : 1;
  }
  auto p = stump_params();
  p.n_estimators = 10;
  const auto m = gamc::fit(t.x, t.y, 2, p);
  for (int i = 0; i < 40; ++i) {
    EXPECT_EQ(static_cast<int>(gamc::argmax(gamc::predict_proba(m, gamc::row_span(t.x, i)))), t.y[static_cast<std::size_t>(i)]);
  }
}

TEST(Fit, FirstSplitMatchesExhaustiveEnumeration) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = random_toy(20, 3, 3, seed);
    const auto p = stump_params();
    const auto m = gamc::fit(t.x, t.y, 3, p);

    // Independent oracle: gradients at the prior, every (feature, midpoint) split.
    std::vector<double> counts(3, 0.0);
    for (int y : t.y) counts[static_cast<std::size_t>(y)] += 1.0;
    std::vector<double> prior(3);
    for (int c = 0; c < 3; ++c) prior[static_cast<std::size_t>(c)] = std::log((counts[static_cast<std::size_t>(c)] + 1.0) / 23.0);
    const auto prob = gamc::softmax(prior);
    const double p0 = prob[0];
    int best_f = -1;
    double best_thr = 0.0;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int f = 0; f < 3; ++f) {
      std::vector<double> vals;
      for (int i = 0; i < 20; ++i) vals.push_back(t.x(i, f));
      std::sort(vals.begin(), vals.end());
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        const double thr = 0.5 * (vals[k] + vals[k + 1]);
        double gl = 0, hl = 0, gr = 0, hr = 0;
        for (int i = 0; i < 20; ++i) {
          const double g = p0 - (t.y[static_cast<std::size_t>(i)] == 0 ? 1.0 : 0.0);
          const double h = p0 * (1.0 - p0);
          if (t.x(i, f) <= thr) {
            gl += g;
            hl += h;
          } else {
            gr += g;
            hr += h;
          }
        }
        const double gain = 0.5 * (gl * gl / (hl + 1) + gr * gr / (hr + 1) - (gl + gr) * (gl + gr) / (hl + hr + 1));
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_f = f;
          best_thr = thr;
        }
      }
    }
    const auto& root = m.trees[0].nodes[0];
    ASSERT_FALSE(root.is_leaf());
    EXPECT_EQ(root.feature, best_f) << seed;
    EXPECT_NEAR(root.threshold, best_thr, 1e-12) << seed;
    EXPECT_NEAR(root.gain, best_gain, 1e-9) << seed;
  }
}

TEST(Fit, ToyModelRecoversTrainingLabels) {
  // Well-separated classes along feature 0.
  Toy t{gamc::Matrix(30, 3), std::vector<int>(30)};
  gamc::Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    const int y = i % 3;
    t.y[static_cast<std::size_t>(i)] = y;
    t.x(i, 0) = 10.0 * y + rng.uniform();
    t.x(i, 1) = rng.normal();
    t.x(i, 2) = rng.normal();
  }
  auto p = stump_params();
  p.n_estimators = 20;
  p.learning_rate = 0.3;
  const auto m = gamc::fit(t.x, t.y, 3, p);
  for (int i = 0; i < 30; ++i) {
    EXPECT_EQ(static_cast<int>(gamc::argmax(gamc::predict_proba(m, gamc::row_span(t.x, i)))), t.y[static_cast<std::size_t>(i)]);
  }
}

TEST(Fit, StructureRespectsParams) {
  const auto t = random_toy(300, 6, 4, 11);
  auto p = gamc::expert_params();
  p.n_estimators = 15;
  std::vector<double> loss;
  const auto m = gamc::fit(t.x, t.y, 4, p, &loss);
  EXPECT_EQ(m.trees.size(), 15u * 4u);
  EXPECT_EQ(m.rounds(), 15u);
  for (const auto& tree : m.trees) EXPECT_LE(tree.depth(), 2);
  for (double v : m.importance) EXPECT_GE(v, 0.0);
  ASSERT_EQ(loss.size(), 16u);
  EXPECT_LT(loss.back(), loss.front());
}

TEST(Fit, HistModeUsesAtMostMaxBins) {
  const auto t = random_toy(2000, 2, 2, 3);
  auto p = stump_params();
  p.split_mode = gamc::SplitMode::hist;
  p.max_bins = 16;
  const auto bm = gamc::bin_features(t.x, p.split_mode, p.max_bins);
  for (const auto& c : bm.cuts) EXPECT_LE(c.size() + 1, 16u);
  EXPECT_NO_THROW(gamc::fit(t.x, t.y, 2, p));
}

TEST(Fit, DeterministicGivenSeed) {
  const auto t = random_toy(200, 5, 3, 2);
  auto p = gamc::cqi_params();
  p.n_estimators = 10;
  const auto a = serialize(gamc::fit(t.x, t.y, 3, p));
  const auto b = serialize(gamc::fit(t.x, t.y, 3, p));
  EXPECT_EQ(a, b);
  p.rng_seed = 1;
  EXPECT_NE(serialize(gamc::fit(t.x, t.y, 3, p)), a);
}

TEST(Fit, Errors) {
  const auto t = random_toy(10, 2, 2, 1);
  const auto p = stump_params();
  EXPECT_THROW(gamc::fit(gamc::Matrix(0, 2), {}, 2, p), gamc::DataError);
  EXPECT_THROW(gamc::fit(t.x, std::span<const int>(t.y).first(5), 2, p), gamc::DataError);
  EXPECT_THROW(gamc::fit(t.x, t.y, 1, p), gamc::ConfigError);
  auto bad = t.x;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(gamc::fit(bad, t.y, 2, p), gamc::DataError);
  auto labels = t.y;
  labels[0] = 7;
  EXPECT_THROW(gamc::fit(t.x, labels, 2, p), gamc::DataError);
  auto q = p;
  q.subsample = 0.0;
  EXPECT_THROW(gamc::fit(t.x, t.y, 2, q), gamc::ConfigError);
}

TEST(Fit, SingleClassGivesConstantModel) {
  auto t = random_toy(12, 2, 2, 4);
  std::fill(t.y.begin(), t.y.end(), 1);
  const auto m = gamc::fit(t.x, t.y, 3, stump_params());
  EXPECT_TRUE(m.single_class);
  EXPECT_TRUE(m.trees.empty());
  const auto p = gamc::predict_proba(m, gamc::row_span(t.x, 0));
  EXPECT_EQ(gamc::argmax(p), 1u);
}

TEST(Predict, ZeroRoundUniform) {
  const auto m = gamc::constant_ensemble(3, 4);
  const std::vector<double> x(4, 0.5);
  for (double v : gamc::predict_proba(m, x)) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);

  // Balanced labels with no rounds also give the uniform vector.
  Toy t{gamc::Matrix::Zero(6, 4), {0, 1, 2, 0, 1, 2}};
  auto p = stump_params();
  p.n_estimators = 0;
  for (double v : gamc::predict_proba(gamc::fit(t.x, t.y, 3, p), x)) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Predict, ProbabilitiesAreASimplex) {
  const auto t = random_toy(200, 4, 5, 6);
  auto p = gamc::expert_params();
  p.n_estimators = 20;
  const auto m = gamc::fit(t.x, t.y, 5, p);
  gamc::Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(4);
    for (auto& v : x) v = 50.0 * rng.normal();
    const auto pr = gamc::predict_proba(m, x);
    double s = 0.0;
    for (double v : pr) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_THROW(gamc::predict_proba(m, std::vector<double>(3)), gamc::DataError);
}

TEST(Importance, SingleSplitModel) {
  const auto t = random_toy(50, 3, 2, 7);
  const auto m = gamc::fit(t.x, t.y, 2, stump_params());
  const auto imp = gamc::feature_importance(m);
  // Two stumps, one per class; in the binary case both split on the same feature.
  double total = 0.0;
  for (const auto& tree : m.trees) {
    if (!tree.nodes[0].is_leaf()) total += tree.nodes[0].gain;
  }
  double sum = 0.0;
  for (const auto& [f, g] : imp) sum += g;
  EXPECT_NEAR(sum, total, 1e-12);
  const auto& root = m.trees[0].nodes[0];
  ASSERT_FALSE(root.is_leaf());
  EXPECT_GE(imp.at(root.feature), root.gain);
}

TEST(Importance, DuplicatedFeatureSplitsMass) {
  const auto t = random_toy(150, 3, 3, 8);
  auto p = gamc::expert_params();
  p.colsample_bytree = 1.0;
  p.subsample = 1.0;
  p.n_estimators = 10;
  const auto base = gamc::fit(t.x, t.y, 3, p);
  gamc::Matrix dup(t.x.rows(), 4);
  dup.leftCols(3) = t.x;
  dup.col(3) = t.x.col(0);
  const auto m = gamc::fit(dup, t.y, 3, p);
  EXPECT_NEAR(m.importance[0] + m.importance[3], base.importance[0], 1e-9);
  EXPECT_EQ(m.importance[3], 0.0);
}

TEST(Importance, ConstantFeatureUnused) {
  auto t = random_toy(100, 3, 2, 10);
  t.x.col(2).setConstant(4.2);
  auto p = gamc::expert_params();
  p.n_estimators = 10;
  const auto m = gamc::fit(t.x, t.y, 2, p);
  EXPECT_EQ(m.importance[2], 0.0);
  EXPECT_EQ(gamc::feature_importance(m).count(2), 0u);
}

TEST(Serialization, RoundTripAndCorruption) {
  const auto t = random_toy(100, 3, 3, 12);
  auto p = gamc::expert_params();
  p.n_estimators = 5;
  const auto m = gamc::fit(t.x, t.y, 3, p);
  const auto bytes = serialize(m);
  gamc::io::BinaryReader r(bytes, "ensemble");
  const auto back = gamc::read_ensemble(r);
  EXPECT_EQ(serialize(back), bytes);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(gamc::predict_proba(back, gamc::row_span(t.x, i)), gamc::predict_proba(m, gamc::row_span(t.x, i)));
  }
  gamc::io::BinaryReader short_reader(std::string_view(bytes).substr(0, bytes.size() / 2), "ensemble");
  EXPECT_THROW(gamc::read_ensemble(short_reader), gamc::FormatError);
}
