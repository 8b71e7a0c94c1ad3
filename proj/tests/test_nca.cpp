#include <gtest/gtest.h>

#include <numeric>

#include "test_util.hpp"

using namespace uavrf;

namespace {

struct Toy {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

/// Column 0 carries the label, column 1 is pure noise.
Toy informative_plus_noise(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Toy t;
  t.x.resize(static_cast<Eigen::Index>(3 * per_class), 2);
  for (std::size_t i = 0; i < 3 * per_class; ++i) {
    const int c = static_cast<int>(i % 3);
    t.x(static_cast<Eigen::Index>(i), 0) = 3.0 * c + 0.3 * n(rng);
    t.x(static_cast<Eigen::Index>(i), 1) = n(rng);
    t.y.push_back(c);
  }
  for (Eigen::Index r = 0; r < 2; ++r) {
    const double mu = t.x.col(r).mean();
    const double sd = std::sqrt((t.x.col(r).array() - mu).square().mean());
    t.x.col(r) = (t.x.col(r).array() - mu) / sd;
  }
  return t;
}

}  // namespace

TEST(Nca, InformativeFeatureOutweighsNoise) {
  const auto t = informative_plus_noise(30, 31);
  const auto m = nca_fit(t.x, t.y);
  EXPECT_GE(m.weights[0], 2.0 * m.weights[1]);
  EXPECT_EQ(select_features(m, 0.5), (std::vector<std::size_t>{0}));
}

TEST(Nca, HeavyRegularisationShrinksWeights) {
  const auto t = informative_plus_noise(20, 32);
  NcaConfig cfg;
  cfg.lambda = 100.0;
  cfg.max_iters = 500;
  const auto m = nca_fit(t.x, t.y, cfg);
  EXPECT_LT(m.weights.maxCoeff(), 1e-3);
}

TEST(Nca, GradientMatchesFiniteDifference) {
  const auto t = informative_plus_noise(10, 33);
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd w(2);
    w << u(rng), u(rng);
    const auto ev = nca_evaluate(t.x, t.y, w, 0.05, 1.0);
    for (Eigen::Index r = 0; r < 2; ++r) {
      const double h = 1e-6;
      Eigen::VectorXd wp = w, wm = w;
      wp[r] += h;
      wm[r] -= h;
      const double fd = (nca_evaluate(t.x, t.y, wp, 0.05, 1.0, false).objective -
                         nca_evaluate(t.x, t.y, wm, 0.05, 1.0, false).objective) /
                        (2.0 * h);
      EXPECT_NEAR(ev.gradient[r], fd, 1e-5);
    }
  }
}

TEST(Nca, TraceNeverDecreasesAndProbabilitiesAreValid) {
  const auto t = informative_plus_noise(25, 35);
  const auto m = nca_fit(t.x, t.y);
  for (std::size_t k = 1; k < m.objective_trace.size(); ++k)
    EXPECT_GE(m.objective_trace[k], m.objective_trace[k - 1]);
  ASSERT_EQ(m.loo_probs.size(), t.y.size());
  for (double p : m.loo_probs) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
  EXPECT_DOUBLE_EQ(m.lambda, 1.0 / 75.0);
}

TEST(Nca, SamplePermutationLeavesWeightsUnchanged) {
  const auto t = informative_plus_noise(15, 36);
  std::vector<Eigen::Index> perm(t.y.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(37);
  std::shuffle(perm.begin(), perm.end(), rng);
  Toy s;
  s.x.resize(t.x.rows(), t.x.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    s.x.row(static_cast<Eigen::Index>(i)) = t.x.row(perm[i]);
    s.y.push_back(t.y[static_cast<std::size_t>(perm[i])]);
  }
  const auto a = nca_fit(t.x, t.y), b = nca_fit(s.x, s.y);
  for (Eigen::Index r = 0; r < 2; ++r) EXPECT_NEAR(a.weights[r], b.weights[r], 1e-8);
}

TEST(Nca, DuplicatedColumnsGetEqualWeights) {
  const auto t = informative_plus_noise(15, 38);
  Eigen::MatrixXd x(t.x.rows(), 3);
  x << t.x, t.x.col(0);
  const auto m = nca_fit(x, t.y);
  EXPECT_NEAR(m.weights[0], m.weights[2], 1e-10);
}

TEST(Nca, InputChecks) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 2);
  EXPECT_THROW(nca_fit(x, std::vector<int>{1, 1, 1, 1}), Error);
  EXPECT_THROW(nca_fit(x, std::vector<int>{1, 2, 1}), Error);
  EXPECT_THROW(nca_fit(Eigen::MatrixXd::Zero(1, 2), std::vector<int>{1}), Error);
}

TEST(SelectFeatures, ThresholdRule) {
  NcaModel m;
  m.weights = Eigen::Vector4d(1.0, 0.9, 0.05, 0.4);
  EXPECT_EQ(select_features(m, 0.1), (std::vector<std::size_t>{0, 1, 3}));
  m.weights = Eigen::Vector4d::Constant(0.3);
  EXPECT_EQ(select_features(m, 0.1), (std::vector<std::size_t>{0, 1, 2, 3}));
  m.weights = Eigen::Vector4d::Zero();
  EXPECT_EQ(select_features(m, 0.1).size(), 4u);
  EXPECT_THROW(select_features(m, 1.5), Error);
}
