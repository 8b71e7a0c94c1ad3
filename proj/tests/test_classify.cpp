#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "test_util.hpp"

using namespace uavrf;

namespace {

struct Blobs {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Blobs gaussian_blobs(int n_classes, int per_class, double spread, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  Blobs b;
  b.x.resize(n_classes * per_class, 4);
  for (int i = 0; i < n_classes * per_class; ++i) {
    const int c = i % n_classes;
    for (int r = 0; r < 4; ++r) b.x(i, r) = spread * ((c >> (r % 2)) & 1 ? 1.0 : -1.0) * (r < 2) + spread * c * (r == 2) + n(rng);
    b.y.push_back(c + 1);
  }
  return b;
}

ErrorCode train_error(ClassifierKind kind, const Eigen::MatrixXd& x, const std::vector<int>& y,
                      Hyperparams hp = {}) {
  try {
    train(kind, x, y, all_features(static_cast<std::size_t>(x.cols())), hp);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

/// Majority vote over the k nearest after population standardisation; ties
/// go to the label whose closest member comes first in (distance, index).
int brute_knn(const Eigen::MatrixXd& train_x, const std::vector<int>& y, int k, const Eigen::VectorXd& q) {
  const Eigen::RowVectorXd mean = train_x.colwise().mean();
  Eigen::RowVectorXd sd = ((train_x.rowwise() - mean).array().square().colwise().sum() / train_x.rows()).sqrt();
  for (Eigen::Index r = 0; r < sd.size(); ++r)
    if (sd[r] == 0.0) sd[r] = 1.0;
  const Eigen::RowVectorXd zq = (q.transpose() - mean).array() / sd.array();
  std::vector<std::pair<double, int>> d;
  for (Eigen::Index i = 0; i < train_x.rows(); ++i) {
    const Eigen::RowVectorXd zi = (train_x.row(i) - mean).array() / sd.array();
    d.push_back({(zi - zq).squaredNorm(), static_cast<int>(i)});
  }
  std::sort(d.begin(), d.end());
  std::map<int, int> votes;
  for (int r = 0; r < k; ++r) ++votes[y[d[r].second]];
  int top = 0;
  for (const auto& [label, v] : votes) top = std::max(top, v);
  for (int r = 0; r < k; ++r)
    if (votes[y[d[r].second]] == top) return y[d[r].second];
  return -1;
}

}  // namespace

TEST(Classify, DiscriminantSeparatesWideBlobs) {
  const auto b = gaussian_blobs(4, 30, 10.0, 0.5, 41);
  const auto c = train(ClassifierKind::Da, b.x, b.y, all_features());
  EXPECT_EQ(confusion_matrix(c, b.x, b.y, 4).accuracy(), 1.0);
}

TEST(Classify, SvmZeroTrainingErrorWhenSeparable) {
  const auto b = gaussian_blobs(3, 25, 6.0, 0.3, 42);
  const auto c = train(ClassifierKind::Svm, b.x, b.y, all_features());
  EXPECT_EQ(confusion_matrix(c, b.x, b.y, 3).accuracy(), 1.0);
}

TEST(Classify, NearestNeighbourRecallsTrainingSet) {
  const auto b = gaussian_blobs(5, 10, 1.0, 1.0, 43);
  Hyperparams hp;
  hp.knn_k = 1;
  const auto c = train(ClassifierKind::Knn, b.x, b.y, all_features(), hp);
  for (Eigen::Index i = 0; i < b.x.rows(); ++i) EXPECT_EQ(predict(c, b.x, i), b.y[static_cast<std::size_t>(i)]);
}

TEST(Classify, DiscriminantEqualMeansPicksLowestId) {
  Eigen::MatrixXd x(6, 2);
  x << 0, 0, 1, 1, 2, 0, 0, 0, 1, 1, 2, 0;
  const std::vector<int> y = {2, 2, 2, 1, 1, 1};
  const auto c = train(ClassifierKind::Da, x, y, {0, 1});
  const std::vector<double> q = {5.0, -3.0};
  EXPECT_EQ(predict(c, q), 1);
}

TEST(Classify, KnnTieGoesToEarliestNeighbour) {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 1.0, 3.0, 10.0;
  const std::vector<int> y = {2, 1, 2, 1};
  Hyperparams hp;
  hp.knn_k = 2;
  const auto c = train(ClassifierKind::Knn, x, y, {0}, hp);
  // From 0.9 the two nearest are 1.0 (class 1) then 0.0 (class 2).
  EXPECT_EQ(predict(c, std::vector<double>{0.9}), 1);
  EXPECT_EQ(predict(c, std::vector<double>{0.2}), 2);
}

TEST(Classify, KnnMatchesBruteForce) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto b = gaussian_blobs(4, 20, 1.0, 1.0, 45);
  for (int k : {1, 2, 3, 4, 7}) {
    Hyperparams hp;
    hp.knn_k = k;
    const auto c = train(ClassifierKind::Knn, b.x, b.y, all_features(), hp);
    for (int q = 0; q < 200; ++q) {
      Eigen::VectorXd v(4);
      for (auto& e : v) e = u(rng);
      EXPECT_EQ(predict(c, std::span<const double>(v.data(), 4)), brute_knn(b.x, b.y, k, v));
    }
  }
}

TEST(Classify, PowerOfTwoRescalingLeavesPredictionsUnchanged) {
  const auto b = gaussian_blobs(4, 20, 1.5, 1.0, 46);
  Eigen::MatrixXd scaled = b.x;
  scaled.col(0) *= 8.0;
  scaled.col(3) *= 0.25;
  for (auto kind : {ClassifierKind::Knn, ClassifierKind::Da, ClassifierKind::Svm}) {
    Hyperparams hp;
    hp.svm_epochs = 50;
    const auto a = train(kind, b.x, b.y, all_features(), hp);
    const auto s = train(kind, scaled, b.y, all_features(), hp);
    for (Eigen::Index i = 0; i < b.x.rows(); ++i) EXPECT_EQ(predict(a, b.x, i), predict(s, scaled, i)) << to_string(kind);
  }
}

TEST(Classify, DiscriminantBoundaryIsLinear) {
  const auto b = gaussian_blobs(2, 40, 1.0, 1.0, 47);
  const auto c = train(ClassifierKind::Da, b.x, b.y, all_features());
  std::mt19937_64 rng(48);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int line = 0; line < 50; ++line) {
    Eigen::VectorXd p0(4), p1(4);
    for (int r = 0; r < 4; ++r) {
      p0[r] = u(rng);
      p1[r] = u(rng);
    }
    int changes = 0, prev = 0;
    for (int t = 0; t <= 200; ++t) {
      const Eigen::VectorXd q = p0 + (p1 - p0) * (t / 200.0);
      const int cls = predict(c, std::span<const double>(q.data(), 4));
      if (t > 0 && cls != prev) ++changes;
      prev = cls;
    }
    EXPECT_LE(changes, 1);
  }
}

TEST(Confusion, SumsAndExtremes) {
  const std::vector<int> target = {1, 1, 2, 3, 3, 3};
  const auto perfect = confusion_from_predictions(target, target, 3);
  EXPECT_EQ(perfect.total(), 6);
  EXPECT_EQ(perfect.accuracy(), 1.0);
  EXPECT_EQ(perfect.counts.col(2).sum(), 3);
  const std::vector<int> constant(6, 3);
  const auto cm = confusion_from_predictions(constant, target, 3);
  EXPECT_DOUBLE_EQ(cm.accuracy(), 0.5);
  EXPECT_EQ(cm.counts.row(2).sum(), 6);
  const auto per = cm.per_class_accuracy();
  EXPECT_EQ(per[0], 0.0);
  EXPECT_EQ(per[2], 1.0);
  std::ostringstream out;
  write_confusion_csv(out, cm);
  EXPECT_EQ(out.str(), "predicted\\target,1,2,3\n1,0,0,0\n2,0,0,0\n3,2,1,3\n");
  EXPECT_THROW(confusion_from_predictions(std::vector<int>{}, std::vector<int>{}, 3), Error);
  EXPECT_THROW(confusion_from_predictions(std::vector<int>{4}, std::vector<int>{1}, 3), Error);
}

TEST(Classify, JsonRoundTripPredictsIdentically) {
  const auto b = gaussian_blobs(3, 15, 1.0, 1.0, 49);
  for (auto kind : {ClassifierKind::Knn, ClassifierKind::Da, ClassifierKind::Svm}) {
    Hyperparams hp;
    hp.svm_epochs = 40;
    const auto c = train(kind, b.x, b.y, {0, 2, 3}, hp);
    const auto back = classifier_from_json(nlohmann::json::parse(to_json(c).dump()));
    EXPECT_EQ(back.feature_indices, c.feature_indices);
    for (Eigen::Index i = 0; i < b.x.rows(); ++i) EXPECT_EQ(predict(back, b.x, i), predict(c, b.x, i));
  }
}

TEST(Classify, ErrorConditions) {
  Eigen::MatrixXd x(3, 2);
  x << 0, 1, 2, 3, 4, 5;
  EXPECT_EQ(train_error(ClassifierKind::Da, x, {1, 1, 2}), ErrorCode::SingletonClass);
  EXPECT_EQ(train_error(ClassifierKind::Knn, x, {1, 1, 1}), ErrorCode::SingleClass);
  Hyperparams hp;
  hp.knn_k = 5;
  EXPECT_EQ(train_error(ClassifierKind::Knn, x, {1, 2, 1}, hp), ErrorCode::TooFewSamples);
  EXPECT_EQ(train_error(ClassifierKind::Svm, x, {1, 2}), ErrorCode::ArityMismatch);
  const std::vector<int> y = {1, 2, 1};
  const auto c = train(ClassifierKind::Knn, x, y, {0, 1}, Hyperparams{1});
  EXPECT_THROW(predict(c, std::vector<double>{1.0}), Error);
  EXPECT_THROW(confusion_matrix(c, Eigen::MatrixXd(0, 2), std::vector<int>{}, 2), Error);
  EXPECT_THROW(classifier_kind_from_string("tree"), Error);
}

TEST(Classify, TuningPicksFromGridDeterministically) {
  const auto b = gaussian_blobs(3, 20, 1.0, 1.0, 50);
  HyperparamGrid grid;
  grid.svm_epochs = 20;
  const auto a = tune_hyperparams(ClassifierKind::Knn, b.x, b.y, all_features(), grid, 7);
  const auto c = tune_hyperparams(ClassifierKind::Knn, b.x, b.y, all_features(), grid, 7);
  EXPECT_EQ(a.knn_k, c.knn_k);
  EXPECT_NE(std::find(grid.knn_k.begin(), grid.knn_k.end(), a.knn_k), grid.knn_k.end());
  const auto folds = stratified_folds(b.y, 5, 3);
  for (int f = 0; f < 5; ++f) EXPECT_EQ(std::count(folds.begin(), folds.end(), f), 12);
  grid.da_ridge.clear();
  EXPECT_THROW(tune_hyperparams(ClassifierKind::Da, b.x, b.y, all_features(), grid, 7), Error);
}
