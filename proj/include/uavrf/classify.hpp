#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "uavrf/error.hpp"
#include "uavrf/features.hpp"

namespace uavrf {

/// Feature table as a dense matrix, one row per sample, columns in
/// kFeatureNames order.
inline Eigen::MatrixXd to_matrix(const FeatureMatrix& m) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(m.rows.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto row = m.rows[i].as_array();
    for (std::size_t r = 0; r < kFeatureCount; ++r) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = row[r];
  }
  return x;
}

inline Eigen::MatrixXd take_columns(const Eigen::MatrixXd& x, std::span<const std::size_t> cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    require(cols[c] < static_cast<std::size_t>(x.cols()), ErrorCode::ArityMismatch, "feature index out of range");
    out.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(cols[c]));
  }
  return out;
}

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

/// Per-feature z-scoring; statistics come from training data only.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x) {
    require(x.rows() >= 1, ErrorCode::Empty, "cannot standardise an empty matrix");
    Standardizer s;
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Eigen::Index r = 0; r < x.cols(); ++r) {
      const double var = (x.col(r).array() - s.mean[r]).square().mean();
      s.scale[r] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    require(x.cols() == mean.size(), ErrorCode::ArityMismatch, "feature count mismatch");
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    require(x.size() == mean.size(), ErrorCode::ArityMismatch, "feature count mismatch");
    return (x - mean).cwiseQuotient(scale);
  }
};

enum class ClassifierKind { Knn, Da, Svm };

inline std::string to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::Da: return "da";
    case ClassifierKind::Svm: return "svm";
  }
  return "?";
}

inline ClassifierKind classifier_kind_from_string(const std::string& s) {
  if (s == "knn") return ClassifierKind::Knn;
  if (s == "da") return ClassifierKind::Da;
  if (s == "svm") return ClassifierKind::Svm;
  fail(ErrorCode::BadConfig, "unknown classifier kind '" + s + "'");
}

struct Hyperparams {
  int knn_k = 3;
  double da_ridge = 1e-6;
  double svm_lambda = 1e-3;
  int svm_epochs = 500;
};

struct KnnModel {
  int k = 3;
  Eigen::MatrixXd train;
  std::vector<int> labels;
};

/// Gaussian discriminant with a pooled covariance; stores the linear score
/// coefficients score_c(x) = coef_c . x + bias_c.
struct DaModel {
  std::vector<int> classes;
  Eigen::MatrixXd means;  // class x feature
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd coef;   // class x feature
  Eigen::VectorXd bias;
  double ridge = 0.0;
};

/// One-vs-one linear SVMs; pair (a, b) votes a when w.x + bias > 0.
struct SvmModel {
  struct Pair {
    int a = 0;
    int b = 0;
    Eigen::VectorXd w;
    double bias = 0.0;
  };
  std::vector<int> classes;
  std::vector<Pair> pairs;
  double lambda = 0.0;
  int epochs = 0;
};

struct TrainedClassifier {
  ClassifierKind kind = ClassifierKind::Knn;
  std::vector<std::size_t> feature_indices;
  Standardizer standardizer;
  std::variant<KnnModel, DaModel, SvmModel> model;
};

namespace detail {

inline std::map<int, int> class_counts(std::span<const int> y) {
  std::map<int, int> counts;
  for (int v : y) ++counts[v];
  return counts;
}

inline KnnModel fit_knn(const Eigen::MatrixXd& z, std::span<const int> y, int k) {
  require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
  require(z.rows() >= k + 1, ErrorCode::TooFewSamples, "kNN needs at least k+1 training samples");
  return {k, z, std::vector<int>(y.begin(), y.end())};
}

inline DaModel fit_da(const Eigen::MatrixXd& z, std::span<const int> y, double ridge) {
  const auto counts = class_counts(y);
  DaModel m;
  m.ridge = ridge;
  const Eigen::Index p = z.cols();
  m.means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(counts.size()), p);
  std::map<int, Eigen::Index> row_of;
  for (const auto& [label, count] : counts) {
    require(count >= 2, ErrorCode::SingletonClass, "class " + std::to_string(label) + " has a single sample");
    row_of[label] = static_cast<Eigen::Index>(m.classes.size());
    m.classes.push_back(label);
  }
  for (Eigen::Index i = 0; i < z.rows(); ++i) m.means.row(row_of[y[i]]) += z.row(i);
  for (const auto& [label, count] : counts) m.means.row(row_of[label]) /= count;

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Eigen::VectorXd d = (z.row(i) - m.means.row(row_of[y[i]])).transpose();
    scatter += d * d.transpose();
  }
  const double dof = static_cast<double>(z.rows() - static_cast<Eigen::Index>(counts.size()));
  m.covariance = scatter / std::max(dof, 1.0) + ridge * Eigen::MatrixXd::Identity(p, p);
  const Eigen::LDLT<Eigen::MatrixXd> solver(m.covariance);
  require(solver.info() == Eigen::Success && solver.isPositive(), ErrorCode::InvalidArgument,
          "pooled covariance is not positive definite");
  m.coef = solver.solve(m.means.transpose()).transpose();
  m.bias.resize(m.means.rows());
  for (Eigen::Index c = 0; c < m.means.rows(); ++c) m.bias[c] = -0.5 * m.coef.row(c).dot(m.means.row(c));
  return m;
}

/// Pegasos-style subgradient descent on the regularised hinge loss with a
/// constant feature standing in for the bias. Samples are visited in a fixed
/// seeded order; the epoch iterate with the lowest primal objective is kept.
inline std::pair<Eigen::VectorXd, double> fit_linear_svm(const Eigen::MatrixXd& z, std::span<const double> sign,
                                                         double lambda, int epochs, std::uint64_t seed) {
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd best = w;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  auto margin = [&](const Eigen::VectorXd& v, Eigen::Index i) { return z.row(i).dot(v.head(p)) + v[p]; };
  double t = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index i : order) {
      t += 1.0;
      const double eta = 1.0 / (lambda * t);
      const bool violated = sign[i] * margin(w, i) < 1.0;
      w *= (1.0 - eta * lambda);
      if (violated) {
        w.head(p) += eta * sign[i] * z.row(i).transpose();
        w[p] += eta * sign[i];
      }
    }
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) hinge += std::max(0.0, 1.0 - sign[i] * margin(w, i));
    const double obj = 0.5 * lambda * w.squaredNorm() + hinge / static_cast<double>(n);
    if (obj < best_obj) {
      best_obj = obj;
      best = w;
    }
  }
  return {best.head(p), best[p]};
}

inline SvmModel fit_svm(const Eigen::MatrixXd& z, std::span<const int> y, double lambda, int epochs) {
  require(lambda > 0.0 && epochs >= 1, ErrorCode::InvalidArgument, "SVM needs lambda > 0 and epochs >= 1");
  const auto counts = class_counts(y);
  SvmModel m;
  m.lambda = lambda;
  m.epochs = epochs;
  for (const auto& kv : counts) m.classes.push_back(kv.first);
  for (std::size_t ia = 0; ia < m.classes.size(); ++ia) {
    for (std::size_t ib = ia + 1; ib < m.classes.size(); ++ib) {
      const int a = m.classes[ia];
      const int b = m.classes[ib];
      std::vector<std::size_t> rows;
      std::vector<double> sign;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == a || y[i] == b) {
          rows.push_back(i);
          sign.push_back(y[i] == a ? 1.0 : -1.0);
        }
      }
      const Eigen::MatrixXd sub = take_rows(z, rows);
      auto [w, bias] = fit_linear_svm(sub, sign, lambda, epochs,
                                      static_cast<std::uint64_t>(a) * 1000003ULL + static_cast<std::uint64_t>(b));
      m.pairs.push_back({a, b, std::move(w), bias});
    }
  }
  return m;
}

inline int predict_knn(const KnnModel& m, const Eigen::VectorXd& z) {
  const Eigen::Index n = m.train.rows();
  std::vector<std::pair<double, Eigen::Index>> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d[i] = {(m.train.row(i).transpose() - z).squaredNorm(), i};
  const auto k = static_cast<std::size_t>(std::min<Eigen::Index>(m.k, n));
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  // Votes, and the rank of each label's nearest member for tie-breaking.
  std::map<int, std::pair<int, std::size_t>> tally;
  for (std::size_t r = 0; r < k; ++r) {
    auto [it, inserted] = tally.try_emplace(m.labels[d[r].second], 0, r);
    ++it->second.first;
  }
  int best_label = 0;
  int best_votes = -1;
  std::size_t best_rank = 0;
  for (const auto& [label, vr] : tally) {
    if (vr.first > best_votes || (vr.first == best_votes && vr.second < best_rank)) {
      best_label = label;
      best_votes = vr.first;
      best_rank = vr.second;
    }
  }
  return best_label;
}

inline int predict_da(const DaModel& m, const Eigen::VectorXd& z) {
  const Eigen::VectorXd score = m.coef * z + m.bias;
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < score.size(); ++c) {
    if (score[c] > score[best]) best = c;
  }
  return m.classes[static_cast<std::size_t>(best)];
}

inline int predict_svm(const SvmModel& m, const Eigen::VectorXd& z) {
  std::map<int, std::pair<int, double>> tally;  // votes, summed signed margin
  for (int c : m.classes) tally[c] = {0, 0.0};
  for (const auto& pr : m.pairs) {
    const double s = pr.w.dot(z) + pr.bias;
    ++tally[s > 0.0 ? pr.a : pr.b].first;
    tally[pr.a].second += s;
    tally[pr.b].second -= s;
  }
  int best = m.classes.front();
  for (const auto& [c, vm] : tally) {
    const auto& cur = tally[best];
    if (vm.first > cur.first || (vm.first == cur.first && vm.second > cur.second)) best = c;
  }
  return best;
}

}  // namespace detail

/// Fits a classifier on the given feature columns of `x`. Standardisation
/// statistics come from `x` and are stored with the model.
inline TrainedClassifier train(ClassifierKind kind, const Eigen::MatrixXd& x, std::span<const int> y,
                               std::vector<std::size_t> feature_indices, const Hyperparams& hp = {}) {
  require(static_cast<std::size_t>(x.rows()) == y.size(), ErrorCode::ArityMismatch, "label count != sample count");
  require(!feature_indices.empty(), ErrorCode::InvalidArgument, "no features selected");
  require(detail::class_counts(y).size() >= 2, ErrorCode::SingleClass, "need at least 2 classes");
  TrainedClassifier c;
  c.kind = kind;
  c.feature_indices = std::move(feature_indices);
  const Eigen::MatrixXd sel = take_columns(x, c.feature_indices);
  c.standardizer = Standardizer::fit(sel);
  const Eigen::MatrixXd z = c.standardizer.apply(sel);
  switch (kind) {
    case ClassifierKind::Knn: c.model = detail::fit_knn(z, y, hp.knn_k); break;
    case ClassifierKind::Da: c.model = detail::fit_da(z, y, hp.da_ridge); break;
    case ClassifierKind::Svm: c.model = detail::fit_svm(z, y, hp.svm_lambda, hp.svm_epochs); break;
  }
  return c;
}

inline std::vector<std::size_t> all_features(std::size_t count = kFeatureCount) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

/// Predicts from a full-width feature row.
inline int predict(const TrainedClassifier& c, std::span<const double> row) {
  Eigen::VectorXd sel(static_cast<Eigen::Index>(c.feature_indices.size()));
  for (std::size_t i = 0; i < c.feature_indices.size(); ++i) {
    require(c.feature_indices[i] < row.size(), ErrorCode::ArityMismatch,
            "feature row has " + std::to_string(row.size()) + " columns");
    sel[static_cast<Eigen::Index>(i)] = row[c.feature_indices[i]];
  }
  const Eigen::VectorXd z = c.standardizer.apply(sel);
  return std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, KnnModel>) return detail::predict_knn(m, z);
        else if constexpr (std::is_same_v<M, DaModel>) return detail::predict_da(m, z);
        else return detail::predict_svm(m, z);
      },
      c.model);
}

inline int predict(const TrainedClassifier& c, const Eigen::MatrixXd& x, Eigen::Index row) {
  const Eigen::VectorXd r = x.row(row).transpose();
  return predict(c, std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
}

/// Counts with rows = predicted class and columns = true class (ids 1..n).
struct ConfusionMatrix {
  int n_classes = 0;
  Eigen::MatrixXi counts;

  int total() const { return counts.sum(); }
  double accuracy() const { return static_cast<double>(counts.trace()) / static_cast<double>(total()); }
  /// Fraction of each true class predicted correctly (NaN for absent classes).
  std::vector<double> per_class_accuracy() const {
    std::vector<double> out(static_cast<std::size_t>(n_classes));
    for (int c = 0; c < n_classes; ++c) {
      const int col = counts.col(c).sum();
      out[static_cast<std::size_t>(c)] = col > 0 ? static_cast<double>(counts(c, c)) / col : std::nan("");
    }
    return out;
  }
};

inline ConfusionMatrix confusion_from_predictions(std::span<const int> predicted, std::span<const int> target,
                                                  int n_classes) {
  require(!target.empty(), ErrorCode::Empty, "empty test set");
  require(predicted.size() == target.size(), ErrorCode::ArityMismatch, "prediction count != target count");
  ConfusionMatrix cm;
  cm.n_classes = n_classes;
  cm.counts = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < target.size(); ++i) {
    require(target[i] >= 1 && target[i] <= n_classes && predicted[i] >= 1 && predicted[i] <= n_classes,
            ErrorCode::InvalidClass, "class id outside 1.." + std::to_string(n_classes));
    ++cm.counts(predicted[i] - 1, target[i] - 1);
  }
  return cm;
}

inline ConfusionMatrix confusion_matrix(const TrainedClassifier& c, const Eigen::MatrixXd& x_test,
                                        std::span<const int> y_test, int n_classes) {
  require(x_test.rows() > 0, ErrorCode::Empty, "empty test set");
  std::vector<int> pred(static_cast<std::size_t>(x_test.rows()));
  for (Eigen::Index i = 0; i < x_test.rows(); ++i) pred[static_cast<std::size_t>(i)] = predict(c, x_test, i);
  return confusion_from_predictions(pred, y_test, n_classes);
}

inline void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "predicted\\target";
  for (int c = 1; c <= cm.n_classes; ++c) out << ',' << c;
  out << '\n';
  for (int r = 0; r < cm.n_classes; ++r) {
    out << r + 1;
    for (int c = 0; c < cm.n_classes; ++c) out << ',' << cm.counts(r, c);
    out << '\n';
  }
}

/// Deterministic stratified k-fold assignment: fold id per sample.
inline std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  std::vector<int> fold(y.size(), 0);
  std::mt19937_64 rng(seed);
  int offset = 0;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = static_cast<int>((k + static_cast<std::size_t>(offset)) % static_cast<std::size_t>(folds));
    offset += static_cast<int>(idx.size());
  }
  return fold;
}

struct HyperparamGrid {
  std::vector<int> knn_k = {1, 3, 5, 7};
  std::vector<double> da_ridge = {1e-6, 1e-3, 1e-1};
  std::vector<double> svm_lambda = {1e-4, 1e-3, 1e-2};
  int svm_epochs = 500;
  int folds = 5;
};

/// Inner cross-validation on the training split; the first grid value with
/// the best mean accuracy wins.
inline Hyperparams tune_hyperparams(ClassifierKind kind, const Eigen::MatrixXd& x, std::span<const int> y,
                                    const std::vector<std::size_t>& features, const HyperparamGrid& grid,
                                    std::uint64_t seed) {
  const auto fold = stratified_folds(y, grid.folds, seed);
  Hyperparams base;
  base.svm_epochs = grid.svm_epochs;
  std::vector<Hyperparams> candidates;
  switch (kind) {
    case ClassifierKind::Knn:
      for (int k : grid.knn_k) { auto h = base; h.knn_k = k; candidates.push_back(h); }
      break;
    case ClassifierKind::Da:
      for (double r : grid.da_ridge) { auto h = base; h.da_ridge = r; candidates.push_back(h); }
      break;
    case ClassifierKind::Svm:
      for (double l : grid.svm_lambda) { auto h = base; h.svm_lambda = l; candidates.push_back(h); }
      break;
  }
  require(!candidates.empty(), ErrorCode::BadConfig, "empty hyperparameter grid");
  if (candidates.size() == 1) return candidates.front();

  double best_acc = -1.0;
  Hyperparams best = candidates.front();
  for (const auto& h : candidates) {
    int correct = 0, total = 0;
    for (int f = 0; f < grid.folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
      if (te.empty() || tr.empty()) continue;
      std::vector<int> ytr, yte;
      for (auto i : tr) ytr.push_back(y[i]);
      for (auto i : te) yte.push_back(y[i]);
      const Eigen::MatrixXd xtr = take_rows(x, tr);
      const Eigen::MatrixXd xte = take_rows(x, te);
      const auto model = train(kind, xtr, ytr, features, h);
      for (Eigen::Index i = 0; i < xte.rows(); ++i) correct += predict(model, xte, i) == yte[static_cast<std::size_t>(i)];
      total += static_cast<int>(te.size());
    }
    const double acc = total > 0 ? static_cast<double>(correct) / total : 0.0;
    if (acc > best_acc) {
      best_acc = acc;
      best = h;
    }
  }
  return best;
}

// JSON -----------------------------------------------------------------------

namespace detail {

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    require(static_cast<Eigen::Index>(j[r].size()) == cols, ErrorCode::CorruptRecord, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline nlohmann::json to_json(const TrainedClassifier& c) {
  nlohmann::json j{{"format", "uavrf-classifier"},
                   {"version", 1},
                   {"kind", to_string(c.kind)},
                   {"feature_indices", c.feature_indices},
                   {"standardizer",
                    {{"mean", detail::vector_json(c.standardizer.mean)},
                     {"scale", detail::vector_json(c.standardizer.scale)}}}};
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, KnnModel>) {
          j["params"] = {{"k", m.k}, {"train", detail::matrix_json(m.train)}, {"labels", m.labels}};
        } else if constexpr (std::is_same_v<M, DaModel>) {
          j["params"] = {{"classes", m.classes},
                         {"means", detail::matrix_json(m.means)},
                         {"covariance", detail::matrix_json(m.covariance)},
                         {"coef", detail::matrix_json(m.coef)},
                         {"bias", detail::vector_json(m.bias)},
                         {"ridge", m.ridge}};
        } else {
          nlohmann::json pairs = nlohmann::json::array();
          for (const auto& p : m.pairs) {
            pairs.push_back({{"a", p.a}, {"b", p.b}, {"w", detail::vector_json(p.w)}, {"bias", p.bias}});
          }
          j["params"] = {{"classes", m.classes}, {"pairs", pairs}, {"lambda", m.lambda}, {"epochs", m.epochs}};
        }
      },
      c.model);
  return j;
}

inline TrainedClassifier classifier_from_json(const nlohmann::json& j) {
  try {
    require(j.value("format", std::string{}) == "uavrf-classifier", ErrorCode::CorruptRecord, "not a classifier");
    require(j.at("version").get<int>() == 1, ErrorCode::FormatVersionMismatch, "unsupported classifier version");
    TrainedClassifier c;
    c.kind = classifier_kind_from_string(j.at("kind").get<std::string>());
    c.feature_indices = j.at("feature_indices").get<std::vector<std::size_t>>();
    c.standardizer.mean = detail::vector_from_json(j.at("standardizer").at("mean"));
    c.standardizer.scale = detail::vector_from_json(j.at("standardizer").at("scale"));
    const auto& p = j.at("params");
    switch (c.kind) {
      case ClassifierKind::Knn:
        c.model = KnnModel{p.at("k").get<int>(), detail::matrix_from_json(p.at("train")),
                           p.at("labels").get<std::vector<int>>()};
        break;
      case ClassifierKind::Da: {
        DaModel m;
        m.classes = p.at("classes").get<std::vector<int>>();
        m.means = detail::matrix_from_json(p.at("means"));
        m.covariance = detail::matrix_from_json(p.at("covariance"));
        m.coef = detail::matrix_from_json(p.at("coef"));
        m.bias = detail::vector_from_json(p.at("bias"));
        m.ridge = p.at("ridge").get<double>();
        c.model = std::move(m);
        break;
      }
      case ClassifierKind::Svm: {
        SvmModel m;
        m.classes = p.at("classes").get<std::vector<int>>();
        m.lambda = p.at("lambda").get<double>();
        m.epochs = p.at("epochs").get<int>();
        for (const auto& q : p.at("pairs")) {
          m.pairs.push_back({q.at("a").get<int>(), q.at("b").get<int>(), detail::vector_from_json(q.at("w")),
                             q.at("bias").get<double>()});
        }
        c.model = std::move(m);
        break;
      }
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptRecord, std::string("malformed classifier: ") + e.what());
  }
}

}  // namespace uavrf
