#pragma once

// Experiment runner: detection accuracy against SNR, Monte Carlo
// classification, accuracy curves and report emission.
//
// Experiment config (JSON). Every key is optional:
//   dataset                  directory written by `generate`; when absent the
//                            corpus is synthesised from `generator`
//   generator                GeneratorConfig object
//   per_class, noise_frames  synthetic corpus size (100, 100)
//   snr_db                   synthetic corpus SNR (25)
//   split_ratio              training fraction per run (0.8)
//   n_monte_carlo            runs of the main experiment (10)
//   curve_runs               runs per point of the count/SNR curves (10)
//   classifiers              subset of ["knn", "da", "svm"]
//   snr_grid                 classification SNR curve, dB
//   controller_count_grid    classification count curve
//   detection_snr_grid       detection sweep, dB
//   detection_trials         test frames per SNR, half UAV, half noise (200)
//   detection_train_per_snr  UAV training frames per grid SNR (20)
//   detection_frame_len      detection frame length (generator frame_len)
//   ablation                 compute the feature-subset table (true)
//   rng_seed                 master seed (1)
//   nca                      {lambda, max_iters, kernel_width, threshold}
//   hyperparams              {knn_k, da_ridge, svm_lambda, svm_epochs, folds}
//   stft                     {window: "hann"|"rect", window_len, hop, fft_size}
//   changepoint              {statistic: "mean"|"variance", min_gain}

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "uavrf/classify.hpp"
#include "uavrf/dataset.hpp"
#include "uavrf/detector.hpp"
#include "uavrf/error.hpp"
#include "uavrf/features.hpp"
#include "uavrf/generator.hpp"
#include "uavrf/nca.hpp"
#include "uavrf/transient.hpp"
#include "uavrf/wavelet.hpp"

namespace uavrf {

struct ExperimentConfig {
  std::optional<std::string> dataset;
  GeneratorConfig generator;
  int per_class = 100;
  int noise_frames = 100;
  double snr_db = 25.0;
  double split_ratio = 0.8;
  int n_monte_carlo = 10;
  int curve_runs = 10;
  std::vector<ClassifierKind> classifiers = {ClassifierKind::Knn, ClassifierKind::Da, ClassifierKind::Svm};
  std::vector<double> snr_grid = {10, 13, 16, 19, 22, 25};
  std::vector<int> controller_count_grid = {2, 4, 6, 8, 10, 12, 14};
  std::vector<double> detection_snr_grid = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24};
  int detection_trials = 200;
  int detection_train_per_snr = 20;
  std::size_t detection_frame_len = 0;  // 0: generator frame_len
  bool ablation = true;
  std::uint64_t rng_seed = 1;
  NcaConfig nca;
  double nca_threshold = 0.1;
  HyperparamGrid hyperparams;
  StftConfig stft;
  ChangepointConfig changepoint;
};

inline void validate(const ExperimentConfig& c) {
  require(c.split_ratio > 0.0 && c.split_ratio < 1.0, ErrorCode::BadConfig, "split_ratio must be in (0,1)");
  require(c.n_monte_carlo >= 1 && c.curve_runs >= 1, ErrorCode::BadConfig, "run counts must be >= 1");
  require(!c.classifiers.empty(), ErrorCode::BadConfig, "classifier list is empty");
  require(!c.snr_grid.empty(), ErrorCode::BadConfig, "snr_grid is empty");
  require(!c.controller_count_grid.empty(), ErrorCode::BadConfig, "controller_count_grid is empty");
  require(!c.detection_snr_grid.empty(), ErrorCode::BadConfig, "detection_snr_grid is empty");
  require(c.detection_trials >= 2 && c.detection_train_per_snr >= 1, ErrorCode::BadConfig,
          "detection trial counts too small");
  require(c.per_class >= 2 && c.noise_frames >= 0, ErrorCode::BadConfig, "corpus sizes too small");
  for (int n : c.controller_count_grid) {
    require(n >= 2, ErrorCode::BadConfig, "controller counts must be >= 2");
  }
  require(c.nca_threshold > 0.0 && c.nca_threshold < 1.0, ErrorCode::BadConfig, "nca threshold must be in (0,1)");
  require(c.hyperparams.folds >= 2, ErrorCode::BadConfig, "need at least 2 folds");
  validate(c.stft);
  validate(c.generator);
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  std::vector<std::string> kinds;
  for (auto k : c.classifiers) kinds.push_back(to_string(k));
  nlohmann::json j{
      {"generator", c.generator},
      {"per_class", c.per_class},
      {"noise_frames", c.noise_frames},
      {"snr_db", c.snr_db},
      {"split_ratio", c.split_ratio},
      {"n_monte_carlo", c.n_monte_carlo},
      {"curve_runs", c.curve_runs},
      {"classifiers", kinds},
      {"snr_grid", c.snr_grid},
      {"controller_count_grid", c.controller_count_grid},
      {"detection_snr_grid", c.detection_snr_grid},
      {"detection_trials", c.detection_trials},
      {"detection_train_per_snr", c.detection_train_per_snr},
      {"detection_frame_len", c.detection_frame_len},
      {"ablation", c.ablation},
      {"rng_seed", c.rng_seed},
      {"nca",
       {{"lambda", c.nca.lambda},
        {"max_iters", c.nca.max_iters},
        {"kernel_width", c.nca.kernel_width},
        {"threshold", c.nca_threshold}}},
      {"hyperparams",
       {{"knn_k", c.hyperparams.knn_k},
        {"da_ridge", c.hyperparams.da_ridge},
        {"svm_lambda", c.hyperparams.svm_lambda},
        {"svm_epochs", c.hyperparams.svm_epochs},
        {"folds", c.hyperparams.folds}}},
      {"stft",
       {{"window", c.stft.window == WindowKind::Hann ? "hann" : "rect"},
        {"window_len", c.stft.window_len},
        {"hop", c.stft.hop},
        {"fft_size", c.stft.fft_size}}},
      {"changepoint",
       {{"statistic", c.changepoint.statistic == ChangeStatistic::Mean ? "mean" : "variance"},
        {"min_gain", c.changepoint.min_gain}}}};
  j["dataset"] = c.dataset ? nlohmann::json(*c.dataset) : nlohmann::json(nullptr);
  return j;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  try {
    require(j.is_object(), ErrorCode::BadConfig, "experiment config must be a JSON object");
    ExperimentConfig c;
    if (j.contains("dataset") && !j["dataset"].is_null()) c.dataset = j["dataset"].get<std::string>();
    if (j.contains("generator")) c.generator = j["generator"].get<GeneratorConfig>();
    c.per_class = j.value("per_class", c.per_class);
    c.noise_frames = j.value("noise_frames", c.noise_frames);
    c.snr_db = j.value("snr_db", c.snr_db);
    c.split_ratio = j.value("split_ratio", c.split_ratio);
    c.n_monte_carlo = j.value("n_monte_carlo", c.n_monte_carlo);
    c.curve_runs = j.value("curve_runs", c.curve_runs);
    if (j.contains("classifiers")) {
      c.classifiers.clear();
      for (const auto& k : j["classifiers"]) c.classifiers.push_back(classifier_kind_from_string(k.get<std::string>()));
    }
    c.snr_grid = j.value("snr_grid", c.snr_grid);
    c.controller_count_grid = j.value("controller_count_grid", c.controller_count_grid);
    c.detection_snr_grid = j.value("detection_snr_grid", c.detection_snr_grid);
    c.detection_trials = j.value("detection_trials", c.detection_trials);
    c.detection_train_per_snr = j.value("detection_train_per_snr", c.detection_train_per_snr);
    c.detection_frame_len = j.value("detection_frame_len", c.detection_frame_len);
    c.ablation = j.value("ablation", c.ablation);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    if (j.contains("nca")) {
      const auto& n = j["nca"];
      c.nca.lambda = n.value("lambda", c.nca.lambda);
      c.nca.max_iters = n.value("max_iters", c.nca.max_iters);
      c.nca.kernel_width = n.value("kernel_width", c.nca.kernel_width);
      c.nca_threshold = n.value("threshold", c.nca_threshold);
    }
    if (j.contains("hyperparams")) {
      const auto& h = j["hyperparams"];
      c.hyperparams.knn_k = h.value("knn_k", c.hyperparams.knn_k);
      c.hyperparams.da_ridge = h.value("da_ridge", c.hyperparams.da_ridge);
      c.hyperparams.svm_lambda = h.value("svm_lambda", c.hyperparams.svm_lambda);
      c.hyperparams.svm_epochs = h.value("svm_epochs", c.hyperparams.svm_epochs);
      c.hyperparams.folds = h.value("folds", c.hyperparams.folds);
    }
    if (j.contains("stft")) {
      const auto& s = j["stft"];
      const auto w = s.value("window", std::string("hann"));
      require(w == "hann" || w == "rect", ErrorCode::BadConfig, "stft window must be hann or rect");
      c.stft.window = w == "hann" ? WindowKind::Hann : WindowKind::Rectangular;
      c.stft.window_len = s.value("window_len", c.stft.window_len);
      c.stft.hop = s.value("hop", c.stft.hop);
      c.stft.fft_size = s.value("fft_size", c.stft.fft_size);
    }
    if (j.contains("changepoint")) {
      const auto& s = j["changepoint"];
      const auto stat = s.value("statistic", std::string("mean"));
      require(stat == "mean" || stat == "variance", ErrorCode::BadConfig, "statistic must be mean or variance");
      c.changepoint.statistic = stat == "mean" ? ChangeStatistic::Mean : ChangeStatistic::Variance;
      c.changepoint.min_gain = s.value("min_gain", c.changepoint.min_gain);
    }
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadConfig, std::string("malformed experiment config: ") + e.what());
  }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return experiment_from_json(j);
}

// Feature corpora ------------------------------------------------------------

/// Features of `per_class` synthetic frames per controller. Frame seeds match
/// generate_dataset, so a dataset written with the same config yields the same
/// rows.
inline FeatureMatrix synthetic_features(const GeneratorConfig& gen, int per_class, double snr_db,
                                        const StftConfig& stft = {}, const ChangepointConfig& cp = {}) {
  validate(gen);
  const auto n = static_cast<std::size_t>(gen.n_classes) * static_cast<std::size_t>(per_class);
  return batch_extract(
      n,
      [&](std::size_t i) {
        const auto label = ClassLabel::uav(static_cast<int>(i / static_cast<std::size_t>(per_class)) + 1);
        std::mt19937_64 rng(frame_seed(gen.rng_seed, label, i % static_cast<std::size_t>(per_class)));
        return generate_frame(gen, label, snr_db, rng);
      },
      stft, cp);
}

/// Features of every UAV frame stored in a dataset, read one at a time.
inline FeatureMatrix dataset_features(const Dataset& ds, const StftConfig& stft = {},
                                      const ChangepointConfig& cp = {}) {
  std::vector<std::size_t> uav;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.manifest().frames[i].label.is_uav()) uav.push_back(i);
  }
  auto m = batch_extract(
      uav.size(), [&](std::size_t k) { return ds.frame(uav[k]); }, stft, cp);
  for (auto& s : m.source_index) s = uav[s];
  for (auto& f : m.failures) f.index = uav[f.index];
  return m;
}

/// Features of a dataset's UAV frames re-synthesised at another SNR from the
/// recorded per-frame seeds; clean emission and noise draw are unchanged.
inline FeatureMatrix dataset_features_at_snr(const DatasetManifest& m, double snr_db, const StftConfig& stft = {},
                                             const ChangepointConfig& cp = {}) {
  require(m.generator.has_value(), ErrorCode::BadConfig, "dataset has no generator config to re-synthesise from");
  std::vector<std::size_t> uav;
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    if (m.frames[i].label.is_uav()) uav.push_back(i);
  }
  auto out = batch_extract(
      uav.size(),
      [&](std::size_t k) {
        const auto& rec = m.frames[uav[k]];
        std::mt19937_64 rng(rec.seed);
        return generate_frame(*m.generator, rec.label, snr_db, rng);
      },
      stft, cp);
  for (auto& s : out.source_index) s = uav[s];
  return out;
}

/// Rows whose label is in 1..n_classes.
inline FeatureMatrix restrict_classes(const FeatureMatrix& m, int n_classes) {
  FeatureMatrix out;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    if (m.labels[i] >= 1 && m.labels[i] <= n_classes) {
      out.rows.push_back(m.rows[i]);
      out.labels.push_back(m.labels[i]);
      out.source_index.push_back(m.source_index[i]);
    }
  }
  return out;
}

// Splits ---------------------------------------------------------------------

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffle; round(ratio * class size) of each class goes to
/// training, at least one sample stays on each side.
inline Split stratified_split(std::span<const int> y, double ratio, std::uint64_t seed) {
  require(ratio > 0.0 && ratio < 1.0, ErrorCode::BadConfig, "split ratio must be in (0,1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  std::mt19937_64 rng(seed);
  Split s;
  for (auto& [label, idx] : by_class) {
    require(idx.size() >= 2, ErrorCode::TooFewSamples, "class " + std::to_string(label) + " has fewer than 2 samples");
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_train = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline std::uint64_t run_seed(std::uint64_t master, std::uint64_t stream, std::size_t run) {
  return derive_seed(master, stream, run);
}

// Classification -------------------------------------------------------------

struct ClassifierResult {
  ClassifierKind kind = ClassifierKind::Knn;
  Hyperparams hyperparams;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
};

struct RunResult {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  Eigen::VectorXd nca_weights;
  std::vector<std::size_t> selected;
  std::vector<ClassifierResult> classifiers;

  const ClassifierResult& result(ClassifierKind k) const {
    for (const auto& c : classifiers)
      if (c.kind == k) return c;
    fail(ErrorCode::InvalidArgument, "classifier " + to_string(k) + " was not run");
  }
};

struct AblationRow {
  std::vector<std::size_t> features;
  std::vector<double> run_accuracy;
  double accuracy = 0.0;
};

struct CurvePoint {
  double x = 0.0;  // controller count or SNR
  ClassifierKind kind = ClassifierKind::Knn;
  std::vector<double> run_accuracy;
  double accuracy = 0.0;
};

struct ClassificationReport {
  int n_classes = 0;
  std::size_t n_samples = 0;
  std::size_t feature_failures = 0;
  std::vector<RunResult> runs;
  std::map<ClassifierKind, double> mean_accuracy;
  std::map<ClassifierKind, ConfusionMatrix> pooled_confusion;
  Eigen::VectorXd mean_nca_weights;
  std::vector<AblationRow> ablation;
  std::vector<CurvePoint> accuracy_vs_count;
  std::vector<CurvePoint> accuracy_vs_snr;
};

inline double mean_of(const std::vector<double>& v) {
  require(!v.empty(), ErrorCode::Empty, "mean of an empty list");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

namespace detail {

inline int max_label(std::span<const int> y) { return y.empty() ? 0 : *std::max_element(y.begin(), y.end()); }

inline std::vector<int> take(std::span<const int> y, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(y[i]);
  return out;
}

}  // namespace detail

/// One Monte Carlo run: split, NCA on standardised training features,
/// selection, then tune, train and score each classifier on the test split.
inline RunResult run_once(const Eigen::MatrixXd& x, std::span<const int> y, std::size_t run, std::uint64_t seed,
                          const ExperimentConfig& cfg) {
  const int n_classes = detail::max_label(y);
  RunResult r;
  r.run = run;
  r.seed = seed;
  const Split split = stratified_split(y, cfg.split_ratio, seed);
  r.n_train = split.train.size();
  r.n_test = split.test.size();
  const Eigen::MatrixXd xtr = take_rows(x, split.train);
  const Eigen::MatrixXd xte = take_rows(x, split.test);
  const auto ytr = detail::take(y, split.train);
  const auto yte = detail::take(y, split.test);

  const Eigen::MatrixXd ztr = Standardizer::fit(xtr).apply(xtr);
  const NcaModel nca = nca_fit(ztr, ytr, cfg.nca);
  r.nca_weights = nca.weights;
  r.selected = select_features(nca, cfg.nca_threshold);

  for (auto kind : cfg.classifiers) {
    ClassifierResult cr;
    cr.kind = kind;
    cr.hyperparams = tune_hyperparams(kind, xtr, ytr, r.selected, cfg.hyperparams,
                                      derive_seed(seed, 0xC0FFEEULL, static_cast<std::uint64_t>(kind)));
    const auto model = train(kind, xtr, ytr, r.selected, cr.hyperparams);
    cr.confusion = confusion_matrix(model, xte, yte, n_classes);
    cr.accuracy = cr.confusion.accuracy();
    r.classifiers.push_back(std::move(cr));
  }
  return r;
}

/// Mean kNN accuracy for every non-empty feature subset, tuned per subset on
/// the same splits as the main runs.
inline std::vector<AblationRow> feature_ablation(const Eigen::MatrixXd& x, std::span<const int> y,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 const ExperimentConfig& cfg) {
  const int n_classes = detail::max_label(y);
  std::vector<AblationRow> rows;
  const auto p = static_cast<std::size_t>(x.cols());
  for (std::size_t mask = 1; mask < (std::size_t{1} << p); ++mask) {
    AblationRow row;
    for (std::size_t r = 0; r < p; ++r)
      if (mask & (std::size_t{1} << r)) row.features.push_back(r);
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const AblationRow& a, const AblationRow& b) { return a.features.size() < b.features.size(); });
  for (std::uint64_t seed : seeds) {
    const Split split = stratified_split(y, cfg.split_ratio, seed);
    const Eigen::MatrixXd xtr = take_rows(x, split.train);
    const Eigen::MatrixXd xte = take_rows(x, split.test);
    const auto ytr = detail::take(y, split.train);
    const auto yte = detail::take(y, split.test);
    for (auto& row : rows) {
      const auto hp = tune_hyperparams(ClassifierKind::Knn, xtr, ytr, row.features, cfg.hyperparams,
                                       derive_seed(seed, 0xAB1A7EULL, row.features.size()));
      const auto model = train(ClassifierKind::Knn, xtr, ytr, row.features, hp);
      row.run_accuracy.push_back(confusion_matrix(model, xte, yte, n_classes).accuracy());
    }
  }
  for (auto& row : rows) row.accuracy = mean_of(row.run_accuracy);
  return rows;
}

/// Runs the configured classifiers on `runs` Monte Carlo splits and returns
/// one point per classifier.
inline std::vector<CurvePoint> curve_points(const FeatureMatrix& fm, double x_value, std::uint64_t stream,
                                            const ExperimentConfig& cfg) {
  const Eigen::MatrixXd x = to_matrix(fm);
  std::vector<CurvePoint> pts;
  for (auto k : cfg.classifiers) pts.push_back({x_value, k, {}, 0.0});
  for (int run = 0; run < cfg.curve_runs; ++run) {
    const auto seed = run_seed(cfg.rng_seed, stream, static_cast<std::size_t>(run));
    const auto r = run_once(x, fm.labels, static_cast<std::size_t>(run), seed, cfg);
    for (std::size_t k = 0; k < pts.size(); ++k) pts[k].run_accuracy.push_back(r.classifiers[k].accuracy);
  }
  for (auto& p : pts) p.accuracy = mean_of(p.run_accuracy);
  return pts;
}

/// Supplies the feature table of the corpus re-synthesised at a given SNR.
using FeaturesAtSnr = std::function<FeatureMatrix(double)>;

namespace stream {
inline constexpr std::uint64_t kMain = 0x4D41494EULL;
inline constexpr std::uint64_t kCount = 0x434E5400ULL;
inline constexpr std::uint64_t kSnr = 0x534E5200ULL;
inline constexpr std::uint64_t kDetectTrain = 0x44545200ULL;
inline constexpr std::uint64_t kDetectTest = 0x44545300ULL;
}  // namespace stream

/// The full classification protocol on a precomputed feature table. The SNR
/// curve is skipped when `at_snr` is empty. A failing run is rethrown with its
/// index.
inline ClassificationReport run_classification_experiment(const ExperimentConfig& cfg, const FeatureMatrix& fm,
                                                          const FeaturesAtSnr& at_snr = {}) {
  validate(cfg);
  require(fm.size() > 0, ErrorCode::Empty, "feature table is empty");
  const std::set<int> classes(fm.labels.begin(), fm.labels.end());
  require(classes.size() >= 2, ErrorCode::SingleClass, "need at least 2 classes");

  ClassificationReport rep;
  rep.n_classes = *classes.rbegin();
  rep.n_samples = fm.size();
  rep.feature_failures = fm.failures.size();
  const Eigen::MatrixXd x = to_matrix(fm);

  std::vector<std::uint64_t> seeds;
  for (int run = 0; run < cfg.n_monte_carlo; ++run) {
    const auto seed = run_seed(cfg.rng_seed, stream::kMain, static_cast<std::size_t>(run));
    seeds.push_back(seed);
    try {
      rep.runs.push_back(run_once(x, fm.labels, static_cast<std::size_t>(run), seed, cfg));
    } catch (const Error& e) {
      fail(e.code(), "run " + std::to_string(run) + ": " + e.what());
    }
  }
  rep.mean_nca_weights = Eigen::VectorXd::Zero(x.cols());
  for (const auto& r : rep.runs) rep.mean_nca_weights += r.nca_weights;
  rep.mean_nca_weights /= static_cast<double>(rep.runs.size());

  for (auto kind : cfg.classifiers) {
    std::vector<double> acc;
    ConfusionMatrix pooled{rep.n_classes, Eigen::MatrixXi::Zero(rep.n_classes, rep.n_classes)};
    for (const auto& r : rep.runs) {
      const auto& cr = r.result(kind);
      acc.push_back(cr.accuracy);
      pooled.counts += cr.confusion.counts;
    }
    rep.mean_accuracy[kind] = mean_of(acc);
    rep.pooled_confusion[kind] = std::move(pooled);
  }

  if (cfg.ablation) rep.ablation = feature_ablation(x, fm.labels, seeds, cfg);

  for (int count : cfg.controller_count_grid) {
    if (count > rep.n_classes) continue;
    auto pts = curve_points(restrict_classes(fm, count), count, stream::kCount ^ static_cast<std::uint64_t>(count), cfg);
    rep.accuracy_vs_count.insert(rep.accuracy_vs_count.end(), pts.begin(), pts.end());
  }

  if (at_snr) {
    for (double snr : cfg.snr_grid) {
      const FeatureMatrix f = at_snr(snr);
      auto pts = curve_points(f, snr, stream::kSnr, cfg);
      rep.accuracy_vs_snr.insert(rep.accuracy_vs_snr.end(), pts.begin(), pts.end());
    }
  }
  return rep;
}

// Detection sweep ------------------------------------------------------------

struct DetectionPoint {
  double snr_db = 0.0;
  int trials = 0;
  int uav_trials = 0;
  int uav_correct = 0;
  int noise_trials = 0;
  int noise_correct = 0;

  double accuracy() const { return static_cast<double>(uav_correct + noise_correct) / static_cast<double>(trials); }
};

struct DetectionSweep {
  DetectorModel model;
  std::vector<DetectionPoint> points;
};

namespace detail {

inline GeneratorConfig detection_generator(const ExperimentConfig& cfg) {
  GeneratorConfig g = cfg.generator;
  if (cfg.detection_frame_len > 0) g.frame_len = cfg.detection_frame_len;
  return g;
}

inline WaveletSignal synth_wavelet(const GeneratorConfig& g, const ClassLabel& label, double snr_db,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return decompose3(generate_frame(g, label, snr_db, rng));
}

}  // namespace detail

/// Trains the detector on UAV frames drawn across the SNR grid plus as many
/// fresh noise frames, then scores balanced UAV/noise trials at every grid
/// SNR. Trial t uses the same seed at every SNR, so only the signal scale
/// changes along the sweep.
inline DetectionSweep run_detection_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  const GeneratorConfig g = detail::detection_generator(cfg);
  validate(g);

  std::vector<WaveletSignal> uav_train, noise_train;
  std::size_t idx = 0;
  for (double snr : cfg.detection_snr_grid) {
    for (int k = 0; k < cfg.detection_train_per_snr; ++k, ++idx) {
      const auto label = ClassLabel::uav(static_cast<int>(idx % static_cast<std::size_t>(g.n_classes)) + 1);
      uav_train.push_back(detail::synth_wavelet(g, label, snr, derive_seed(cfg.rng_seed, stream::kDetectTrain, idx)));
    }
  }
  for (std::size_t k = 0; k < uav_train.size(); ++k) {
    noise_train.push_back(detail::synth_wavelet(g, ClassLabel::noise(), 0.0,
                                                derive_seed(cfg.rng_seed, stream::kDetectTrain ^ 1ULL, k)));
  }

  DetectionSweep out;
  out.model = train_detector(uav_train, noise_train);
  const int n_uav = cfg.detection_trials / 2;
  for (double snr : cfg.detection_snr_grid) {
    DetectionPoint pt;
    pt.snr_db = snr;
    for (int t = 0; t < cfg.detection_trials; ++t) {
      const bool is_uav = t < n_uav;
      const auto label = is_uav ? ClassLabel::uav(t % g.n_classes + 1) : ClassLabel::noise();
      const auto seed = derive_seed(cfg.rng_seed, stream::kDetectTest, static_cast<std::uint64_t>(t));
      const bool said_uav = out.model(detail::synth_wavelet(g, label, snr, seed)).uav_present();
      ++pt.trials;
      if (is_uav) {
        ++pt.uav_trials;
        pt.uav_correct += said_uav;
      } else {
        ++pt.noise_trials;
        pt.noise_correct += !said_uav;
      }
    }
    out.points.push_back(pt);
  }
  return out;
}

// Reports --------------------------------------------------------------------

inline constexpr int kReportVersion = 1;

namespace detail {

inline std::vector<std::vector<int>> counts_json(const ConfusionMatrix& cm) {
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(cm.n_classes));
  for (int r = 0; r < cm.n_classes; ++r)
    for (int c = 0; c < cm.n_classes; ++c) rows[static_cast<std::size_t>(r)].push_back(cm.counts(r, c));
  return rows;
}

inline std::vector<std::string> feature_names(const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.emplace_back(kFeatureNames.at(i));
  return out;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline nlohmann::json curve_json(const std::vector<CurvePoint>& pts, const char* axis) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : pts) {
    a.push_back({{axis, p.x}, {"classifier", to_string(p.kind)}, {"accuracy", p.accuracy},
                 {"run_accuracy", p.run_accuracy}});
  }
  return a;
}

}  // namespace detail

/// Report JSON; depends only on the inputs, never on wall-clock time.
inline nlohmann::json report_json(const ExperimentConfig& cfg, const ClassificationReport& rep,
                                  const std::string& corpus_hash = {}) {
  const nlohmann::json config = to_json(cfg);
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : rep.runs) {
    nlohmann::json cls = nlohmann::json::object();
    for (const auto& c : r.classifiers) {
      cls[to_string(c.kind)] = {{"accuracy", c.accuracy},
                                {"hyperparams",
                                 {{"knn_k", c.hyperparams.knn_k},
                                  {"da_ridge", c.hyperparams.da_ridge},
                                  {"svm_lambda", c.hyperparams.svm_lambda}}},
                                {"confusion", detail::counts_json(c.confusion)}};
    }
    runs.push_back({{"run", r.run},
                    {"seed", r.seed},
                    {"n_train", r.n_train},
                    {"n_test", r.n_test},
                    {"nca_weights", detail::to_std(r.nca_weights)},
                    {"selected_features", detail::feature_names(r.selected)},
                    {"classifiers", cls}});
  }
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [kind, acc] : rep.mean_accuracy) {
    const auto& cm = rep.pooled_confusion.at(kind);
    summary[to_string(kind)] = {{"mean_accuracy", acc},
                                {"pooled_confusion", detail::counts_json(cm)},
                                {"per_class_accuracy", cm.per_class_accuracy()}};
  }
  nlohmann::json ablation = nlohmann::json::array();
  for (const auto& a : rep.ablation) {
    ablation.push_back({{"features", detail::feature_names(a.features)},
                        {"accuracy", a.accuracy},
                        {"run_accuracy", a.run_accuracy}});
  }
  nlohmann::json j{{"format", "uavrf-report"},
                   {"version", kReportVersion},
                   {"config_hash", config_hash(config)},
                   {"corpus_hash", corpus_hash},
                   {"config", config},
                   {"n_classes", rep.n_classes},
                   {"n_samples", rep.n_samples},
                   {"feature_failures", rep.feature_failures},
                   {"feature_names", kFeatureNames},
                   {"runs", runs},
                   {"summary", summary},
                   {"nca_mean_weights", detail::to_std(rep.mean_nca_weights)},
                   {"ablation", ablation},
                   {"accuracy_vs_count", detail::curve_json(rep.accuracy_vs_count, "controllers")},
                   {"accuracy_vs_snr", detail::curve_json(rep.accuracy_vs_snr, "snr_db")}};
  return j;
}

inline nlohmann::json detection_json(const ExperimentConfig& cfg, const DetectionSweep& sweep) {
  const nlohmann::json config = to_json(cfg);
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : sweep.points) {
    pts.push_back({{"snr_db", p.snr_db},
                   {"accuracy", p.accuracy()},
                   {"trials", p.trials},
                   {"uav_trials", p.uav_trials},
                   {"uav_correct", p.uav_correct},
                   {"noise_trials", p.noise_trials},
                   {"noise_correct", p.noise_correct}});
  }
  return {{"format", "uavrf-detection"},
          {"version", kReportVersion},
          {"config_hash", config_hash(config)},
          {"config", config},
          {"detector", to_json(sweep.model)},
          {"points", pts}};
}

/// Detection accuracy table: one row per SNR.
inline void write_detection_csv(std::ostream& out, const nlohmann::json& detection) {
  out << "snr_db,detection_accuracy_pct,trials,uav_correct,noise_correct\n";
  for (const auto& p : detection.at("points")) {
    out << p.at("snr_db").get<double>() << ',' << 100.0 * p.at("accuracy").get<double>() << ','
        << p.at("trials").get<int>() << ',' << p.at("uav_correct").get<int>() << ','
        << p.at("noise_correct").get<int>() << '\n';
  }
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path.string());
}

inline std::string join(const nlohmann::json& names, char sep) {
  std::string s;
  for (const auto& n : names) {
    if (!s.empty()) s += sep;
    s += n.get<std::string>();
  }
  return s;
}

}  // namespace detail

/// Renders plot-ready CSV tables from a report and/or detection JSON into
/// `dir`; returns the file names written.
inline std::vector<std::string> render_tables(const std::filesystem::path& dir, const nlohmann::json* report,
                                              const nlohmann::json* detection) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create " + dir.string());
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    detail::write_text(dir / name, text);
    written.push_back(name);
  };
  if (detection) {
    std::ostringstream s;
    write_detection_csv(s, *detection);
    emit("detection_vs_snr.csv", s.str());
  }
  if (report) {
    const auto& r = *report;
    {
      std::ostringstream s;
      s.precision(17);
      s << "run,seed,classifier,accuracy\n";
      for (const auto& run : r.at("runs"))
        for (const auto& [kind, c] : run.at("classifiers").items())
          s << run.at("run").get<int>() << ',' << run.at("seed").get<std::uint64_t>() << ',' << kind << ','
            << c.at("accuracy").get<double>() << '\n';
      emit("accuracy_runs.csv", s.str());
    }
    {
      std::ostringstream s;
      s.precision(17);
      s << "classifier,mean_accuracy\n";
      for (const auto& [kind, v] : r.at("summary").items()) s << kind << ',' << v.at("mean_accuracy").get<double>() << '\n';
      emit("accuracy_summary.csv", s.str());
    }
    for (const auto& [kind, v] : r.at("summary").items()) {
      const auto counts = v.at("pooled_confusion").get<std::vector<std::vector<int>>>();
      ConfusionMatrix cm;
      cm.n_classes = static_cast<int>(counts.size());
      cm.counts = Eigen::MatrixXi::Zero(cm.n_classes, cm.n_classes);
      for (int a = 0; a < cm.n_classes; ++a)
        for (int b = 0; b < cm.n_classes; ++b) cm.counts(a, b) = counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      std::ostringstream s;
      write_confusion_csv(s, cm);
      emit("confusion_" + kind + ".csv", s.str());
    }
    {
      std::ostringstream s;
      const auto w = r.at("nca_mean_weights").get<std::vector<double>>();
      write_weights_csv(s, Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
      emit("nca_weights.csv", s.str());
    }
    if (!r.at("ablation").empty()) {
      std::ostringstream s;
      s.precision(17);
      s << "features,knn_accuracy\n";
      for (const auto& a : r.at("ablation")) s << detail::join(a.at("features"), '+') << ',' << a.at("accuracy").get<double>() << '\n';
      emit("feature_ablation.csv", s.str());
    }
    {
      std::ostringstream s;
      s.precision(17);
      s << "controllers,classifier,accuracy\n";
      for (const auto& p : r.at("accuracy_vs_count"))
        s << p.at("controllers").get<double>() << ',' << p.at("classifier").get<std::string>() << ','
          << p.at("accuracy").get<double>() << '\n';
      emit("accuracy_vs_count.csv", s.str());
    }
    if (!r.at("accuracy_vs_snr").empty()) {
      std::ostringstream s;
      s.precision(17);
      s << "snr_db,classifier,accuracy\n";
      for (const auto& p : r.at("accuracy_vs_snr"))
        s << p.at("snr_db").get<double>() << ',' << p.at("classifier").get<std::string>() << ','
          << p.at("accuracy").get<double>() << '\n';
      emit("accuracy_vs_snr.csv", s.str());
    }
  }
  return written;
}

/// Loads or synthesises the corpus named by the config and runs the
/// classification protocol. Throws NotFound for a missing dataset directory.
inline nlohmann::json evaluate(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.dataset) {
    const Dataset ds = Dataset::open(*cfg.dataset);
    const FeatureMatrix fm = dataset_features(ds, cfg.stft, cfg.changepoint);
    FeaturesAtSnr at_snr;
    if (ds.manifest().generator) {
      at_snr = [&](double snr) { return dataset_features_at_snr(ds.manifest(), snr, cfg.stft, cfg.changepoint); };
    }
    const auto rep = run_classification_experiment(cfg, fm, at_snr);
    return report_json(cfg, rep, config_hash(to_json(ds.manifest())));
  }
  const FeatureMatrix fm = synthetic_features(cfg.generator, cfg.per_class, cfg.snr_db, cfg.stft, cfg.changepoint);
  const FeaturesAtSnr at_snr = [&](double snr) {
    if (snr == cfg.snr_db) return fm;
    return synthetic_features(cfg.generator, cfg.per_class, snr, cfg.stft, cfg.changepoint);
  };
  const auto rep = run_classification_experiment(cfg, fm, at_snr);
  return report_json(cfg, rep, config_hash(nlohmann::json(cfg.generator)));
}

}  // namespace uavrf
