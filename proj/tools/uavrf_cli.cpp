// uavrf command line: dataset generation, detection, feature extraction,
// NCA, classifier training and the experiment harness.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavrf/uavrf.hpp"

namespace fs = std::filesystem;
using namespace uavrf;

namespace {

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + p.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptRecord, p.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + p.string());
  out << j.dump(1) << '\n';
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + p.string());
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + p.string());
  return out;
}

FeatureMatrix read_features(const fs::path& p) {
  std::ifstream in(p);
  require(static_cast<bool>(in), ErrorCode::NotFound, "feature table not found: " + p.string());
  return read_features_csv(in);
}

std::vector<std::size_t> parse_feature_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string name;
  while (std::getline(ss, name, ',')) {
    bool found = false;
    for (std::size_t r = 0; r < kFeatureCount; ++r) {
      if (name == kFeatureNames[r]) {
        out.push_back(r);
        found = true;
      }
    }
    require(found, ErrorCode::BadConfig, "unknown feature '" + name + "'");
  }
  return out;
}

/// Features kept by a weights CSV written by the nca subcommand.
std::vector<std::size_t> features_from_weights(const fs::path& p, double frac) {
  std::ifstream in(p);
  require(static_cast<bool>(in), ErrorCode::NotFound, "weights file not found: " + p.string());
  std::string line;
  std::getline(in, line);
  NcaModel m;
  std::vector<double> w;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    w.push_back(std::stod(line.substr(line.find(',') + 1)));
  }
  m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return select_features(m, frac);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Micro-UAV controller detection and classification from RF captures"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic labelled dataset");
  int classes = 14, per_class = 100, seed = 7;
  std::optional<int> noise_frames;
  double snr = 25.0;
  std::size_t frame_len = std::size_t{1} << 17;
  std::string out, gen_config;
  gen->add_option("--classes", classes, "Number of controllers")->check(CLI::Range(2, 1000));
  gen->add_option("--per-class", per_class, "Frames per controller")->check(CLI::PositiveNumber);
  gen->add_option("--noise-frames", noise_frames, "Noise-only frames (default: per-class)");
  gen->add_option("--seed", seed, "Master seed");
  gen->add_option("--snr", snr, "SNR in dB");
  gen->add_option("--frame-len", frame_len, "Samples per frame");
  gen->add_option("--config", gen_config, "Generator config JSON (overrides the size flags)");
  gen->add_option("--out", out, "Output directory")->required();

  // detect
  auto* det = app.add_subcommand("detect", "Train and/or apply the wavelet-Markov detector");
  std::string det_train, det_model, det_save, det_data, det_out;
  det->add_option("--train", det_train, "Dataset to train on (uav and noise frames)");
  det->add_option("--model", det_model, "Detector model JSON to load");
  det->add_option("--save-model", det_save, "Write the trained model here");
  det->add_option("--dataset", det_data, "Dataset to classify frame by frame");
  det->add_option("--out", det_out, "Decision CSV (default stdout)");

  // features
  auto* feat = app.add_subcommand("features", "Extract transient features of every uav frame");
  std::string feat_data, feat_out, feat_traj;
  std::size_t feat_frame = 0;
  std::string feat_stat = "mean";
  feat->add_option("--dataset", feat_data, "Dataset directory")->required();
  feat->add_option("--out", feat_out, "Feature CSV")->required();
  feat->add_option("--statistic", feat_stat, "Changepoint statistic")->check(CLI::IsMember({"mean", "variance"}));
  feat->add_option("--trajectory-out", feat_traj, "Also dump one frame's energy trajectory CSV");
  feat->add_option("--frame", feat_frame, "Frame index for --trajectory-out");

  // nca
  auto* nca = app.add_subcommand("nca", "Fit NCA feature weights");
  std::string nca_in, nca_out;
  double nca_lambda = -1.0, nca_frac = 0.1;
  nca->add_option("--features", nca_in, "Feature CSV")->required();
  nca->add_option("--out", nca_out, "Weights CSV")->required();
  nca->add_option("--lambda", nca_lambda, "Regularisation (default 1/N)");
  nca->add_option("--threshold", nca_frac, "Selection threshold relative to the largest weight");

  // train
  auto* trn = app.add_subcommand("train", "Train a classifier on a feature table");
  std::string trn_in, trn_out, trn_kind = "knn", trn_sel, trn_weights;
  int trn_seed = 1;
  trn->add_option("--features", trn_in, "Feature CSV")->required();
  trn->add_option("--kind", trn_kind, "Classifier")->check(CLI::IsMember({"knn", "da", "svm"}));
  trn->add_option("--select", trn_sel, "Comma-separated feature names");
  trn->add_option("--weights", trn_weights, "NCA weights CSV to select features from");
  trn->add_option("--seed", trn_seed, "Cross-validation seed");
  trn->add_option("--out", trn_out, "Model JSON")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Run the Monte Carlo classification experiment");
  std::string ev_config, ev_out = "results", ev_model, ev_features;
  ev->add_option("--config", ev_config, "Experiment config JSON");
  ev->add_option("--out", ev_out, "Output directory");
  ev->add_option("--model", ev_model, "Score a trained classifier on a feature CSV instead");
  ev->add_option("--features", ev_features, "Feature CSV for --model");

  // sweep-snr
  auto* sw = app.add_subcommand("sweep-snr", "Detection accuracy versus SNR");
  std::string sw_config, sw_out = "results";
  sw->add_option("--config", sw_config, "Experiment config JSON");
  sw->add_option("--out", sw_out, "Output directory");

  // report
  auto* rp = app.add_subcommand("report", "Render CSV tables from evaluate/sweep-snr output");
  std::string rp_in = "results", rp_out;
  rp->add_option("--in", rp_in, "Directory holding report.json and/or detection.json");
  rp->add_option("--out", rp_out, "Table directory (default: <in>/tables)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      GeneratorConfig cfg;
      if (!gen_config.empty()) {
        cfg = read_json(gen_config).get<GeneratorConfig>();
      } else {
        cfg.n_classes = classes;
        cfg.frame_len = frame_len;
        cfg.rng_seed = static_cast<std::uint64_t>(seed);
      }
      const auto m = generate_dataset(cfg, per_class, noise_frames.value_or(per_class), snr, out);
      std::cout << "wrote " << m.frames.size() << " frames to " << out << " (config " << m.config_hash << ")\n";
    } else if (det->parsed()) {
      require(!det_train.empty() || !det_model.empty(), ErrorCode::BadConfig, "need --train or --model");
      DetectorModel model;
      if (!det_model.empty()) {
        model = detector_from_json(read_json(det_model));
      } else {
        const Dataset ds = Dataset::open(det_train);
        std::vector<WaveletSignal> uav, noise;
        for (std::size_t i = 0; i < ds.size(); ++i) {
          (ds.manifest().frames[i].label.is_uav() ? uav : noise).push_back(decompose3(ds.frame(i)));
        }
        model = train_detector(uav, noise);
      }
      if (!det_save.empty()) write_json(det_save, to_json(model));
      if (!det_data.empty()) {
        const Dataset ds = Dataset::open(det_data);
        std::ofstream file;
        if (!det_out.empty()) file = open_out(det_out);
        std::ostream& os = det_out.empty() ? std::cout : file;
        os.precision(17);
        os << "file,label,decision,ll_uav,ll_noise\n";
        int correct = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
          const auto& rec = ds.manifest().frames[i];
          const auto d = model(ds.frame(i));
          correct += d.uav_present() == rec.label.is_uav();
          os << rec.file << ',' << to_string(rec.label) << ',' << (d.uav_present() ? "uav" : "noise") << ','
             << d.ll_uav << ',' << d.ll_noise << '\n';
        }
        std::cerr << "detection accuracy " << static_cast<double>(correct) / static_cast<double>(ds.size()) << '\n';
      }
    } else if (feat->parsed()) {
      const Dataset ds = Dataset::open(feat_data);
      ChangepointConfig cp;
      cp.statistic = feat_stat == "mean" ? ChangeStatistic::Mean : ChangeStatistic::Variance;
      const auto fm = dataset_features(ds, {}, cp);
      auto os = open_out(feat_out);
      write_features_csv(os, fm);
      for (const auto& f : fm.failures) std::cerr << "frame " << f.index << ": " << f.message << '\n';
      std::cout << fm.size() << " feature rows, " << fm.failures.size() << " failures\n";
      if (!feat_traj.empty()) {
        const auto frame = ds.frame(feat_frame);
        const StftConfig stft;
        const auto t = extract_transient(frame, stft, cp);
        auto ts = open_out(feat_traj);
        write_trajectory_csv(ts, t, static_cast<double>(stft.hop) / frame.sample_rate);
      }
    } else if (nca->parsed()) {
      const auto fm = read_features(nca_in);
      const Eigen::MatrixXd x = to_matrix(fm);
      NcaConfig cfg;
      cfg.lambda = nca_lambda;
      const auto m = nca_fit(Standardizer::fit(x).apply(x), fm.labels, cfg);
      auto os = open_out(nca_out);
      write_weights_csv(os, m.weights);
      std::cout << "selected:";
      for (auto r : select_features(m, nca_frac)) std::cout << ' ' << kFeatureNames[r];
      std::cout << '\n';
    } else if (trn->parsed()) {
      const auto fm = read_features(trn_in);
      std::vector<std::size_t> sel = all_features();
      if (!trn_sel.empty()) sel = parse_feature_list(trn_sel);
      if (!trn_weights.empty()) sel = features_from_weights(trn_weights, 0.1);
      const Eigen::MatrixXd x = to_matrix(fm);
      const auto kind = classifier_kind_from_string(trn_kind);
      const auto hp = tune_hyperparams(kind, x, fm.labels, sel, {}, static_cast<std::uint64_t>(trn_seed));
      write_json(trn_out, to_json(train(kind, x, fm.labels, sel, hp)));
    } else if (ev->parsed()) {
      if (!ev_model.empty()) {
        require(!ev_features.empty(), ErrorCode::BadConfig, "--model needs --features");
        const auto model = classifier_from_json(read_json(ev_model));
        const auto fm = read_features(ev_features);
        const int n = *std::max_element(fm.labels.begin(), fm.labels.end());
        const auto cm = confusion_matrix(model, to_matrix(fm), fm.labels, n);
        write_confusion_csv(std::cout, cm);
        std::cout << "accuracy," << cm.accuracy() << '\n';
        return 0;
      }
      const ExperimentConfig cfg = ev_config.empty() ? ExperimentConfig{} : load_experiment_config(ev_config);
      const auto t0 = std::chrono::steady_clock::now();
      const auto report = evaluate(cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_json(fs::path(ev_out) / "report.json", report);
      write_json(fs::path(ev_out) / "timing.json", {{"evaluate_seconds", secs}});
      for (const auto& [kind, v] : report["summary"].items())
        std::cout << kind << " mean accuracy " << v["mean_accuracy"].get<double>() << '\n';
    } else if (sw->parsed()) {
      const ExperimentConfig cfg = sw_config.empty() ? ExperimentConfig{} : load_experiment_config(sw_config);
      const auto sweep = run_detection_sweep(cfg);
      const auto j = detection_json(cfg, sweep);
      write_json(fs::path(sw_out) / "detection.json", j);
      write_detection_csv(std::cout, j);
    } else if (rp->parsed()) {
      const fs::path in(rp_in);
      std::optional<nlohmann::json> report, detection;
      if (fs::exists(in / "report.json")) report = read_json(in / "report.json");
      if (fs::exists(in / "detection.json")) detection = read_json(in / "detection.json");
      require(report || detection, ErrorCode::NotFound, "no report.json or detection.json in " + in.string());
      const fs::path dir = rp_out.empty() ? in / "tables" : fs::path(rp_out);
      for (const auto& f : render_tables(dir, report ? &*report : nullptr, detection ? &*detection : nullptr))
        std::cout << (dir / f).string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::NotFound ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
