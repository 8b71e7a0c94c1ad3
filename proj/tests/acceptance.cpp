// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "uavrf/uavrf.hpp"

using namespace uavrf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool ok = o.pass && in_time;
  failures += !ok;
  char timing[96];
  std::snprintf(timing, sizeof timing, "%.2fs / limit %.0fs", secs, limit_s);
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << o.detail << " (" << timing
            << (in_time ? "" : ", over time") << ")" << std::endl;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// Wavelet --------------------------------------------------------------------

double energy(const std::vector<double>& v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

Outcome wavelet_criterion() {
  std::mt19937_64 rng(1001);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(8, 4096);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  double worst_energy = 0.0, worst_linear = 0.0;
  for (int f = 0; f < 1000; ++f) {
    const std::size_t m = len(rng);
    std::vector<double> x(m), y(m), z(m);
    for (auto& v : x) v = n(rng);
    for (auto& v : y) v = n(rng);
    const double a = coef(rng), b = coef(rng);
    for (std::size_t i = 0; i < m; ++i) z[i] = a * x[i] + b * y[i];
    std::vector<double> cur = x;
    for (int level = 0; level < kWaveletLevels; ++level) {
      const std::size_t even = cur.size() & ~std::size_t{1};
      const auto bands = haar_stage(cur);
      const double in = energy(std::vector<double>(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(even)));
      const double out = energy(bands.approx) + energy(bands.detail);
      worst_energy = std::max(worst_energy, std::abs(in - out) / in);
      cur = bands.approx;
    }
    const auto wx = decompose3(x), wy = decompose3(y), wz = decompose3(z);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < wz.coeffs.size(); ++i) {
      const double expect = a * wx.coeffs[i] + b * wy.coeffs[i];
      num += (wz.coeffs[i] - expect) * (wz.coeffs[i] - expect);
      den += expect * expect;
    }
    worst_linear = std::max(worst_linear, std::sqrt(num / den));
  }
  bool constant_ok = true;
  for (double c : {1.0, -0.37, 1e3}) {
    const auto w = decompose3(std::vector<double>(1024, c));
    const double expect = 2.0 * std::sqrt(2.0) * c;
    for (double v : w.coeffs) constant_ok &= v == w.coeffs.front() && std::abs(v - expect) <= 4e-16 * std::abs(expect);
  }
  return {worst_energy < 1e-9 && worst_linear < 1e-9 && constant_ok,
          "max energy rel err " + fmt(worst_energy) + ", max linearity rel err " + fmt(worst_linear) +
              ", constant identity " + (constant_ok ? "holds" : "broken")};
}

// Detector -------------------------------------------------------------------

Outcome detector_oracle_criterion() {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::uniform_int_distribution<int> s(0, 2);
  std::uniform_int_distribution<std::size_t> len(1, 12);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    MarkovClassModel m;
    double total = 0.0;
    for (auto& row : m.p)
      for (auto& v : row) total += (v = u(rng));
    for (auto& row : m.p)
      for (auto& v : row) v /= total;
    StateSequence seq(len(rng));
    for (auto& v : seq) v = static_cast<State>(s(rng));
    long double prod = 1.0L;
    int exponent = 0;
    for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
      prod *= m.p[static_cast<int>(seq[k])][static_cast<int>(seq[k + 1])];
      int e = 0;
      prod = std::frexp(prod, &e);
      exponent += e;
    }
    const double oracle = static_cast<double>(std::log(prod) + exponent * std::log(2.0L));
    const TransitionCounts counts = seq.size() >= 2 ? count_transitions(seq) : TransitionCounts{};
    const double got = log_likelihood(counts, m);
    worst = std::max(worst, std::abs(got - oracle) / std::max(1.0, std::abs(oracle)));
  }
  return {worst <= 1e-12, "max rel err " + fmt(worst) + " over 10000 sequences"};
}

Outcome detection_trend_criterion() {
  ExperimentConfig cfg;
  cfg.detection_snr_grid = {0, 4, 8, 12, 16, 20, 24};
  cfg.detection_trials = 200;
  const auto sweep = run_detection_sweep(cfg);
  std::string row;
  bool monotone = true;
  for (std::size_t k = 0; k < sweep.points.size(); ++k) {
    row += (k ? " " : "") + fmt(100.0 * sweep.points[k].accuracy()) + "%";
    if (k > 0) monotone &= sweep.points[k].accuracy() >= sweep.points[k - 1].accuracy();
  }
  const auto& top = sweep.points.back();
  const bool perfect = top.trials == 200 && top.uav_correct + top.noise_correct == 200;
  return {monotone && perfect, "accuracy over {0..24 step 4} dB: " + row};
}

// Changepoints ---------------------------------------------------------------

double sse(const std::vector<double>& x, std::size_t i, std::size_t j) {
  double mean = 0.0;
  for (std::size_t k = i; k < j; ++k) mean += x[k];
  mean /= static_cast<double>(j - i);
  double s = 0.0;
  for (std::size_t k = i; k < j; ++k) s += (x[k] - mean) * (x[k] - mean);
  return s;
}

TransientBounds exhaustive_transient(const std::vector<double>& x) {
  const std::size_t n = x.size();
  const double whole = sse(x, 0, n);
  const double tol = 1e-12 * energy(x);
  double best = std::numeric_limits<double>::infinity();
  std::size_t ba = 0, bb = 0;
  for (std::size_t a = 1; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double c = sse(x, 0, a) + sse(x, a, b) + sse(x, b, n);
      if (c < best) {
        best = c;
        ba = a;
        bb = b;
      }
    }
  }
  if (bb - ba >= 2 && whole - best > tol) return {ba, bb - 1, false};
  double best1 = std::numeric_limits<double>::infinity();
  std::size_t b1 = 0;
  for (std::size_t a = 1; a < n; ++a) {
    const double c = sse(x, 0, a) + sse(x, a, n);
    if (c < best1) {
      best1 = c;
      b1 = a;
    }
  }
  if (whole - best1 > tol) return {b1, n - 1, true};
  return {0, n - 1, true};
}

Outcome changepoint_criterion() {
  std::mt19937_64 rng(1004);
  std::uniform_int_distribution<std::size_t> len(4, 64);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 0.05);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = len(rng);
    std::vector<double> x(m);
    if (trial % 2 == 0) {
      for (auto& v : x) v = u(rng);
    } else {
      // Low / high / low plateau with noise.
      std::uniform_int_distribution<std::size_t> cut(1, m - 1);
      std::size_t a = cut(rng), b = cut(rng);
      if (a > b) std::swap(a, b);
      for (std::size_t i = 0; i < m; ++i) x[i] = std::abs((i >= a && i < b ? 1.0 : 0.1) + n(rng));
    }
    const auto got = find_transient(x);
    const auto want = exhaustive_transient(x);
    mismatches += got.start != want.start || got.end != want.end || got.degenerate != want.degenerate;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 1000 cases"};
}

// Features -------------------------------------------------------------------

Outcome feature_criterion() {
  std::mt19937_64 rng(1005);
  std::uniform_int_distribution<std::size_t> len(4, 256);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int moment_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(len(rng));
    for (auto& v : x) v = u(rng);
    const long double cnt = static_cast<long double>(x.size());
    long double total = 0.0L;
    for (double v : x) total += v;
    const long double mean = total / cnt;
    long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L, h = 0.0L;
    for (double v : x) {
      const long double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
      if (v > 0.0) h -= (v / total) * std::log2(v / total);
    }
    m2 /= cnt;
    m3 /= cnt;
    m4 /= cnt;
    const double oracle[4] = {static_cast<double>(m3 / std::pow(m2, 1.5L)), static_cast<double>(m2),
                              static_cast<double>(h), static_cast<double>(m4 / (m2 * m2))};
    const auto f = extract_features(x).as_array();
    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(f[k] - oracle[k]) / std::max(1.0, std::abs(oracle[k])));
    moment_violations += f[3] < 1.0 + f[0] * f[0];
  }
  return {worst <= 1e-12 && moment_violations == 0,
          "max err " + fmt(worst) + ", " + std::to_string(moment_violations) + " moment violations"};
}

// NCA ------------------------------------------------------------------------

Outcome nca_criterion() {
  std::mt19937_64 rng(1006);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd x(200, 4);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    const int c = i % 4;
    x(i, 0) = c + 0.5 * n(rng);
    x(i, 1) = (c % 2) + 0.5 * n(rng);
    x(i, 2) = n(rng);
    x(i, 3) = x(i, 0) + 0.1 * n(rng);
    y.push_back(c + 1);
  }
  x = Standardizer::fit(x).apply(x);
  const double lambda = 1.0 / 200.0;
  std::uniform_real_distribution<double> u(0.1, 2.0);
  double worst = 0.0;
  for (int p = 0; p < 10; ++p) {
    Eigen::VectorXd w(4);
    for (auto& v : w) v = u(rng);
    const auto ev = nca_evaluate(x, y, w, lambda, 1.0);
    Eigen::VectorXd fd(4);
    for (int r = 0; r < 4; ++r) {
      const double h = 1e-6;
      Eigen::VectorXd wp = w, wm = w;
      wp[r] += h;
      wm[r] -= h;
      fd[r] = (nca_evaluate(x, y, wp, lambda, 1.0, false).objective - nca_evaluate(x, y, wm, lambda, 1.0, false).objective) /
              (2.0 * h);
    }
    worst = std::max(worst, (ev.gradient - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  const auto m = nca_fit(x, y);
  bool monotone = true;
  for (std::size_t k = 1; k < m.objective_trace.size(); ++k) monotone &= m.objective_trace[k] >= m.objective_trace[k - 1];
  return {worst < 1e-5 && monotone, "max gradient rel err " + fmt(worst) + ", " +
                                        std::to_string(m.objective_trace.size()) + " accepted iterates " +
                                        (monotone ? "non-decreasing" : "decreasing")};
}

// Classification -------------------------------------------------------------

struct Corpus {
  ExperimentConfig cfg;
  FeatureMatrix at_25;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus out;
    out.cfg.snr_db = 25.0;
    out.cfg.per_class = 100;
    out.at_25 = synthetic_features(out.cfg.generator, out.cfg.per_class, out.cfg.snr_db, out.cfg.stft,
                                   out.cfg.changepoint);
    return out;
  }();
  return c;
}

double knn_accuracy(const FeatureMatrix& fm, double x, std::uint64_t stream_id) {
  auto cfg = corpus().cfg;
  cfg.classifiers = {ClassifierKind::Knn};
  return curve_points(fm, x, stream_id, cfg).front().accuracy;
}

Outcome classification_criterion() {
  const auto& c = corpus();
  auto cfg = c.cfg;
  cfg.curve_runs = cfg.n_monte_carlo;
  const auto pts = curve_points(c.at_25, cfg.generator.n_classes, stream::kMain, cfg);
  double knn = 0.0, da = 0.0, svm = 0.0;
  for (const auto& p : pts) {
    (p.kind == ClassifierKind::Knn ? knn : p.kind == ClassifierKind::Da ? da : svm) = p.accuracy;
  }
  const bool ok = c.at_25.failures.empty() && knn >= 0.95 && std::abs(svm - knn) <= 0.03 && da >= 0.85;
  return {ok, std::to_string(c.at_25.size()) + " frames, " + std::to_string(cfg.n_monte_carlo) + " runs: knn " +
                  fmt(knn) + ", svm " + fmt(svm) + ", da " + fmt(da)};
}

Outcome count_criterion() {
  const auto& c = corpus();
  double lo = 1.0, hi = 0.0;
  std::string row;
  for (int count : c.cfg.controller_count_grid) {
    const double a = knn_accuracy(restrict_classes(c.at_25, count), count, stream::kCount ^ static_cast<std::uint64_t>(count));
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    row += " " + std::to_string(count) + ":" + fmt(a);
  }
  return {hi - lo <= 0.03, "knn by count" + row + ", range " + fmt(100.0 * (hi - lo), 3) + " points"};
}

Outcome snr_criterion() {
  const auto& c = corpus();
  const std::vector<double> grid = {10, 13, 16, 19, 22, 25};
  std::vector<double> acc;
  std::string row;
  for (double snr : grid) {
    const FeatureMatrix fm = snr == c.cfg.snr_db ? c.at_25
                                                  : synthetic_features(c.cfg.generator, c.cfg.per_class, snr,
                                                                       c.cfg.stft, c.cfg.changepoint);
    acc.push_back(knn_accuracy(fm, snr, stream::kSnr));
    row += " " + fmt(snr, 3) + ":" + fmt(acc.back());
  }
  bool shape = true;
  for (std::size_t k = 1; k < acc.size(); ++k) shape &= acc[k - 1] <= acc[k] + 0.02;
  const double drop = acc.back() - acc.front();
  return {shape && drop >= 0.10, "knn by snr" + row + ", drop " + fmt(100.0 * drop, 3) + " points"};
}

// Determinism ----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism_criterion() {
  const fs::path dir = fs::temp_directory_path() / "uavrf_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = UAVRF_CLI_PATH;
  const std::string quiet = " > " + (dir / "log.txt").string() + " 2>&1";
  if (run(cli + " generate --classes 4 --per-class 20 --noise-frames 4 --seed 7 --frame-len 32768 --out " +
          (dir / "ds").string() + quiet) != 0)
    return {false, "generate failed: " + slurp(dir / "log.txt")};
  nlohmann::json cfg{{"dataset", (dir / "ds").string()},
                     {"n_monte_carlo", 3},
                     {"curve_runs", 2},
                     {"snr_grid", {15, 25}},
                     {"controller_count_grid", {2, 4}},
                     {"rng_seed", 11}};
  std::ofstream(dir / "cfg.json") << cfg.dump(2);
  for (const char* out : {"a", "b"}) {
    if (run(cli + " evaluate --config " + (dir / "cfg.json").string() + " --out " + (dir / out).string() + quiet) != 0)
      return {false, "evaluate failed: " + slurp(dir / "log.txt")};
  }
  const auto a = slurp(dir / "a" / "report.json");
  const auto b = slurp(dir / "b" / "report.json");
  return {!a.empty() && a == b, std::to_string(a.size()) + "-byte reports " + (a == b ? "identical" : "differ")};
}

}  // namespace

int main() {
  criterion(1, "wavelet energy, linearity and constant identity", 5, wavelet_criterion);
  criterion(2, "detector log-likelihood vs product oracle", 10, detector_oracle_criterion);
  criterion(3, "detection accuracy monotone in SNR, 100% at 24 dB", 120, detection_trend_criterion);
  criterion(4, "changepoints vs exhaustive search", 30, changepoint_criterion);
  criterion(5, "features vs direct summation", 5, feature_criterion);
  criterion(6, "NCA gradient and ascent", 30, nca_criterion);
  criterion(7, "14-class accuracy at 25 dB", 300, classification_criterion);
  criterion(8, "accuracy stable across controller counts", 300, count_criterion);
  criterion(9, "accuracy degrades with SNR", 300, snr_criterion);
  criterion(10, "evaluate is deterministic", 300, determinism_criterion);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
