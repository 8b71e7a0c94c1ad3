#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "uavrf/error.hpp"
#include "uavrf/signal.hpp"

namespace uavrf {

enum class WindowKind { Hann, Rectangular };

struct StftConfig {
  WindowKind window = WindowKind::Hann;
  std::size_t window_len = 256;
  std::size_t hop = 128;
  std::size_t fft_size = 256;
};

inline void validate(const StftConfig& c) {
  require(c.hop > 0 && c.hop <= c.window_len && c.window_len <= c.fft_size, ErrorCode::BadConfig,
          "STFT config needs 0 < hop <= window_len <= fft_size");
}

/// Periodic Hann (or rectangular) taper of the given length.
inline std::vector<double> make_window(WindowKind kind, std::size_t len) {
  std::vector<double> w(len, 1.0);
  if (kind == WindowKind::Hann) {
    for (std::size_t n = 0; n < len; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(len));
    }
  }
  return w;
}

/// Power |STFT|^2, frames x one-sided bins, row-major.
struct Spectrogram {
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  double time_step = 0.0;  // seconds between frames
  double freq_step = 0.0;  // Hz between bins
  std::vector<double> power;

  double at(std::size_t t, std::size_t f) const { return power[t * n_bins + f]; }
  std::span<const double> row(std::size_t t) const { return {power.data() + t * n_bins, n_bins}; }
};

namespace detail {

// FFTW planning is not thread-safe; execution with a private plan is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    if (!in_ || !out_) {
      release();
      throw std::bad_alloc();
    }
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() { release(); }

  double* input() { return in_; }
  const fftw_complex* output() const { return out_; }
  void run() { fftw_execute(plan_); }

 private:
  void release() {
    if (plan_) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    if (in_) fftw_free(in_);
    if (out_) fftw_free(out_);
    plan_ = nullptr;
    in_ = nullptr;
    out_ = nullptr;
  }

  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

inline Spectrogram spectrogram(std::span<const double> y, double sample_rate, const StftConfig& cfg) {
  validate(cfg);
  require(sample_rate > 0.0, ErrorCode::BadConfig, "sample rate must be positive");
  require(y.size() >= cfg.window_len, ErrorCode::TooShort, "signal shorter than the STFT window");
  const auto window = make_window(cfg.window, cfg.window_len);

  Spectrogram s;
  s.n_frames = (y.size() - cfg.window_len) / cfg.hop + 1;
  s.n_bins = cfg.fft_size / 2 + 1;
  s.time_step = static_cast<double>(cfg.hop) / sample_rate;
  s.freq_step = sample_rate / static_cast<double>(cfg.fft_size);
  s.power.resize(s.n_frames * s.n_bins);

  detail::RealFft fft(cfg.fft_size);
  double* in = fft.input();
  for (std::size_t t = 0; t < s.n_frames; ++t) {
    const std::size_t start = t * cfg.hop;
    for (std::size_t m = 0; m < cfg.window_len; ++m) in[m] = y[start + m] * window[m];
    std::fill(in + cfg.window_len, in + cfg.fft_size, 0.0);
    fft.run();
    const fftw_complex* out = fft.output();
    double* row = s.power.data() + t * s.n_bins;
    for (std::size_t f = 0; f < s.n_bins; ++f) row[f] = out[f][0] * out[f][0] + out[f][1] * out[f][1];
  }
  return s;
}

inline Spectrogram spectrogram(const SampledSignal& y, const StftConfig& cfg) {
  const auto x = y.as_double();
  return spectrogram(x, y.sample_rate, cfg);
}

/// Per-frame peak power across frequency, scaled so the global peak is 1.
inline std::vector<double> energy_trajectory(const Spectrogram& s) {
  require(s.n_frames > 0 && s.n_bins > 0, ErrorCode::Empty, "empty spectrogram");
  std::vector<double> e(s.n_frames);
  for (std::size_t t = 0; t < s.n_frames; ++t) {
    const auto row = s.row(t);
    e[t] = *std::max_element(row.begin(), row.end());
  }
  const double peak = *std::max_element(e.begin(), e.end());
  require(peak > 0.0, ErrorCode::AllZero, "spectrogram is all zero");
  for (auto& v : e) v /= peak;
  return e;
}

enum class ChangeStatistic {
  Mean,      // within-segment squared deviation from the segment mean
  Variance,  // Gaussian variance change: len * ln(segment variance)
};

struct ChangepointConfig {
  ChangeStatistic statistic = ChangeStatistic::Mean;
  // Improvement a segmentation must bring over the unsegmented fit (relative
  // SSE reduction for Mean, nats per sample for Variance); it must also be
  // strictly positive.
  double min_gain = 0.0;
};

/// Segment cost from prefix sums of x and x^2 over [i, j).
class SegmentCost {
 public:
  SegmentCost(std::span<const double> x, ChangeStatistic stat) : stat_(stat), s1_(x.size() + 1), s2_(x.size() + 1) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      s1_[k + 1] = s1_[k] + x[k];
      s2_[k + 1] = s2_[k] + x[k] * x[k];
    }
  }

  double operator()(std::size_t i, std::size_t j) const {
    const double len = static_cast<double>(j - i);
    const double sum = s1_[j] - s1_[i];
    const double sse = std::max(0.0, (s2_[j] - s2_[i]) - sum * sum / len);
    if (stat_ == ChangeStatistic::Mean) return sse;
    return len * std::log(std::max(sse / len, kVarianceFloor));
  }

  static constexpr double kVarianceFloor = 1e-12;

 private:
  ChangeStatistic stat_;
  std::vector<double> s1_;
  std::vector<double> s2_;
};

/// Optimal split of x into [0,a), [a,b), [b,n) under the segment cost.
struct TwoBreakpointFit {
  std::size_t first = 0;   // a
  std::size_t second = 0;  // b
  double cost = 0.0;
};

/// Exhaustive search over 1 <= a < b <= n-1; the first minimum in (a, b)
/// lexicographic order wins.
inline TwoBreakpointFit best_two_breakpoints(std::span<const double> x, ChangeStatistic stat) {
  require(x.size() >= 3, ErrorCode::TooShort, "two breakpoints need at least 3 points");
  const std::size_t n = x.size();
  const SegmentCost cost(x, stat);
  TwoBreakpointFit best{0, 0, std::numeric_limits<double>::infinity()};
  for (std::size_t a = 1; a + 1 < n; ++a) {
    const double head = cost(0, a);
    for (std::size_t b = a + 1; b < n; ++b) {
      const double c = head + cost(a, b) + cost(b, n);
      if (c < best.cost) best = {a, b, c};
    }
  }
  return best;
}

struct OneBreakpointFit {
  std::size_t at = 0;
  double cost = 0.0;
};

inline OneBreakpointFit best_one_breakpoint(std::span<const double> x, ChangeStatistic stat) {
  require(x.size() >= 2, ErrorCode::TooShort, "a breakpoint needs at least 2 points");
  const SegmentCost cost(x, stat);
  OneBreakpointFit best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t a = 1; a < x.size(); ++a) {
    const double c = cost(0, a) + cost(a, x.size());
    if (c < best.cost) best = {a, c};
  }
  return best;
}

/// Improvement of a segmentation cost over the single-segment cost.
inline double segmentation_gain(double whole, double split, std::size_t n, ChangeStatistic stat) {
  if (stat == ChangeStatistic::Mean) return whole > 0.0 ? (whole - split) / whole : 0.0;
  return (whole - split) / static_cast<double>(n);
}

struct TransientBounds {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  bool degenerate = false;
};

/// Start/end of the energy transient: the middle segment of the best
/// three-segment fit. A fit whose middle segment is a single point, or that
/// does not improve on the flat fit, falls back to the best single change
/// (start only, end at the last index), and to the whole sequence when that
/// does not improve on the flat fit either.
inline TransientBounds find_transient(std::span<const double> e, const ChangepointConfig& cfg = {}) {
  require(e.size() >= 4, ErrorCode::TooShort, "transient search needs at least 4 points");
  const std::size_t n = e.size();
  const SegmentCost cost(e, cfg.statistic);
  const double whole = cost(0, n);

  // Improvements below rounding level of the prefix sums count as none.
  double energy = 0.0;
  for (double v : e) energy += v * v;
  const double resolution = cfg.statistic == ChangeStatistic::Mean ? 1e-12 * energy : 1e-9 * static_cast<double>(n);
  auto significant = [&](double split) {
    return whole - split > resolution && segmentation_gain(whole, split, n, cfg.statistic) >= cfg.min_gain;
  };
  const auto two = best_two_breakpoints(e, cfg.statistic);
  if (two.second - two.first >= 2 && significant(two.cost)) return {two.first, two.second - 1, false};
  const auto one = best_one_breakpoint(e, cfg.statistic);
  if (significant(one.cost)) return {one.at, n - 1, true};
  return {0, n - 1, true};
}

struct EnergyTransient {
  std::vector<double> trajectory;  // normalised, peak 1
  std::size_t start_idx = 0;
  std::size_t end_idx = 0;  // inclusive
  bool degenerate = false;

  std::size_t length() const { return end_idx - start_idx + 1; }
  std::span<const double> slice() const { return {trajectory.data() + start_idx, length()}; }
};

inline EnergyTransient extract_transient(const SampledSignal& y, const StftConfig& stft = {},
                                         const ChangepointConfig& cp = {}) {
  EnergyTransient t;
  t.trajectory = energy_trajectory(spectrogram(y, stft));
  const auto bounds = find_transient(t.trajectory, cp);
  t.start_idx = bounds.start;
  t.end_idx = bounds.end;
  t.degenerate = bounds.degenerate;
  return t;
}

/// Long-format dump: time_s, freq_hz, power.
inline void write_spectrogram_csv(std::ostream& out, const Spectrogram& s) {
  out << "time_s,freq_hz,power\n";
  for (std::size_t t = 0; t < s.n_frames; ++t)
    for (std::size_t f = 0; f < s.n_bins; ++f)
      out << static_cast<double>(t) * s.time_step << ',' << static_cast<double>(f) * s.freq_step << ','
          << s.at(t, f) << '\n';
}

inline void write_trajectory_csv(std::ostream& out, const EnergyTransient& t, double time_step) {
  out << "bin,time_s,energy,in_transient\n";
  for (std::size_t i = 0; i < t.trajectory.size(); ++i) {
    out << i << ',' << static_cast<double>(i) * time_step << ',' << t.trajectory[i] << ','
        << (i >= t.start_idx && i <= t.end_idx ? 1 : 0) << '\n';
  }
}

}  // namespace uavrf
