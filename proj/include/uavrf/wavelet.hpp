#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "uavrf/error.hpp"
#include "uavrf/signal.hpp"

namespace uavrf {

inline constexpr int kWaveletLevels = 3;

/// Level-3 Haar approximation of a capture, the detector's input.
struct WaveletSignal {
  std::vector<double> coeffs;
  std::size_t source_len = 0;
  int levels = kWaveletLevels;
};

struct HaarBands {
  std::vector<double> approx;
  std::vector<double> detail;
};

/// One orthonormal Haar analysis step; a trailing odd sample is dropped.
inline HaarBands haar_stage(std::span<const double> x) {
  require(x.size() >= 2, ErrorCode::TooShort, "haar stage needs at least 2 samples");
  const std::size_t half = x.size() / 2;
  HaarBands out;
  out.approx.resize(half);
  out.detail.resize(half);
  constexpr double kNorm = 1.0 / std::numbers::sqrt2;
  for (std::size_t i = 0; i < half; ++i) {
    out.approx[i] = (x[2 * i] + x[2 * i + 1]) * kNorm;
    out.detail[i] = (x[2 * i] - x[2 * i + 1]) * kNorm;
  }
  return out;
}

inline WaveletSignal decompose3(std::span<const double> x) {
  require(x.size() >= 8, ErrorCode::TooShort, "three-level decomposition needs at least 8 samples");
  WaveletSignal out;
  out.source_len = x.size();
  std::vector<double> approx(x.begin(), x.end());
  for (int level = 0; level < kWaveletLevels; ++level) approx = haar_stage(approx).approx;
  out.coeffs = std::move(approx);
  return out;
}

inline WaveletSignal decompose3(const SampledSignal& s) {
  const auto x = s.as_double();
  return decompose3(std::span<const double>(x));
}

}  // namespace uavrf
