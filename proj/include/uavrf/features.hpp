#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "uavrf/error.hpp"
#include "uavrf/signal.hpp"
#include "uavrf/transient.hpp"

namespace uavrf {

inline constexpr std::size_t kFeatureCount = 4;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {"skewness", "variance", "entropy",
                                                                          "kurtosis"};
/// Below this standard deviation skewness and kurtosis are undefined.
inline constexpr double kDegenerateSigma = 1e-12;

/// Statistical fingerprint of one energy transient. Column order everywhere
/// is (skewness, variance, entropy, kurtosis).
struct FeatureVector {
  double skewness = 0.0;
  double variance = 0.0;
  double entropy = 0.0;  // bits
  double kurtosis = 0.0;

  std::array<double, kFeatureCount> as_array() const { return {skewness, variance, entropy, kurtosis}; }
};

/// Population moments of the slice plus the Shannon entropy of the slice
/// renormalised to unit sum (0 log 0 = 0).
inline FeatureVector extract_features(std::span<const double> slice) {
  const std::size_t n = slice.size();
  require(n >= 4, ErrorCode::TooShort, "transient slice needs at least 4 points");
  const double inv_n = 1.0 / static_cast<double>(n);
  double mean = 0.0;
  double total = 0.0;
  for (double v : slice) {
    require(std::isfinite(v) && v >= 0.0, ErrorCode::InvalidArgument, "energy values must be finite and >= 0");
    mean += v;
  }
  total = mean;
  mean *= inv_n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : slice) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 *= inv_n;
  m3 *= inv_n;
  m4 *= inv_n;
  const double sigma = std::sqrt(m2);
  require(sigma >= kDegenerateSigma, ErrorCode::DegenerateTransient, "transient slice has zero spread");

  double entropy = 0.0;
  for (double v : slice) {
    if (v <= 0.0) continue;
    const double q = v / total;
    entropy -= q * std::log2(q);
  }

  FeatureVector f;
  f.variance = m2;
  f.skewness = m3 / (sigma * sigma * sigma);
  f.kurtosis = m4 / (m2 * m2);
  f.entropy = entropy;
  return f;
}

inline FeatureVector extract_features(const EnergyTransient& t) { return extract_features(t.slice()); }

/// Row-per-frame feature table. Labels are controller ids; failed frames are
/// listed separately rather than dropped silently.
struct FeatureMatrix {
  struct Failure {
    std::size_t index;
    std::string message;
  };

  std::vector<FeatureVector> rows;
  std::vector<int> labels;
  std::vector<std::size_t> source_index;  // frame index each row came from
  std::vector<Failure> failures;

  std::size_t size() const { return rows.size(); }
};

/// Runs transient extraction and feature computation on every frame produced
/// by `frame_at(i)` for i in [0, count).
template <typename FrameSource>
FeatureMatrix batch_extract(std::size_t count, FrameSource&& frame_at, const StftConfig& stft = {},
                            const ChangepointConfig& cp = {}) {
  FeatureMatrix out;
  for (std::size_t i = 0; i < count; ++i) {
    try {
      const SampledSignal frame = frame_at(i);
      require(frame.label && frame.label->is_uav(), ErrorCode::InvalidClass, "frame is not a labelled uav capture");
      const auto transient = extract_transient(frame, stft, cp);
      out.rows.push_back(extract_features(transient));
      out.labels.push_back(frame.label->controller_id);
      out.source_index.push_back(i);
    } catch (const Error& e) {
      out.failures.push_back({i, e.what()});
    }
  }
  return out;
}

inline FeatureMatrix batch_extract(std::span<const SampledSignal> frames, const StftConfig& stft = {},
                                   const ChangepointConfig& cp = {}) {
  return batch_extract(
      frames.size(), [&](std::size_t i) -> const SampledSignal& { return frames[i]; }, stft, cp);
}

inline void write_features_csv(std::ostream& out, const FeatureMatrix& m) {
  out.precision(17);
  out << "class_id,skewness,variance,entropy,kurtosis\n";
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto& r = m.rows[i];
    out << m.labels[i] << ',' << r.skewness << ',' << r.variance << ',' << r.entropy << ',' << r.kurtosis << '\n';
  }
}

/// Reads the table written by write_features_csv.
inline FeatureMatrix read_features_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Empty, "feature table is empty");
  require(line.rfind("class_id,skewness,variance,entropy,kurtosis", 0) == 0, ErrorCode::CorruptRecord,
          "unexpected feature table header");
  FeatureMatrix m;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        fail(ErrorCode::CorruptRecord, "bad number on line " + std::to_string(lineno));
      }
    }
    require(vals.size() == kFeatureCount + 1, ErrorCode::ArityMismatch,
            "line " + std::to_string(lineno) + " has " + std::to_string(vals.size()) + " columns");
    m.labels.push_back(static_cast<int>(vals[0]));
    m.rows.push_back({vals[1], vals[2], vals[3], vals[4]});
    m.source_index.push_back(m.rows.size() - 1);
  }
  return m;
}

}  // namespace uavrf
