#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavrf/error.hpp"
#include "uavrf/signal.hpp"
#include "uavrf/wavelet.hpp"

namespace uavrf {

/// Thresholds reported for the original indoor capture rig (volts); kept for
/// reference, synthetic runs estimate their own from noise frames.
inline constexpr double kReferenceRigThreshold = 0.0098;

/// Amplitude states: S1 above the upper threshold, S2 inside the band, S3 below.
enum class State : std::uint8_t { S1 = 0, S2 = 1, S3 = 2 };

using StateSequence = std::vector<State>;
using Matrix3 = std::array<std::array<double, 3>, 3>;

struct StateThresholds {
  double upper = 0.0;  // T1
  double lower = 0.0;  // T2

  friend bool operator==(const StateThresholds&, const StateThresholds&) = default;
};

inline StateThresholds thresholds_from_sigma(double sigma, double k_sigma = 3.0) {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument, "noise sigma must be positive");
  return {k_sigma * sigma, -k_sigma * sigma};
}

struct TransitionCounts {
  std::array<std::array<std::uint64_t, 3>, 3> n{};

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& row : n)
      for (auto v : row) t += v;
    return t;
  }

  TransitionCounts& operator+=(const TransitionCounts& o) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) n[i][j] += o.n[i][j];
    return *this;
  }
};

/// Joint transition-frequency matrix of one class: p_ij sums to one over all
/// nine cells.
struct MarkovClassModel {
  Matrix3 p{};
  ClassLabel::Kind kind = ClassLabel::Kind::Noise;
  StateThresholds thresholds;
  double alpha = 1.0;
  std::uint64_t training_transitions = 0;
  std::size_t training_frames = 0;
};

/// Pooled (population) standard deviation of every coefficient of every frame.
inline double estimate_noise_sigma(std::span<const WaveletSignal> noise_frames) {
  require(!noise_frames.empty(), ErrorCode::Empty, "need at least one noise frame");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& f : noise_frames) {
    for (double v : f.coeffs) sum += v;
    count += f.coeffs.size();
  }
  require(count > 0, ErrorCode::Empty, "noise frames hold no coefficients");
  const double mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (const auto& f : noise_frames)
    for (double v : f.coeffs) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(count));
}

inline State quantize_one(double y, const StateThresholds& th) {
  if (y > th.upper) return State::S1;
  if (y < th.lower) return State::S3;
  return State::S2;
}

inline StateSequence quantize(std::span<const double> y, const StateThresholds& th) {
  require(th.upper > th.lower, ErrorCode::InvalidArgument, "upper threshold must exceed lower");
  StateSequence out;
  out.reserve(y.size());
  for (double v : y) out.push_back(quantize_one(v, th));
  return out;
}

inline StateSequence quantize(const WaveletSignal& y, const StateThresholds& th) { return quantize(y.coeffs, th); }

inline TransitionCounts count_transitions(std::span<const State> s) {
  require(s.size() >= 2, ErrorCode::TooShort, "need at least two states to count transitions");
  TransitionCounts c;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    ++c.n[static_cast<int>(s[k])][static_cast<int>(s[k + 1])];
  }
  return c;
}

/// Pools transitions of all sequences and normalises (N + alpha) jointly.
inline MarkovClassModel fit_markov(std::span<const StateSequence> sequences, double alpha, ClassLabel::Kind kind,
                                   const StateThresholds& thresholds) {
  require(alpha >= 0.0, ErrorCode::InvalidArgument, "alpha must be >= 0");
  TransitionCounts pooled;
  for (const auto& s : sequences) {
    if (s.size() >= 2) pooled += count_transitions(s);
  }
  require(pooled.total() >= 1, ErrorCode::Empty, "no transitions to fit");
  MarkovClassModel m;
  m.kind = kind;
  m.thresholds = thresholds;
  m.alpha = alpha;
  m.training_transitions = pooled.total();
  m.training_frames = sequences.size();
  const double denom = static_cast<double>(pooled.total()) + 9.0 * alpha;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m.p[i][j] = (static_cast<double>(pooled.n[i][j]) + alpha) / denom;
  return m;
}

/// sum_ij N_ij ln p_ij; cells with N_ij = 0 contribute nothing.
inline double log_likelihood(const TransitionCounts& c, const MarkovClassModel& m) {
  double ll = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (c.n[i][j] == 0) continue;
      require(m.p[i][j] > 0.0, ErrorCode::ZeroProbabilityEntry,
              "model has p=0 for an observed transition S" + std::to_string(i + 1) + "->S" + std::to_string(j + 1));
      ll += static_cast<double>(c.n[i][j]) * std::log(m.p[i][j]);
    }
  }
  return ll;
}

struct Detection {
  ClassLabel::Kind decision = ClassLabel::Kind::Noise;
  double ll_uav = 0.0;
  double ll_noise = 0.0;

  bool uav_present() const { return decision == ClassLabel::Kind::Uav; }
};

inline Detection detect(const WaveletSignal& y, const MarkovClassModel& uav_model,
                        const MarkovClassModel& noise_model) {
  require(uav_model.thresholds == noise_model.thresholds, ErrorCode::InvalidArgument,
          "uav and noise models must share thresholds");
  const auto counts = count_transitions(quantize(y, uav_model.thresholds));
  Detection d;
  d.ll_uav = log_likelihood(counts, uav_model);
  d.ll_noise = log_likelihood(counts, noise_model);
  // Equal priors; ties go to the UAV class.
  d.decision = d.ll_uav >= d.ll_noise ? ClassLabel::Kind::Uav : ClassLabel::Kind::Noise;
  return d;
}

inline Detection detect(const SampledSignal& y, const MarkovClassModel& uav_model,
                        const MarkovClassModel& noise_model) {
  return detect(decompose3(y), uav_model, noise_model);
}

/// Both class models of a trained detector.
struct DetectorModel {
  MarkovClassModel uav;
  MarkovClassModel noise;
  double noise_sigma = 0.0;
  double k_sigma = 3.0;

  Detection operator()(const SampledSignal& y) const { return detect(y, uav, noise); }
  Detection operator()(const WaveletSignal& y) const { return detect(y, uav, noise); }
};

/// Thresholds at +-k_sigma of the wavelet-domain noise, then one Markov model
/// per class from the pooled training frames.
inline DetectorModel train_detector(std::span<const WaveletSignal> uav_frames,
                                    std::span<const WaveletSignal> noise_frames, double alpha = 1.0,
                                    double k_sigma = 3.0) {
  require(!uav_frames.empty(), ErrorCode::Empty, "need uav training frames");
  DetectorModel model;
  model.k_sigma = k_sigma;
  model.noise_sigma = estimate_noise_sigma(noise_frames);
  const auto th = thresholds_from_sigma(model.noise_sigma, k_sigma);
  std::vector<StateSequence> seqs;
  seqs.reserve(uav_frames.size());
  for (const auto& f : uav_frames) seqs.push_back(quantize(f, th));
  model.uav = fit_markov(seqs, alpha, ClassLabel::Kind::Uav, th);
  seqs.clear();
  for (const auto& f : noise_frames) seqs.push_back(quantize(f, th));
  model.noise = fit_markov(seqs, alpha, ClassLabel::Kind::Noise, th);
  return model;
}

inline nlohmann::json to_json(const MarkovClassModel& m) {
  nlohmann::json p = nlohmann::json::array();
  for (const auto& row : m.p) p.push_back(row);
  return {{"class", m.kind == ClassLabel::Kind::Uav ? "uav" : "noise"},
          {"transition_probabilities", p},
          {"thresholds", {{"upper", m.thresholds.upper}, {"lower", m.thresholds.lower}}},
          {"alpha", m.alpha},
          {"training", {{"transitions", m.training_transitions}, {"frames", m.training_frames}}}};
}

inline MarkovClassModel markov_from_json(const nlohmann::json& j) {
  MarkovClassModel m;
  m.kind = j.at("class").get<std::string>() == "uav" ? ClassLabel::Kind::Uav : ClassLabel::Kind::Noise;
  const auto& p = j.at("transition_probabilities");
  require(p.size() == 3, ErrorCode::CorruptRecord, "transition matrix must be 3x3");
  for (int i = 0; i < 3; ++i) {
    require(p[i].size() == 3, ErrorCode::CorruptRecord, "transition matrix must be 3x3");
    for (int k = 0; k < 3; ++k) m.p[i][k] = p[i][k].get<double>();
  }
  m.thresholds.upper = j.at("thresholds").at("upper").get<double>();
  m.thresholds.lower = j.at("thresholds").at("lower").get<double>();
  m.alpha = j.at("alpha").get<double>();
  if (j.contains("training")) {
    m.training_transitions = j["training"].value("transitions", std::uint64_t{0});
    m.training_frames = j["training"].value("frames", std::size_t{0});
  }
  return m;
}

inline nlohmann::json to_json(const DetectorModel& d) {
  return {{"format", "uavrf-detector"},
          {"version", 1},
          {"noise_sigma", d.noise_sigma},
          {"k_sigma", d.k_sigma},
          {"uav", to_json(d.uav)},
          {"noise", to_json(d.noise)}};
}

inline DetectorModel detector_from_json(const nlohmann::json& j) {
  try {
    require(j.value("format", std::string{}) == "uavrf-detector", ErrorCode::CorruptRecord, "not a detector model");
    require(j.at("version").get<int>() == 1, ErrorCode::FormatVersionMismatch, "unsupported detector version");
    DetectorModel d;
    d.noise_sigma = j.at("noise_sigma").get<double>();
    d.k_sigma = j.at("k_sigma").get<double>();
    d.uav = markov_from_json(j.at("uav"));
    d.noise = markov_from_json(j.at("noise"));
    return d;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptRecord, std::string("malformed detector model: ") + e.what());
  }
}

}  // namespace uavrf
