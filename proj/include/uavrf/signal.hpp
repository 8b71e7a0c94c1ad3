#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "uavrf/error.hpp"

namespace uavrf {

/// Class of a capture: background noise or one of the catalogued controllers.
struct ClassLabel {
  enum class Kind { Noise, Uav };

  Kind kind = Kind::Noise;
  int controller_id = 0;  // 1..N when kind == Uav, 0 otherwise

  static ClassLabel noise() { return {Kind::Noise, 0}; }
  static ClassLabel uav(int id) {
    require(id >= 1, ErrorCode::InvalidClass, "controller id must be >= 1, got " + std::to_string(id));
    return {Kind::Uav, id};
  }

  bool is_uav() const { return kind == Kind::Uav; }

  friend bool operator==(const ClassLabel&, const ClassLabel&) = default;
};

inline std::string to_string(const ClassLabel& label) {
  return label.is_uav() ? "uav:" + std::to_string(label.controller_id) : std::string("noise");
}

/// Raw real-valued capture y[n] at a fixed sample rate. Stored as 32-bit
/// floats, the same precision as the on-disk frame format.
struct SampledSignal {
  std::vector<float> samples;
  double sample_rate = 0.0;
  std::optional<ClassLabel> label;

  std::size_t size() const { return samples.size(); }

  std::vector<double> as_double() const { return {samples.begin(), samples.end()}; }
};

inline void validate(const SampledSignal& s) {
  require(!s.samples.empty(), ErrorCode::Empty, "signal has no samples");
  require(s.sample_rate > 0.0 && std::isfinite(s.sample_rate), ErrorCode::NonPositiveParam,
          "sample rate must be positive");
  for (float v : s.samples) {
    require(std::isfinite(v), ErrorCode::InvalidArgument, "signal contains a non-finite sample");
  }
  if (s.label && s.label->is_uav()) {
    require(s.label->controller_id >= 1, ErrorCode::InvalidClass, "uav label without controller id");
  }
}

}  // namespace uavrf
