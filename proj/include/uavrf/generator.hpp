#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "uavrf/error.hpp"
#include "uavrf/signal.hpp"

namespace uavrf {

/// Waveform parameters of one synthetic controller. A frame holds one burst
/// of packets; each packet is a raised-cosine gated linear frequency sweep and
/// the carrier leaks through at a low level between packets.
struct ControllerProfile {
  double carrier_offset_hz = 20e3;    // sweep start frequency
  double sweep_bandwidth_hz = 250e3;  // spread of each sweep
  int sweep_period = 128;             // samples per sweep
  int packet_period = 2048;           // samples between packet starts
  int pulse_width = 1024;             // samples per packet
  int ramp_len = 64;                  // raised-cosine rise/fall, samples
  double burst_fraction = 0.5;        // burst length as a fraction of the frame
  double leak_level = 0.003;          // inter-packet energy relative to packet peak

  auto tuple() const {
    return std::tie(carrier_offset_hz, sweep_bandwidth_hz, sweep_period, packet_period, pulse_width, ramp_len,
                    burst_fraction, leak_level);
  }
  friend bool operator==(const ControllerProfile& a, const ControllerProfile& b) { return a.tuple() == b.tuple(); }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ControllerProfile, carrier_offset_hz, sweep_bandwidth_hz, sweep_period,
                                                packet_period, pulse_width, ramp_len, burst_fraction, leak_level)

/// Per-frame variability of a controller's emission (device drift, data-
/// dependent spectral occupancy). Zero disables it.
struct FrameJitter {
  double leak_log_sigma = 0.02;      // lognormal spread of the leak level
  double width_rel_sigma = 0.01;     // relative spread of the pulse width
  double sweep_log_halfwidth = 0.7;  // sweep bandwidth scaled by exp(U(-h, h))
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FrameJitter, leak_log_sigma, width_rel_sigma, sweep_log_halfwidth)

struct GeneratorConfig {
  int n_classes = 14;
  std::size_t frame_len = std::size_t{1} << 17;
  double sample_rate = 1e6;
  double burst_duty = 1.0;  // scales every profile's burst_fraction, (0, 1]
  double noise_power = 1.0;
  double noise_dc_bias = 0.0;
  double uav_dc_bias = 0.0;
  FrameJitter jitter;
  std::vector<ControllerProfile> profiles;  // one per class; empty means the default catalogue
  std::uint64_t rng_seed = 1;
};

inline void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = nlohmann::json{{"n_classes", c.n_classes},       {"frame_len", c.frame_len},
                     {"sample_rate", c.sample_rate},   {"burst_duty", c.burst_duty},
                     {"noise_power", c.noise_power},   {"noise_dc_bias", c.noise_dc_bias},
                     {"uav_dc_bias", c.uav_dc_bias},   {"jitter", c.jitter},
                     {"profiles", c.profiles},         {"rng_seed", c.rng_seed}};
}

inline void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  const GeneratorConfig d;
  c.n_classes = j.value("n_classes", d.n_classes);
  c.frame_len = j.value("frame_len", d.frame_len);
  c.sample_rate = j.value("sample_rate", d.sample_rate);
  c.burst_duty = j.value("burst_duty", d.burst_duty);
  c.noise_power = j.value("noise_power", d.noise_power);
  c.noise_dc_bias = j.value("noise_dc_bias", d.noise_dc_bias);
  c.uav_dc_bias = j.value("uav_dc_bias", d.uav_dc_bias);
  c.jitter = j.value("jitter", d.jitter);
  c.profiles = j.value("profiles", d.profiles);
  c.rng_seed = j.value("rng_seed", d.rng_seed);
}

/// Default controller catalogue. Classes come in pairs sharing a packet
/// structure (duty, ramp, period, burst length) and differing in leak level,
/// so pairs separate cleanly only when the inter-packet floor is above noise.
inline std::vector<ControllerProfile> default_profiles(int n_classes) {
  require(n_classes >= 2, ErrorCode::BadConfig, "need at least 2 classes");
  struct Group {
    double duty;
    int ramp;
    int period;
    double burst;
  };
  static constexpr Group kGroups[] = {
      {0.30, 32, 2048, 0.50},  {0.45, 256, 3072, 0.50}, {0.60, 640, 4096, 0.50}, {0.40, 64, 2560, 0.30},
      {0.35, 480, 3584, 0.40}, {0.50, 800, 2048, 0.35}, {0.55, 64, 4096, 0.45},
  };
  static constexpr double kLeak[] = {0.003, 0.010};
  static constexpr double kSweepBw[] = {200e3, 250e3, 300e3};
  static constexpr int kSweepPeriod[] = {96, 128, 160, 192};

  std::vector<ControllerProfile> out;
  out.reserve(static_cast<std::size_t>(n_classes));
  constexpr int kBase = static_cast<int>(std::size(kGroups));
  for (int c = 0; c < n_classes; ++c) {
    const int g = c / 2;
    Group grp = kGroups[g % kBase];
    if (g >= kBase) {
      // Past the catalogue: stretch the period and shorten the burst so the
      // packet structure stays distinct.
      const int round = g / kBase;
      grp.period += 512 * round;
      grp.burst = std::max(0.2, grp.burst - 0.03 * round);
    }
    ControllerProfile p;
    p.carrier_offset_hz = 20e3 + 5e3 * (c % 4);
    p.sweep_bandwidth_hz = kSweepBw[c % 3];
    p.sweep_period = kSweepPeriod[(c + 1) % 4];
    p.packet_period = grp.period;
    p.pulse_width = static_cast<int>(grp.period * grp.duty);
    p.ramp_len = grp.ramp;
    p.burst_fraction = grp.burst;
    p.leak_level = kLeak[c % 2];
    out.push_back(p);
  }
  return out;
}

inline const ControllerProfile& profile_for(const GeneratorConfig& cfg, int controller_id,
                                            std::vector<ControllerProfile>& storage) {
  require(controller_id >= 1 && controller_id <= cfg.n_classes, ErrorCode::InvalidClass,
          "controller id " + std::to_string(controller_id) + " outside 1.." + std::to_string(cfg.n_classes));
  if (!cfg.profiles.empty()) return cfg.profiles[static_cast<std::size_t>(controller_id - 1)];
  storage = default_profiles(cfg.n_classes);
  return storage[static_cast<std::size_t>(controller_id - 1)];
}

inline void validate(const GeneratorConfig& cfg) {
  require(cfg.n_classes >= 2, ErrorCode::BadConfig, "n_classes must be >= 2");
  require(cfg.frame_len >= 4096, ErrorCode::BadConfig, "frame_len must be >= 4096");
  require(cfg.sample_rate > 0.0, ErrorCode::BadConfig, "sample_rate must be positive");
  require(cfg.burst_duty > 0.0 && cfg.burst_duty <= 1.0, ErrorCode::BadConfig, "burst_duty must be in (0,1]");
  require(cfg.noise_power >= 0.0, ErrorCode::BadConfig, "noise_power must be >= 0");
  require(cfg.profiles.empty() || cfg.profiles.size() == static_cast<std::size_t>(cfg.n_classes),
          ErrorCode::BadConfig, "profiles must list one entry per class");
  const auto profiles = cfg.profiles.empty() ? default_profiles(cfg.n_classes) : cfg.profiles;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    require(p.pulse_width > 0 && p.packet_period >= p.pulse_width && p.sweep_period > 0 && p.ramp_len >= 0,
            ErrorCode::BadConfig, "profile " + std::to_string(i + 1) + " has inconsistent timing");
    require(p.burst_fraction > 0.0 && p.burst_fraction <= 1.0 && p.leak_level >= 0.0 && p.leak_level < 1.0,
            ErrorCode::BadConfig, "profile " + std::to_string(i + 1) + " has out-of-range burst/leak");
    for (std::size_t j = 0; j < i; ++j) {
      require(!(profiles[j] == p), ErrorCode::BadConfig,
              "profiles " + std::to_string(j + 1) + " and " + std::to_string(i + 1) + " are identical");
    }
  }
}

/// Clean (noise-free) controller emission plus where its burst landed.
struct CleanWaveform {
  std::vector<double> samples;
  std::size_t burst_start = 0;
  std::size_t burst_len = 0;
};

/// Draws one clean emission of `controller_id`. Envelope peak is 1 before
/// any SNR scaling; consumes a fixed number of draws from `rng`.
inline CleanWaveform clean_waveform(const GeneratorConfig& cfg, int controller_id, std::mt19937_64& rng) {
  std::vector<ControllerProfile> storage;
  const ControllerProfile& p = profile_for(cfg, controller_id, storage);
  const std::size_t n = cfg.frame_len;

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double leak = p.leak_level * std::exp(cfg.jitter.leak_log_sigma * gauss(rng));
  const int width = std::max(
      1, static_cast<int>(std::lround(p.pulse_width * (1.0 + cfg.jitter.width_rel_sigma * gauss(rng)))));
  const double bandwidth = p.sweep_bandwidth_hz * std::exp(cfg.jitter.sweep_log_halfwidth * unit(rng));

  CleanWaveform out;
  out.burst_len = std::clamp<std::size_t>(
      static_cast<std::size_t>(static_cast<double>(n) * p.burst_fraction * cfg.burst_duty), 1, n);
  const std::size_t guard = out.burst_len + n / 8 <= n ? n / 16 : (n - out.burst_len) / 2;
  const std::size_t span = n - out.burst_len - 2 * guard;
  out.burst_start = guard + std::uniform_int_distribution<std::size_t>(0, span)(rng);
  const auto sweep_offset =
      std::uniform_int_distribution<std::size_t>(0, static_cast<std::size_t>(p.sweep_period - 1))(rng);

  std::vector<double> env(n, 0.0);
  const double floor_amp = std::sqrt(leak);
  const std::size_t burst_end = out.burst_start + out.burst_len;
  std::fill(env.begin() + static_cast<std::ptrdiff_t>(out.burst_start),
            env.begin() + static_cast<std::ptrdiff_t>(burst_end), floor_amp);
  const int ramp = std::min(p.ramp_len, width / 2);
  for (std::size_t pos = out.burst_start; pos + static_cast<std::size_t>(width) <= burst_end;
       pos += static_cast<std::size_t>(p.packet_period)) {
    for (int k = 0; k < width; ++k) {
      double gate = 1.0;
      const int edge = std::min(k, width - 1 - k);
      if (edge < ramp) gate = 0.5 - 0.5 * std::cos(std::numbers::pi * edge / ramp);
      env[pos + static_cast<std::size_t>(k)] = floor_amp + (1.0 - floor_amp) * gate;
    }
  }

  const double period_s = p.sweep_period / cfg.sample_rate;
  const double chirp_rate = bandwidth / period_s;
  out.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double tau = static_cast<double>((t + sweep_offset) % static_cast<std::size_t>(p.sweep_period)) /
                       cfg.sample_rate;
    const double phase = 2.0 * std::numbers::pi * (p.carrier_offset_hz * tau + 0.5 * chirp_rate * tau * tau);
    out.samples[t] = env[t] * std::cos(phase) + cfg.uav_dc_bias;
  }
  return out;
}

inline double mean_power(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

/// Frame split into its two additive components, kept in double precision so
/// the injected SNR can be measured before summation.
struct FrameComponents {
  std::vector<double> signal;  // scaled clean emission (zeros for Noise)
  std::vector<double> noise;
  std::size_t burst_start = 0;
  std::size_t burst_len = 0;
};

/// Signal is scaled against the realised noise power, so the full-frame SNR
/// of the components equals `snr_db` up to rounding. With noise_power == 0 the
/// clean emission is returned unscaled.
inline FrameComponents generate_components(const GeneratorConfig& cfg, const ClassLabel& label, double snr_db,
                                           std::mt19937_64& rng) {
  require(std::isfinite(snr_db) || cfg.noise_power == 0.0, ErrorCode::InvalidArgument, "snr_db must be finite");
  if (label.is_uav()) {
    require(label.controller_id >= 1 && label.controller_id <= cfg.n_classes, ErrorCode::InvalidClass,
            "controller id " + std::to_string(label.controller_id) + " outside 1.." +
                std::to_string(cfg.n_classes));
  }
  FrameComponents out;
  if (label.is_uav()) {
    CleanWaveform clean = clean_waveform(cfg, label.controller_id, rng);
    out.signal = std::move(clean.samples);
    out.burst_start = clean.burst_start;
    out.burst_len = clean.burst_len;
  } else {
    out.signal.assign(cfg.frame_len, 0.0);
  }

  out.noise.resize(cfg.frame_len);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma = std::sqrt(cfg.noise_power);
  for (auto& v : out.noise) v = sigma * gauss(rng);
  if (!label.is_uav()) {
    for (auto& v : out.noise) v += cfg.noise_dc_bias;
  }

  if (label.is_uav() && cfg.noise_power > 0.0) {
    const double target = mean_power(out.noise) * std::pow(10.0, snr_db / 10.0);
    const double gain = std::sqrt(target / mean_power(out.signal));
    for (auto& v : out.signal) v *= gain;
  }
  return out;
}

inline SampledSignal generate_frame(const GeneratorConfig& cfg, const ClassLabel& label, double snr_db,
                                    std::mt19937_64& rng) {
  FrameComponents parts = generate_components(cfg, label, snr_db, rng);
  SampledSignal frame;
  frame.sample_rate = cfg.sample_rate;
  frame.label = label;
  frame.samples.resize(cfg.frame_len);
  for (std::size_t i = 0; i < cfg.frame_len; ++i) {
    frame.samples[i] = static_cast<float>(parts.signal[i] + parts.noise[i]);
  }
  return frame;
}

/// splitmix64 step; used to derive independent per-frame and per-run seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(master) ^ a) ^ b);
}

}  // namespace uavrf
