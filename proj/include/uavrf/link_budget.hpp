#pragma once

#include <cmath>
#include <numbers>

#include "uavrf/error.hpp"

namespace uavrf {

inline constexpr double kBoltzmann = 1.38e-23;        // J/K
inline constexpr double kReferenceTemperature = 290.0;  // K

/// Passive-intercept link budget. All quantities linear (not dB).
struct LinkBudgetParams {
  double wavelength_m = 0.0;
  double transmit_power_w = 0.0;
  double transmit_gain = 0.0;
  double intercept_gain = 0.0;
  double losses = 0.0;
  double noise_factor = 0.0;
  double bandwidth_hz = 0.0;
  double input_snr = 0.0;
};

/// Receiver sensitivity k * T0 * F * B * rho_i, in watts.
inline double receiver_sensitivity(const LinkBudgetParams& p) {
  return kBoltzmann * kReferenceTemperature * p.noise_factor * p.bandwidth_hz * p.input_snr;
}

/// Maximum distance (meters) at which the intercept receiver still sees the
/// controller at its required input SNR.
inline double intercept_range(const LinkBudgetParams& p) {
  const double fields[] = {p.wavelength_m, p.transmit_power_w, p.transmit_gain, p.intercept_gain,
                           p.losses,       p.noise_factor,     p.bandwidth_hz,  p.input_snr};
  for (double v : fields) {
    require(std::isfinite(v) && v > 0.0, ErrorCode::NonPositiveParam,
            "link budget parameters must be strictly positive");
  }
  const double sensitivity = receiver_sensitivity(p);
  return p.wavelength_m / (4.0 * std::numbers::pi) *
         std::sqrt(p.transmit_power_w * p.transmit_gain * p.intercept_gain / (p.losses * sensitivity));
}

}  // namespace uavrf
