#pragma once

// IM-DD channel model for one wavelength of a WDM-FSO link.
//
// Capacity of a wavelength with bandwidth B and allocated intensity E over a
// channel of gain h:
//
//     C = B/2 * log2(1 + e * h^2 * E^2 / (2*pi))
//
// and its inverse, the intensity needed to reach a target capacity C:
//
//     E = sqrt((2^(2C/B) - 1) * 2*pi / (e * h^2))
//
// Intensities are in abstract normalized units. The sum of intensities a
// transmitter places on its wavelengths is bounded by a budget E_T.

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

namespace lightfdg {

class ChannelGain {
 public:
  ChannelGain() = default;

  // rho: detector response, path_loss: h_l, turbulence: h_a, pointing: h_p.
  static ChannelGain from_factors(double detector_response, double path_loss,
                                  double turbulence, double pointing) {
    for (double f : {detector_response, path_loss, turbulence, pointing}) {
      if (!(f > 0.0) || !std::isfinite(f)) {
        throw std::domain_error("channel gain factors must be finite and > 0");
      }
    }
    ChannelGain g;
    g.detector_response_ = detector_response;
    g.path_loss_ = path_loss;
    g.turbulence_ = turbulence;
    g.pointing_ = pointing;
    g.composite_ = detector_response * path_loss * turbulence * pointing;
    return g;
  }

  static ChannelGain unit() { return {}; }

  double detector_response() const noexcept { return detector_response_; }
  double path_loss() const noexcept { return path_loss_; }
  double turbulence() const noexcept { return turbulence_; }
  double pointing() const noexcept { return pointing_; }
  double composite() const noexcept { return composite_; }

  friend bool operator==(const ChannelGain&, const ChannelGain&) = default;

 private:
  double detector_response_ = 1.0;
  double path_loss_ = 1.0;
  double turbulence_ = 1.0;
  double pointing_ = 1.0;
  double composite_ = 1.0;
};

struct OpticalParams {
  double bandwidth_hz = 10e9;        // B, per wavelength
  double intensity_budget = 1.0;     // E_T, per transmitter per link
  int wavelengths_per_link = 4;      // W

  void validate() const {
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
      throw std::domain_error("bandwidth must be finite and > 0");
    }
    if (!(intensity_budget > 0.0) || !std::isfinite(intensity_budget)) {
      throw std::domain_error("intensity budget must be finite and > 0");
    }
    if (wavelengths_per_link < 1) {
      throw std::domain_error("need at least one wavelength per link");
    }
  }
};

namespace detail {

// e / (2*pi), the SNR scaling of the IM-DD capacity bound.
inline constexpr double kSnrScale = std::numbers::e / (2.0 * std::numbers::pi);

inline void require_finite_non_negative(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0) {
    throw std::domain_error(std::string(what) + " must be finite and >= 0");
  }
}

inline void require_positive_bandwidth(double bandwidth_hz) {
  if (!std::isfinite(bandwidth_hz) || !(bandwidth_hz > 0.0)) {
    throw std::domain_error("bandwidth must be finite and > 0");
  }
}

}  // namespace detail

// Bits per second carried by one wavelength at the given intensity.
inline double wavelength_capacity(const ChannelGain& gain, double intensity, double bandwidth_hz) {
  detail::require_finite_non_negative(intensity, "intensity");
  detail::require_positive_bandwidth(bandwidth_hz);
  const double h = gain.composite();
  const double snr = detail::kSnrScale * h * h * intensity * intensity;
  return 0.5 * bandwidth_hz * std::log1p(snr) / std::numbers::ln2;
}

// Smallest intensity whose wavelength capacity reaches target_bps.
inline double intensity_for_capacity(const ChannelGain& gain, double target_bps, double bandwidth_hz) {
  detail::require_finite_non_negative(target_bps, "target capacity");
  detail::require_positive_bandwidth(bandwidth_hz);
  const double h = gain.composite();
  const double snr = std::expm1(2.0 * target_bps / bandwidth_hz * std::numbers::ln2);
  return std::sqrt(snr / (detail::kSnrScale * h * h));
}

// True iff the allocations fit the budget (boundary inclusive).
inline bool intensity_budget_ok(std::span<const double> allocations, double budget) {
  return std::accumulate(allocations.begin(), allocations.end(), 0.0) <= budget;
}

}  // namespace lightfdg
