#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace emcomb::units {

inline constexpr double kHbar = 1.054571817e-34;  // J s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Value used on the command line and in configs for "no drive".
inline constexpr double kZeroPowerDbm = -std::numeric_limits<double>::infinity();

[[nodiscard]] constexpr double hz_to_rad(double hz) { return kTwoPi * hz; }
[[nodiscard]] constexpr double rad_to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }

[[nodiscard]] inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

[[nodiscard]] inline double watts_to_dbm(double watts) {
    if (watts <= 0.0) return kZeroPowerDbm;
    return 10.0 * std::log10(watts / 1e-3);
}

/// Photon-flux amplitude S_in = sqrt(P / (hbar * omega_d)), in sqrt(photons/s).
[[nodiscard]] double dbm_to_flux(double p_dbm, double omega_d);

/// Inverse of dbm_to_flux.
[[nodiscard]] double flux_to_dbm(double s_in, double omega_d);

}  // namespace emcomb::units
