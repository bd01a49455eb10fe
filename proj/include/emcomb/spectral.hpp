#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "emcomb/dynamics.hpp"
#include "emcomb/params.hpp"

namespace emcomb {

/// Welch spectrum on an absolute frequency axis. psd in dBm/Hz.
struct Spectrum {
    std::vector<double> freqs;  // Hz, uniform and increasing
    std::vector<double> psd;    // dBm/Hz
    double bin = 0.0;           // Hz
    double rbw = 0.0;           // Hz, bin * window ENBW
    double ref = 0.0;           // pump frequency, Hz
    /// Pump power, used by find_teeth as the dynamic-range reference. NaN
    /// when unknown (then the strongest peak is used).
    double pump_dbm = std::numeric_limits<double>::quiet_NaN();
    std::size_t segments = 0;
    std::size_t segment_length = 0;
};

struct Tooth {
    double freq = 0.0;       // Hz
    double power_dbm = 0.0;  // integrated over +-2 rbw
    double detuning = 0.0;   // freq - ref, Hz

    friend bool operator==(const Tooth&, const Tooth&) = default;
};

inline constexpr double kHannEnbw = 1.5;

/// Reflected field S_out = S_in - sqrt(kappa_e) a over the uniform tail of
/// `traj`, in photons/s^(1/2). With `subtract_carrier` the complex mean is
/// removed (an ideally cancelled pump).
[[nodiscard]] std::vector<cdouble> output_field(const Trajectory& traj, bool subtract_carrier = false);

struct PsdOptions {
    std::size_t segments = 8;  // half-overlapping Hann segments
    int threads = 0;           // 0: OpenMP default
};

/// Welch PSD of a complex rotating-frame series. Frequency bin k sits at
/// omega_d/2pi + k fs/L; a component exp(-i w t) lands at omega_d + w.
/// Power per sample is hbar omega_d |x|^2, so the PSD integrates to the mean
/// power in watts. Throws InsufficientDataError unless segments >= 4 and
/// the segment length is >= 4096.
[[nodiscard]] Spectrum psd(std::span<const cdouble> series, double sample_rate, double omega_d,
                           const PsdOptions& options = {});
[[nodiscard]] Spectrum psd_serial(std::span<const cdouble> series, double sample_rate, double omega_d,
                                  std::size_t segments = 8);

/// Output-field spectrum of a trajectory tail.
[[nodiscard]] Spectrum output_spectrum(const Trajectory& traj, bool subtract_carrier = false,
                                       const PsdOptions& options = {});

struct TeethOptions {
    double margin_db = 10.0;         // over the median noise floor; must be >= 6
    double dynamic_range_db = 80.0;  // below the pump (or strongest peak)
    std::size_t floor_halfwidth = 128;  // bins in the median window on each side
};

/// Local maxima that dominate +-2 rbw and clear the floor by margin_db,
/// refined by a 3-point quadratic fit in dB. Sorted by frequency.
[[nodiscard]] std::vector<Tooth> find_teeth(const Spectrum& spec, const TeethOptions& options = {});

/// Sum of PSD bins within +-2 rbw of `freq`, in dBm.
[[nodiscard]] double integrated_power_dbm(const Spectrum& spec, double freq);

/// Oscillation frequency (Hz) of mechanical mode `mode` over the tail: the
/// strongest line of b_j within +-10% of the bare frequency. Falls back to the
/// bare frequency when no line clears the window median by 20 dB (a mode that
/// only follows the drive).
[[nodiscard]] double oscillation_frequency(const Trajectory& traj, int mode);

void write_spectrum_csv(std::ostream& os, const Spectrum& spec, const std::string& header = {});
void write_teeth_json(std::ostream& os, const std::vector<Tooth>& teeth);
[[nodiscard]] std::vector<Tooth> read_teeth_json(std::istream& is);

}  // namespace emcomb
