#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace emcomb {

using cdouble = std::complex<double>;

inline constexpr int kModes = 2;

/// One mechanical mode. All values in rad/s.
struct MechanicalMode {
    double omega = 0.0;
    double gamma = 0.0;
    double g = 0.0;

    friend bool operator==(const MechanicalMode&, const MechanicalMode&) = default;
};

/// Device constants. All frequencies and rates are angular (rad/s).
struct SystemParams {
    double omega_c = 0.0;
    double kappa = 0.0;
    double kappa_e = 0.0;
    std::array<MechanicalMode, kModes> modes{};

    /// Throws ConfigError on a violated invariant. `allow_zero_coupling` and
    /// `allow_lossless` relax positivity for the analytic test limits.
    void validate(bool allow_zero_coupling = true, bool allow_lossless = false) const;

    [[nodiscard]] bool resolved_sideband() const;

    /// Reference rate for the dimensionless integration units.
    [[nodiscard]] double omega_ref() const { return modes[0].omega; }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Pump tone. `delta_dc` is kept equal to omega_d - omega_c by construction.
struct PumpCondition {
    double omega_d = 0.0;
    double delta_dc = 0.0;
    double p_d_dbm = 0.0;
    double s_in = 0.0;

    static PumpCondition from_detuning_dbm(const SystemParams& params, double delta_dc, double p_dbm);
    static PumpCondition from_detuning_flux(const SystemParams& params, double delta_dc, double s_in);

    [[nodiscard]] PumpCondition with_power_dbm(double p_dbm) const;
};

/// Classical amplitudes: |a|^2 is the intracavity photon number and |b_j|^2
/// the phonon number of mode j.
struct SystemState {
    cdouble a{};
    std::array<cdouble, kModes> b{};

    [[nodiscard]] bool finite() const;
    [[nodiscard]] double photons() const { return std::norm(a); }

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

struct ParameterPreset {
    std::string name;
    SystemParams params;
    std::string notes;
};

/// Known preset names: "paper-device", "desk-scale".
[[nodiscard]] const std::vector<ParameterPreset>& presets();
[[nodiscard]] const ParameterPreset& preset(std::string_view name);

/// Dimensionless model: time in units of 1/omega_ref, every rate divided by
/// omega_ref. The drive term sqrt(kappa_e) S_in is folded into `drive`.
struct ScaledModel {
    double omega_ref = 1.0;
    double detuning = 0.0;
    double half_kappa = 0.0;
    double drive = 0.0;
    std::array<double, kModes> omega{};
    std::array<double, kModes> half_gamma{};
    std::array<double, kModes> g{};

    static ScaledModel make(const SystemParams& params, const PumpCondition& pump);

    [[nodiscard]] double to_seconds(double tau) const { return tau / omega_ref; }
    [[nodiscard]] double to_tau(double seconds) const { return seconds * omega_ref; }
};

}  // namespace emcomb
