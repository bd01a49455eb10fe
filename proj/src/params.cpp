#include "emcomb/params.hpp"

#include <cmath>
#include <sstream>

#include "emcomb/errors.hpp"
#include "emcomb/units.hpp"

namespace emcomb {

namespace units {

double dbm_to_flux(double p_dbm, double omega_d) {
    if (p_dbm == kZeroPowerDbm) return 0.0;
    return std::sqrt(dbm_to_watts(p_dbm) / (kHbar * omega_d));
}

double flux_to_dbm(double s_in, double omega_d) {
    return watts_to_dbm(s_in * s_in * kHbar * omega_d);
}

}  // namespace units

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("SystemParams: " + what);
}

}  // namespace

void SystemParams::validate(bool allow_zero_coupling, bool allow_lossless) const {
    auto positive = [&](double v) { return std::isfinite(v) && v > 0.0; };
    auto rate_ok = [&](double v) { return allow_lossless ? (std::isfinite(v) && v >= 0.0) : positive(v); };
    require(positive(omega_c), "omega_c must be > 0");
    require(rate_ok(kappa), "kappa must be > 0");
    require(std::isfinite(kappa_e) && kappa_e >= 0.0 && (allow_lossless || kappa_e > 0.0),
            "kappa_e must be > 0");
    require(kappa_e <= kappa, "kappa_e must not exceed kappa");
    for (int j = 0; j < kModes; ++j) {
        const auto& m = modes[j];
        const std::string tag = "mode " + std::to_string(j + 1) + ": ";
        require(positive(m.omega), tag + "omega must be > 0");
        require(rate_ok(m.gamma), tag + "gamma must be > 0");
        require(std::isfinite(m.g) && (allow_zero_coupling ? m.g >= 0.0 : m.g > 0.0),
                tag + "g must be > 0");
    }
    require(modes[1].omega > modes[0].omega, "modes must be ordered by frequency (omega_m2 > omega_m1)");
}

bool SystemParams::resolved_sideband() const {
    return modes[0].omega > kappa && modes[1].omega > kappa;
}

PumpCondition PumpCondition::from_detuning_dbm(const SystemParams& params, double delta_dc, double p_dbm) {
    PumpCondition p;
    p.omega_d = params.omega_c + delta_dc;
    p.delta_dc = p.omega_d - params.omega_c;
    p.p_d_dbm = p_dbm;
    p.s_in = units::dbm_to_flux(p_dbm, p.omega_d);
    return p;
}

PumpCondition PumpCondition::from_detuning_flux(const SystemParams& params, double delta_dc, double s_in) {
    PumpCondition p;
    p.omega_d = params.omega_c + delta_dc;
    p.delta_dc = p.omega_d - params.omega_c;
    p.s_in = s_in;
    p.p_d_dbm = units::flux_to_dbm(s_in, p.omega_d);
    return p;
}

PumpCondition PumpCondition::with_power_dbm(double p_dbm) const {
    PumpCondition p = *this;
    p.p_d_dbm = p_dbm;
    p.s_in = units::dbm_to_flux(p_dbm, omega_d);
    return p;
}

bool SystemState::finite() const {
    auto ok = [](cdouble z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
    return ok(a) && ok(b[0]) && ok(b[1]);
}

namespace {

SystemParams paper_device() {
    using units::hz_to_rad;
    SystemParams p;
    p.omega_c = hz_to_rad(5.31e9);
    p.kappa = hz_to_rad(380e3);
    p.kappa_e = 0.5 * p.kappa;
    p.modes[0] = {hz_to_rad(756e3), hz_to_rad(2.32), hz_to_rad(0.49)};
    p.modes[1] = {hz_to_rad(1.750e6), hz_to_rad(0.30), hz_to_rad(0.07)};
    return p;
}

// Both mechanical quality factors lowered to 1000; g_j rescaled so that
// g_j^2 / gamma_j (and with it every single-mode threshold photon number) is
// unchanged.
SystemParams desk_scale() {
    SystemParams p = paper_device();
    const double q = 1000.0;
    for (auto& m : p.modes) {
        const double gamma = m.omega / q;
        m.g *= std::sqrt(gamma / m.gamma);
        m.gamma = gamma;
    }
    return p;
}

}  // namespace

const std::vector<ParameterPreset>& presets() {
    static const std::vector<ParameterPreset> all = {
        {"paper-device", paper_device(),
         "Measured SiN-membrane device: f_m1 = 756 kHz (gamma_1/2pi = 2.32 Hz, g_1/2pi = 0.49 Hz), "
         "f_m2 = 1.750 MHz (gamma_2/2pi = 0.30 Hz, g_2/2pi = 0.07 Hz), f_c = 5.31 GHz, "
         "kappa/2pi = 380 kHz. kappa_e is not published; kappa_e = kappa/2 assumed."},
        {"desk-scale", desk_scale(),
         "paper-device with both mechanical Q lowered to 1000 (gamma_1/2pi = 756 Hz, "
         "gamma_2/2pi = 1750 Hz) and g_j scaled by sqrt(gamma_j'/gamma_j) so g_j^2/gamma_j, "
         "omega_m2/omega_m1 and kappa/omega_m1 are preserved. Settling times drop from seconds "
         "to milliseconds."},
    };
    return all;
}

const ParameterPreset& preset(std::string_view name) {
    for (const auto& p : presets()) {
        if (p.name == name) return p;
    }
    std::ostringstream os;
    os << "unknown preset '" << name << "' (known:";
    for (const auto& p : presets()) os << ' ' << p.name;
    os << ')';
    throw ConfigError(os.str());
}

ScaledModel ScaledModel::make(const SystemParams& params, const PumpCondition& pump) {
    ScaledModel m;
    m.omega_ref = params.omega_ref();
    const double inv = 1.0 / m.omega_ref;
    m.detuning = pump.delta_dc * inv;
    m.half_kappa = 0.5 * params.kappa * inv;
    // sqrt(kappa_e) S_in has units 1/s; the scaled equation divides by omega_ref.
    m.drive = std::sqrt(params.kappa_e) * pump.s_in * inv;
    for (int j = 0; j < kModes; ++j) {
        m.omega[j] = params.modes[j].omega * inv;
        m.half_gamma[j] = 0.5 * params.modes[j].gamma * inv;
        m.g[j] = params.modes[j].g * inv;
    }
    return m;
}

}  // namespace emcomb
