#pragma once

#include <vector>

#include "emcomb/params.hpp"

namespace emcomb {

/// Time derivative of the classical amplitudes in the frame rotating at the
/// pump frequency, physical units (1/s):
///   da/dt   = { i [delta_dc - sum_j g_j (b_j + b_j*)] - kappa/2 } a + sqrt(kappa_e) S_in
///   db_j/dt = -(i omega_mj + gamma_j/2) b_j - i g_j |a|^2
/// Throws InvalidStateError on non-finite input.
[[nodiscard]] SystemState eom_rhs(const SystemState& state, const SystemParams& params,
                                  const PumpCondition& pump);

/// Same right-hand side on the dimensionless model; this is the integrator
/// kernel, so it performs no validation.
[[nodiscard]] inline SystemState scaled_rhs(const ScaledModel& m, const SystemState& y) {
    const double x1 = 2.0 * y.b[0].real();
    const double x2 = 2.0 * y.b[1].real();
    const double shift = m.detuning - m.g[0] * x1 - m.g[1] * x2;
    const double n = std::norm(y.a);
    SystemState d;
    d.a = cdouble(-m.half_kappa, shift) * y.a + m.drive;
    d.b[0] = cdouble(-m.half_gamma[0], -m.omega[0]) * y.b[0] - cdouble(0.0, m.g[0] * n);
    d.b[1] = cdouble(-m.half_gamma[1], -m.omega[1]) * y.b[1] - cdouble(0.0, m.g[1] * n);
    return d;
}

/// Static mechanical amplitude for photon number n (rad/s units or scaled,
/// as long as they are consistent): b_j = -i g_j n / (i omega_j + gamma_j/2).
[[nodiscard]] cdouble static_displacement(double g, double omega, double gamma, double n);

/// Kerr coefficient K: the static detuning shift is K * n.
[[nodiscard]] double static_shift_per_photon(const SystemParams& params);

/// Effective (static-shift corrected) detuning at photon number n.
[[nodiscard]] double shifted_detuning(const SystemParams& params, const PumpCondition& pump, double n);

/// All steady states, sorted by photon number ascending. Eliminating the
/// static b_j gives n [ (delta + K n)^2 + kappa^2/4 ] = kappa_e S_in^2, solved
/// by bracketing between the critical points of the cubic and bisection with
/// Newton polish.
[[nodiscard]] std::vector<SystemState> static_fixed_points(const SystemParams& params,
                                                           const PumpCondition& pump);

/// Lowest-photon-number steady state (the branch reached by an upward power
/// sweep).
[[nodiscard]] SystemState lower_fixed_point(const SystemParams& params, const PumpCondition& pump);

/// max_i |f_i| / (sum of magnitudes of the terms in f_i), evaluated on the
/// scaled model. Zero at an exact fixed point.
[[nodiscard]] double fixed_point_residual(const SystemParams& params, const PumpCondition& pump,
                                          const SystemState& state);

}  // namespace emcomb
