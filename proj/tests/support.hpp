#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include "emcomb/dynamics.hpp"
#include "emcomb/model.hpp"
#include "emcomb/params.hpp"
#include "emcomb/stability.hpp"
#include "emcomb/units.hpp"

namespace testing {

inline const emcomb::SystemParams& paper() { return emcomb::preset("paper-device").params; }
inline const emcomb::SystemParams& desk() { return emcomb::preset("desk-scale").params; }

inline double rel(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}
inline double rel(std::complex<double> got, std::complex<double> want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline emcomb::SystemParams uncoupled(emcomb::SystemParams p) {
    p.modes[0].g = 0.0;
    p.modes[1].g = 0.0;
    return p;
}

// Central differences of eom_rhs in the basis (Re a, Im a, Re b1, Im b1, Re b2, Im b2).
inline emcomb::Jacobian fd_jacobian(const emcomb::SystemParams& p, const emcomb::PumpCondition& pump,
                                    const emcomb::SystemState& s, double rel_step = 1e-6) {
    using emcomb::cdouble;
    auto get = [](const emcomb::SystemState& st, int i) {
        const cdouble z = i < 2 ? st.a : st.b[(i - 2) / 2];
        return i % 2 == 0 ? z.real() : z.imag();
    };
    auto set = [](emcomb::SystemState& st, int i, double v) {
        cdouble& z = i < 2 ? st.a : st.b[(i - 2) / 2];
        z = i % 2 == 0 ? cdouble(v, z.imag()) : cdouble(z.real(), v);
    };
    // The right-hand side is quadratic in the state, so central differences
    // are exact up to rounding; the step is relative to the whole state.
    const double scale = std::sqrt(std::norm(s.a) + std::norm(s.b[0]) + std::norm(s.b[1]));
    const double h = rel_step * std::max(scale, 1.0);
    emcomb::Jacobian j;
    for (int c = 0; c < 6; ++c) {
        const double x = get(s, c);
        emcomb::SystemState up = s, dn = s;
        set(up, c, x + h);
        set(dn, c, x - h);
        const auto fu = emcomb::eom_rhs(up, p, pump);
        const auto fd = emcomb::eom_rhs(dn, p, pump);
        for (int r = 0; r < 6; ++r) j(r, c) = (get(fu, r) - get(fd, r)) / (2.0 * h);
    }
    return j;
}

// Growth rate of mechanical mode `osc` measured from a seeded transient.
inline double time_domain_rate(const emcomb::SystemParams& p, double delta, double dbm, emcomb::Oscillator osc) {
    const auto pump = emcomb::PumpCondition::from_detuning_dbm(p, delta, dbm);
    const double gamma = p.modes[static_cast<int>(osc)].gamma;
    emcomb::IntegrateOptions opt;
    opt.tail_samples = 0;
    const auto tr = emcomb::integrate(p, pump, emcomb::seeded_initial_state(p, pump), 20.0 / gamma, 1e-10, opt);
    return emcomb::growth_rate_from_transient(tr, osc);
}

// Pump power where the time-domain growth rate changes sign, bisected inside
// [lo, hi] down to `resolution` dB. NaN when the bracket holds no sign change.
inline double time_domain_threshold(const emcomb::SystemParams& p, double delta, double lo, double hi,
                                    emcomb::Oscillator osc, double resolution = 0.02) {
    if (!(time_domain_rate(p, delta, lo, osc) < 0.0) || !(time_domain_rate(p, delta, hi, osc) > 0.0)) {
        return std::nan("");
    }
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        (time_domain_rate(p, delta, mid, osc) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace testing
