#include "emcomb/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "emcomb/errors.hpp"

namespace emcomb {

SystemState eom_rhs(const SystemState& state, const SystemParams& params, const PumpCondition& pump) {
    if (!state.finite()) throw InvalidStateError("eom_rhs: non-finite state");
    const cdouble i(0.0, 1.0);
    double coupling = 0.0;
    for (int j = 0; j < kModes; ++j) {
        coupling += params.modes[j].g * (state.b[j] + std::conj(state.b[j])).real();
    }
    SystemState d;
    d.a = (i * (pump.delta_dc - coupling) - 0.5 * params.kappa) * state.a +
          std::sqrt(params.kappa_e) * pump.s_in;
    const double n = std::norm(state.a);
    for (int j = 0; j < kModes; ++j) {
        const auto& m = params.modes[j];
        d.b[j] = -(i * m.omega + 0.5 * m.gamma) * state.b[j] - i * m.g * n;
    }
    return d;
}

cdouble static_displacement(double g, double omega, double gamma, double n) {
    return cdouble(0.0, -g * n) / cdouble(0.5 * gamma, omega);
}

double static_shift_per_photon(const SystemParams& params) {
    double k = 0.0;
    for (const auto& m : params.modes) {
        k += 2.0 * m.g * m.g * m.omega / (m.omega * m.omega + 0.25 * m.gamma * m.gamma);
    }
    return k;
}

double shifted_detuning(const SystemParams& params, const PumpCondition& pump, double n) {
    return pump.delta_dc + static_shift_per_photon(params) * n;
}

namespace {

// Cubic in scaled units: f(n) = n ((d + k n)^2 + h^2) - s, with s = drive^2.
struct Cubic {
    double d, k, h, s;

    [[nodiscard]] double operator()(double n) const {
        const double e = d + k * n;
        return n * (e * e + h * h) - s;
    }
    [[nodiscard]] double derivative(double n) const {
        return 3.0 * k * k * n * n + 4.0 * d * k * n + d * d + h * h;
    }
    // Magnitude of the individual terms, used to judge a residual.
    [[nodiscard]] double scale(double n) const {
        const double e = d + k * n;
        return n * (e * e + h * h) + s;
    }
};

double polish_root(const Cubic& f, double lo, double hi) {
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double n = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double dfn = f.derivative(n);
        if (dfn == 0.0) break;
        const double next = n - f(n) / dfn;
        if (!(next >= lo && next <= hi)) break;
        n = next;
    }
    return n;
}

}  // namespace

std::vector<SystemState> static_fixed_points(const SystemParams& params, const PumpCondition& pump) {
    const ScaledModel m = ScaledModel::make(params, pump);
    double k = 0.0;
    for (int j = 0; j < kModes; ++j) {
        const double hg = m.half_gamma[j];
        k += 2.0 * m.g[j] * m.g[j] * m.omega[j] / (m.omega[j] * m.omega[j] + hg * hg);
    }
    const Cubic f{m.detuning, k, m.half_kappa, m.drive * m.drive};

    std::vector<double> roots;
    if (f.s == 0.0) {
        roots.push_back(0.0);
    } else if (k == 0.0) {
        roots.push_back(f.s / (f.d * f.d + f.h * f.h));
    } else {
        const double n_max = f.s / (f.h * f.h);
        std::vector<double> nodes{0.0};
        std::vector<double> critical;
        const double disc = f.d * f.d - 3.0 * f.h * f.h;
        if (disc >= 0.0) {
            const double r = std::sqrt(disc);
            for (double c : {(-2.0 * f.d - r) / (3.0 * k), (-2.0 * f.d + r) / (3.0 * k)}) {
                if (c > 0.0 && c < n_max) {
                    nodes.push_back(c);
                    critical.push_back(c);
                }
            }
        }
        nodes.push_back(n_max);
        std::sort(nodes.begin(), nodes.end());

        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            const double lo = nodes[i];
            const double hi = nodes[i + 1];
            const double flo = f(lo);
            const double fhi = f(hi);
            if ((flo < 0.0 && fhi > 0.0) || (flo > 0.0 && fhi < 0.0)) {
                roots.push_back(polish_root(f, lo, hi));
            } else if (fhi == 0.0) {
                roots.push_back(hi);
            }
        }
        // Tangent (fold) roots: a critical point where the cubic just touches zero.
        for (double c : critical) {
            if (std::abs(f(c)) <= 1e-12 * f.scale(c)) roots.push_back(c);
        }
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end(),
                                [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(x, y); }),
                    roots.end());
    }

    std::vector<SystemState> out;
    out.reserve(roots.size());
    for (double n : roots) {
        const double res = std::abs(f(n));
        if (!(res <= 1e-9 * f.scale(n))) {
            std::ostringstream os;
            os << "static_fixed_points: root polishing failed at n=" << n << " (|f|=" << res
               << ", scale=" << f.scale(n) << ", detuning=" << f.d << ", K=" << k << ")";
            throw NumericalError(os.str());
        }
        SystemState st;
        const double shifted = f.d + k * n;
        st.a = m.drive / cdouble(f.h, -shifted);
        for (int j = 0; j < kModes; ++j) {
            st.b[j] = static_displacement(m.g[j], m.omega[j], 2.0 * m.half_gamma[j], n);
        }
        out.push_back(st);
    }
    return out;
}

SystemState lower_fixed_point(const SystemParams& params, const PumpCondition& pump) {
    auto fps = static_fixed_points(params, pump);
    if (fps.empty()) throw NumericalError("lower_fixed_point: no steady state found");
    return fps.front();
}

double fixed_point_residual(const SystemParams& params, const PumpCondition& pump, const SystemState& state) {
    const ScaledModel m = ScaledModel::make(params, pump);
    const SystemState d = scaled_rhs(m, state);
    const double n = std::norm(state.a);
    const double shift = m.detuning - 2.0 * (m.g[0] * state.b[0].real() + m.g[1] * state.b[1].real());
    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : num; };
    double r = ratio(std::abs(d.a), (m.half_kappa + std::abs(shift)) * std::abs(state.a) + std::abs(m.drive));
    for (int j = 0; j < kModes; ++j) {
        const double terms = std::abs(cdouble(m.half_gamma[j], m.omega[j])) * std::abs(state.b[j]) + m.g[j] * n;
        r = std::max(r, ratio(std::abs(d.b[j]), terms));
    }
    return r;
}

}  // namespace emcomb
