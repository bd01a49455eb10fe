#include "emcomb/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "emcomb/errors.hpp"
#include "emcomb/model.hpp"
#include "emcomb/parallel.hpp"
#include "emcomb/units.hpp"

namespace emcomb {

std::string to_string(DominantMode m) {
    switch (m) {
        case DominantMode::Mode1: return "mode1";
        case DominantMode::Mode2: return "mode2";
        case DominantMode::Cavity: return "cavity";
    }
    return "cavity";
}

DominantMode dominant_mode_from_string(const std::string& s) {
    for (auto m : {DominantMode::Mode1, DominantMode::Mode2, DominantMode::Cavity}) {
        if (to_string(m) == s) return m;
    }
    throw ConfigError("unknown mode label '" + s + "'");
}

Jacobian jacobian_at(const SystemParams& params, const PumpCondition& pump, const SystemState& s) {
    const ScaledModel m = ScaledModel::make(params, pump);
    const double shift = m.detuning - 2.0 * (m.g[0] * s.b[0].real() + m.g[1] * s.b[1].real());
    Jacobian jac = Jacobian::Zero();
    auto set = [&](int col, int row_pair, cdouble v) {
        jac(2 * row_pair, col) = v.real();
        jac(2 * row_pair + 1, col) = v.imag();
    };
    const cdouble lin_a(-m.half_kappa, shift);
    set(0, 0, lin_a);
    set(1, 0, cdouble(0.0, 1.0) * lin_a);
    for (int j = 0; j < kModes; ++j) {
        const int cr = 2 + 2 * j;
        set(cr, 0, cdouble(0.0, -2.0 * m.g[j]) * s.a);
        // Im b_j does not enter da/dt.
        const cdouble lin_b(-m.half_gamma[j], -m.omega[j]);
        set(0, 1 + j, cdouble(0.0, -2.0 * m.g[j] * s.a.real()));
        set(1, 1 + j, cdouble(0.0, -2.0 * m.g[j] * s.a.imag()));
        set(cr, 1 + j, lin_b);
        set(cr + 1, 1 + j, cdouble(0.0, 1.0) * lin_b);
    }
    return jac * m.omega_ref;
}

Jacobian jacobian(const SystemParams& params, const PumpCondition& pump, const SystemState& fp) {
    const double r = fixed_point_residual(params, pump, fp);
    if (!(r < 1e-9)) {
        std::ostringstream os;
        os << "jacobian: state is not a fixed point (relative residual " << r << ")";
        throw NotAFixedPointError(os.str());
    }
    return jacobian_at(params, pump, fp);
}

StabilityReport analyze(const SystemParams& params, const PumpCondition& pump) {
    StabilityReport rep;
    rep.fixed_point = lower_fixed_point(params, pump);
    const Jacobian jac = jacobian(params, pump, rep.fixed_point);
    Eigen::EigenSolver<Jacobian> es(jac, true);
    if (es.info() != Eigen::Success) throw NumericalError("analyze: eigen-solver did not converge");
    const auto vals = es.eigenvalues();
    const auto vecs = es.eigenvectors();

    std::array<int, 6> order{0, 1, 2, 3, 4, 5};
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        if (vals[x].real() != vals[y].real()) return vals[x].real() > vals[y].real();
        return vals[x].imag() > vals[y].imag();
    });
    for (int k = 0; k < 6; ++k) rep.eigenvalues[k] = vals[order[k]];
    rep.max_growth = rep.eigenvalues[0].real();

    const auto v = vecs.col(order[0]);
    const std::array<double, 3> weight{std::norm(v[0]) + std::norm(v[1]), std::norm(v[2]) + std::norm(v[3]),
                                       std::norm(v[4]) + std::norm(v[5])};
    const auto best = std::max_element(weight.begin(), weight.end()) - weight.begin();
    rep.dominant_mode = best == 0 ? DominantMode::Cavity : (best == 1 ? DominantMode::Mode1 : DominantMode::Mode2);
    return rep;
}

GrowthRate max_growth_rate(const SystemParams& params, const PumpCondition& pump) {
    const StabilityReport rep = analyze(params, pump);
    return {rep.max_growth, rep.dominant_mode};
}

double sideband_gain(const SystemParams& params, const PumpCondition& pump, int mode) {
    if (mode < 0 || mode >= kModes) throw ConfigError("sideband_gain: mode must be 0 or 1");
    const SystemState fp = lower_fixed_point(params, pump);
    const double n = fp.photons();
    const double d = shifted_detuning(params, pump, n);
    const auto& m = params.modes[mode];
    const double hk2 = 0.25 * params.kappa * params.kappa;
    const double bracket = 1.0 / (hk2 + (d + m.omega) * (d + m.omega)) - 1.0 / (hk2 + (d - m.omega) * (d - m.omega));
    return m.g * m.g * n * params.kappa * bracket;
}

namespace {

double growth_at(const SystemParams& params, double delta_dc, double p_dbm, DominantMode* mode = nullptr) {
    const auto pump = PumpCondition::from_detuning_dbm(params, delta_dc, p_dbm);
    const GrowthRate g = max_growth_rate(params, pump);
    if (mode) *mode = g.mode;
    return g.rate;
}

}  // namespace

Threshold threshold_power(const SystemParams& params, double delta_dc, double lo_dbm, double hi_dbm) {
    const double g_lo = growth_at(params, delta_dc, lo_dbm);
    const double g_hi = growth_at(params, delta_dc, hi_dbm);
    if (!(g_lo < 0.0 && g_hi > 0.0)) {
        std::ostringstream os;
        os << "threshold_power: bracket [" << lo_dbm << ", " << hi_dbm << "] dBm does not straddle the instability"
           << " (growth " << g_lo << ", " << g_hi << " 1/s)";
        throw BracketError(os.str());
    }
    const double target = 1e-3 * params.modes[0].gamma;
    Threshold th;
    double lo = lo_dbm, hi = hi_dbm;
    for (int it = 1; it <= 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        DominantMode mode{};
        const double g = growth_at(params, delta_dc, mid, &mode);
        th.p_dbm = mid;
        th.branch = mode;
        th.iterations = it;
        if (std::abs(g) < target || hi - lo < 1e-12) break;
        (g < 0.0 ? lo : hi) = mid;
    }
    return th;
}

std::optional<Threshold> find_threshold(const SystemParams& params, double delta_dc, double lo_dbm, double hi_dbm,
                                        double step_db) {
    double prev = lo_dbm;
    if (growth_at(params, delta_dc, prev) >= 0.0) {
        throw BracketError("find_threshold: already unstable at the lower scan limit");
    }
    for (double p = lo_dbm + step_db; p <= hi_dbm + 1e-9; p += step_db) {
        if (growth_at(params, delta_dc, p) > 0.0) return threshold_power(params, delta_dc, prev, p);
        prev = p;
    }
    return std::nullopt;
}

std::optional<Threshold> single_mode_threshold(const SystemParams& params, double delta_dc, int mode, double lo_dbm,
                                               double hi_dbm, double step_db) {
    if (mode < 0 || mode >= kModes) throw ConfigError("single_mode_threshold: mode must be 0 or 1");
    SystemParams p = params;
    p.modes[1 - mode].g = 0.0;
    return find_threshold(p, delta_dc, lo_dbm, hi_dbm, step_db);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void fill_point(const SystemParams& params, const ThresholdCurveOptions& o, ThresholdCurve& c, std::size_t i) {
    const double delta = c.detunings[i];
    try {
        if (auto th = find_threshold(params, delta, o.lo_dbm, o.hi_dbm, o.step_db)) {
            c.threshold_dbm[i] = th->p_dbm;
            c.branch[i] = th->branch;
        }
    } catch (const NumericalError&) {
        c.threshold_dbm[i] = kNaN;
    }
    if (o.per_mode) {
        for (int j = 0; j < kModes; ++j) {
            auto& dst = j == 0 ? c.mode1_dbm : c.mode2_dbm;
            try {
                if (auto th = single_mode_threshold(params, delta, j, o.lo_dbm, o.hi_dbm, o.step_db)) {
                    dst[i] = th->p_dbm;
                }
            } catch (const NumericalError&) {
                dst[i] = kNaN;
            }
        }
    }
}

ThresholdCurve prepare(const std::vector<double>& detunings, const ThresholdCurveOptions& o) {
    ThresholdCurve c;
    c.detunings = detunings;
    c.threshold_dbm.assign(detunings.size(), kNaN);
    c.branch.assign(detunings.size(), DominantMode::Cavity);
    if (o.per_mode) {
        c.mode1_dbm.assign(detunings.size(), kNaN);
        c.mode2_dbm.assign(detunings.size(), kNaN);
    }
    return c;
}

}  // namespace

ThresholdCurve threshold_curve_serial(const SystemParams& params, const std::vector<double>& detunings,
                                      const ThresholdCurveOptions& options) {
    params.validate();
    ThresholdCurve c = prepare(detunings, options);
    for (std::size_t i = 0; i < detunings.size(); ++i) fill_point(params, options, c, i);
    return c;
}

ThresholdCurve threshold_curve(const SystemParams& params, const std::vector<double>& detunings,
                               const ThresholdCurveOptions& options) {
    params.validate();
    ThresholdCurve c = prepare(detunings, options);
    const auto n = static_cast<long>(detunings.size());
    const int threads = resolve_threads(options.threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads != 1)
    for (long i = 0; i < n; ++i) fill_point(params, options, c, static_cast<std::size_t>(i));
    return c;
}

void write_threshold_csv(std::ostream& os, const ThresholdCurve& c, const std::string& header) {
    os << header;
    const bool per_mode = !c.mode1_dbm.empty();
    os << "delta_dc_hz,threshold_dbm,branch";
    if (per_mode) os << ",mode1_dbm,mode2_dbm";
    os << '\n';
    os.precision(12);
    for (std::size_t i = 0; i < c.detunings.size(); ++i) {
        os << units::rad_to_hz(c.detunings[i]) << ',' << c.threshold_dbm[i] << ','
           << (std::isnan(c.threshold_dbm[i]) ? std::string("none") : to_string(c.branch[i]));
        if (per_mode) os << ',' << c.mode1_dbm[i] << ',' << c.mode2_dbm[i];
        os << '\n';
    }
}

}  // namespace emcomb
