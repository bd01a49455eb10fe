#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "emcomb/params.hpp"

namespace emcomb {

// Small vector-space helpers so the stepper can work on SystemState directly.
inline SystemState axpy(const SystemState& y, double h, const SystemState& k) {
    SystemState r;
    r.a = y.a + h * k.a;
    r.b[0] = y.b[0] + h * k.b[0];
    r.b[1] = y.b[1] + h * k.b[1];
    return r;
}

inline SystemState lincomb(const SystemState& y, double h, std::initializer_list<std::pair<double, const SystemState*>> terms) {
    SystemState r = y;
    for (const auto& [c, k] : terms) {
        const double w = h * c;
        r.a += w * k->a;
        r.b[0] += w * k->b[0];
        r.b[1] += w * k->b[1];
    }
    return r;
}

/// Continuous extension of one accepted Dormand-Prince step (Hairer's 4th-order
/// dense output). Valid for t in [t0, t0 + h].
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    SystemState r1, r2, r3, r4, r5;

    [[nodiscard]] SystemState operator()(double t) const {
        const double s = (t - t0) / h;
        const double s1 = 1.0 - s;
        SystemState y;
        auto eval = [&](cdouble c1, cdouble c2, cdouble c3, cdouble c4, cdouble c5) {
            return c1 + s * (c2 + s1 * (c3 + s * (c4 + s1 * c5)));
        };
        y.a = eval(r1.a, r2.a, r3.a, r4.a, r5.a);
        for (int j = 0; j < kModes; ++j) y.b[j] = eval(r1.b[j], r2.b[j], r3.b[j], r4.b[j], r5.b[j]);
        return y;
    }
};

struct StepperStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
};

enum class StepOutcome { Ok, Underflow, NonFinite, StepBudget };

/// Adaptive Dormand-Prince 5(4) pair with FSAL and PI step-size control.
/// Error norm: per complex amplitude, |err| / (tol * max(|y|, |y_new|) + atol),
/// maximum over the three amplitudes. Deterministic: no timing or threading
/// enters the step acceptance logic.
template <class Rhs>
class DormandPrince {
public:
    DormandPrince(Rhs rhs, double tol, double max_step) : rhs_(std::move(rhs)), tol_(tol), max_step_(max_step) {}

    /// Advance from (t, y) to t_end. `on_step(dense)` is invoked after every
    /// accepted step. Returns the reason the loop stopped; on failure `y` and
    /// `t` hold the last good point.
    template <class OnStep>
    StepOutcome advance(double& t, SystemState& y, double t_end, OnStep&& on_step,
                        std::size_t max_steps = std::numeric_limits<std::size_t>::max()) {
        if (!have_k1_ || t != t_k1_) {
            k1_ = rhs_(y);
            ++stats_.evaluations;
            have_k1_ = true;
            t_k1_ = t;
        }
        if (h_ <= 0.0) h_ = initial_step(t, y);
        std::size_t steps = 0;
        while (t < t_end) {
            if (steps >= max_steps) return StepOutcome::StepBudget;
            double h = std::min({h_, max_step_, t_end - t});
            const bool last = (h == t_end - t);
            if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)) && !last) {
                return StepOutcome::Underflow;
            }

            const SystemState& k1 = k1_;
            const SystemState y2 = lincomb(y, h, {{a21, &k1}});
            const SystemState k2 = rhs_(y2);
            const SystemState y3 = lincomb(y, h, {{a31, &k1}, {a32, &k2}});
            const SystemState k3 = rhs_(y3);
            const SystemState y4 = lincomb(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
            const SystemState k4 = rhs_(y4);
            const SystemState y5 = lincomb(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
            const SystemState k5 = rhs_(y5);
            const SystemState y6 = lincomb(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
            const SystemState k6 = rhs_(y6);
            const SystemState yn = lincomb(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
            const SystemState k7 = rhs_(yn);
            stats_.evaluations += 6;

            const SystemState err = lincomb(SystemState{}, h, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}});
            const double err_norm = error_norm(y, yn, err);

            if (!std::isfinite(err_norm)) {
                // Retry smaller once the step is still sane; a non-finite new
                // state at a tiny step is divergence.
                if (!yn.finite() && h < 1e-6 * max_step_) return StepOutcome::NonFinite;
                h_ = 0.1 * h;
                ++stats_.rejected;
                continue;
            }

            if (err_norm <= 1.0) {
                DenseStep dense;
                dense.t0 = t;
                dense.h = h;
                const SystemState ydiff = lincomb(yn, -1.0, {{1.0, &y}});  // yn - y
                const SystemState bspl = lincomb(SystemState{}, h, {{1.0, &k1}});
                dense.r1 = y;
                dense.r2 = ydiff;
                dense.r3 = lincomb(bspl, -1.0, {{1.0, &ydiff}});  // h k1 - ydiff
                dense.r4 = lincomb(lincomb(ydiff, -h, {{1.0, &k7}}), -1.0, {{1.0, &dense.r3}});
                dense.r5 = lincomb(SystemState{}, h, {{d1, &k1}, {d3, &k3}, {d4, &k4}, {d5, &k5}, {d6, &k6}, {d7, &k7}});

                t = last ? t_end : t + h;
                y = yn;
                k1_ = k7;
                t_k1_ = t;
                ++stats_.accepted;
                ++steps;
                on_step(dense);
                if (!y.finite()) return StepOutcome::NonFinite;

                // PI controller (Gustafsson), beta = 0.04.
                const double e = std::max(err_norm, 1e-10);
                double fac = 0.9 * std::pow(e, -0.2 + 0.75 * kBeta) * std::pow(err_prev_, kBeta);
                fac = std::clamp(fac, 0.2, 10.0);
                err_prev_ = e;
                if (!last) h_ = h * fac;
            } else {
                const double fac = std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
                h_ = h * fac;
                ++stats_.rejected;
            }
        }
        return StepOutcome::Ok;
    }

    [[nodiscard]] const StepperStats& stats() const { return stats_; }
    [[nodiscard]] double tolerance() const { return tol_; }

private:
    static constexpr double kBeta = 0.04;

    [[nodiscard]] double error_norm(const SystemState& y, const SystemState& yn, const SystemState& err) const {
        const double size = std::abs(y.a) + std::abs(y.b[0]) + std::abs(y.b[1]);
        const double atol = tol_ * 1e-12 * size + std::numeric_limits<double>::min();
        auto part = [&](cdouble e, cdouble u, cdouble v) {
            return std::abs(e) / (tol_ * std::max(std::abs(u), std::abs(v)) + atol);
        };
        return std::max({part(err.a, y.a, yn.a), part(err.b[0], y.b[0], yn.b[0]), part(err.b[1], y.b[1], yn.b[1])});
    }

    [[nodiscard]] double initial_step(double t, const SystemState& y) {
        // Hairer's heuristic, one extra evaluation.
        auto mag = [](const SystemState& s) {
            return std::sqrt(std::norm(s.a) + std::norm(s.b[0]) + std::norm(s.b[1]));
        };
        const double d0 = mag(y);
        const double d1n = mag(k1_);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, max_step_);
        const SystemState y1 = axpy(y, h0, k1_);
        const SystemState f1 = rhs_(y1);
        ++stats_.evaluations;
        // A state at rest (zero amplitudes) is measured against its rate of change.
        const double ref = std::max({d0, d1n, 1e-300});
        const double d2 = mag(lincomb(f1, -1.0, {{1.0, &k1_}})) / h0 / ref;
        const double m = std::max(d1n / ref, d2);
        const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
        (void)t;
        return std::min({100.0 * h0, h1, max_step_});
    }

    // Dormand-Prince tableau.
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                            a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    Rhs rhs_;
    double tol_;
    double max_step_;
    double h_ = 0.0;
    double err_prev_ = 1e-4;
    SystemState k1_{};
    bool have_k1_ = false;
    double t_k1_ = 0.0;
    StepperStats stats_{};
};

}  // namespace emcomb
