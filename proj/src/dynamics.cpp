#include "emcomb/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "emcomb/dopri.hpp"
#include "emcomb/fft.hpp"
#include "emcomb/model.hpp"
#include "emcomb/units.hpp"

namespace emcomb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_tolerance(double tol) {
    if (!(tol >= 1e-12 && tol <= 1e-3)) {
        throw ConfigError("integrate: tol must lie in [1e-12, 1e-3]");
    }
}

struct FullRhs {
    ScaledModel m;
    SystemState operator()(const SystemState& y) const { return scaled_rhs(m, y); }
};

// Cavity equation with the mechanics replaced by a prescribed rotation about
// the static displacement.
struct PrescribedRhs {
    ScaledModel m;
    std::array<cdouble, kModes> center;
    int mode;

    SystemState operator()(const SystemState& y) const {
        SystemState d = scaled_rhs(m, y);
        for (int j = 0; j < kModes; ++j) {
            d.b[j] = (j == mode) ? cdouble(0.0, -m.omega[j]) * (y.b[j] - center[j]) : cdouble{};
        }
        return d;
    }
};

// Evaluates the dense output on a uniform grid tau0 + k * dtau.
struct UniformSampler {
    double tau0 = 0.0;
    double dtau = 0.0;
    std::size_t count = 0;
    std::size_t next = 0;
    std::vector<SystemState>* out = nullptr;
    std::vector<double>* times = nullptr;  // optional, stores tau

    [[nodiscard]] double tau(std::size_t k) const { return tau0 + static_cast<double>(k) * dtau; }

    void consume(const DenseStep& d) {
        const double end = d.t0 + d.h;
        const double slack = 1e-12 * std::max(1.0, std::abs(end));
        while (next < count) {
            const double tk = tau(next);
            if (tk > end + slack) break;
            if (tk >= d.t0 - slack) {
                out->push_back(d(tk));
                if (times) times->push_back(tk);
            }
            ++next;
        }
    }
};

[[noreturn]] void raise(StepOutcome o, const ScaledModel& m, double tau, const SystemState& y) {
    std::ostringstream os;
    const double t = m.to_seconds(tau);
    switch (o) {
        case StepOutcome::Underflow:
            os << "integrate: step size underflow at t=" << t << " s";
            throw IntegrationFailure(os.str(), t, y);
        case StepOutcome::NonFinite:
            os << "integrate: non-finite state at t=" << t << " s";
            throw DivergenceError(os.str(), t, y);
        case StepOutcome::StepBudget:
            os << "integrate: step budget exhausted at t=" << t << " s";
            throw IntegrationFailure(os.str(), t, y);
        case StepOutcome::Ok:
            break;
    }
    throw IntegrationFailure("integrate: unexpected outcome", t, y);
}

template <class Rhs>
Trajectory run(const SystemParams& params, const PumpCondition& pump, Rhs rhs, const SystemState& initial,
               double horizon, double tol, const IntegrateOptions& options) {
    check_tolerance(tol);
    if (!(horizon > 0.0)) throw ConfigError("integrate: horizon must be > 0");
    if (!initial.finite()) throw InvalidStateError("integrate: non-finite initial state");

    const ScaledModel& m = rhs.m;
    DormandPrince<Rhs> stepper(rhs, tol, m.to_tau(max_step_seconds(params)));

    Trajectory traj;
    traj.params = params;
    traj.pump = pump;

    const double tau_end = m.to_tau(horizon);
    const double record = options.record_interval > 0.0 ? options.record_interval : horizon / 8192.0;
    UniformSampler coarse;
    coarse.dtau = m.to_tau(record);
    coarse.count = static_cast<std::size_t>(std::floor(tau_end / coarse.dtau)) + 1;
    std::vector<double> coarse_tau;
    coarse.out = &traj.states;
    coarse.times = &coarse_tau;
    traj.states.reserve(coarse.count + 1);
    coarse_tau.reserve(coarse.count + 1);
    traj.states.push_back(initial);
    coarse_tau.push_back(0.0);
    coarse.next = 1;

    UniformSampler tail;
    const double rate = options.tail_rate > 0.0 ? options.tail_rate : default_tail_rate(params);
    if (options.tail_samples > 0) {
        const auto fit = static_cast<std::size_t>(std::floor(horizon * rate)) + 1;
        const std::size_t n = std::min(options.tail_samples, fit);
        traj.tail.sample_rate = rate;
        traj.tail.t0 = horizon - static_cast<double>(n - 1) / rate;
        traj.tail.samples.reserve(n);
        tail.count = n;
        tail.out = &traj.tail.samples;
        // tau_k derived from the exact second-valued sample time.
        tail.tau0 = m.to_tau(traj.tail.t0);
        tail.dtau = m.omega_ref / rate;
    }

    double tau = 0.0;
    SystemState y = initial;
    auto on_step = [&](const DenseStep& d) {
        coarse.consume(d);
        if (tail.count > 0) tail.consume(d);
    };
    const StepOutcome o = stepper.advance(tau, y, tau_end, on_step, options.max_steps);
    if (o != StepOutcome::Ok) raise(o, m, tau, y);

    if (coarse_tau.back() < tau_end * (1.0 - 1e-14)) {
        coarse_tau.push_back(tau_end);
        traj.states.push_back(y);
    }
    // A sample lost to the end-of-interval slack is the final state itself.
    while (tail.count > 0 && traj.tail.samples.size() < tail.count) traj.tail.samples.push_back(y);

    traj.t.reserve(coarse_tau.size());
    for (double tk : coarse_tau) traj.t.push_back(m.to_seconds(tk));
    traj.accepted_steps = stepper.stats().accepted;
    traj.rejected_steps = stepper.stats().rejected;
    return traj;
}

}  // namespace

double default_tail_rate(const SystemParams& params) {
    const double f1 = units::rad_to_hz(params.modes[0].omega);
    const double f2 = units::rad_to_hz(params.modes[1].omega);
    double rate = 64.0 * f1;
    while (rate < 16.0 * f2) rate *= 2.0;
    return rate;
}

double max_step_seconds(const SystemParams& params) {
    return 1.0 / (32.0 * units::rad_to_hz(params.modes[1].omega));
}

Trajectory integrate(const SystemParams& params, const PumpCondition& pump, const SystemState& initial,
                     double horizon, double tol, const IntegrateOptions& options) {
    params.validate(true, true);
    return run(params, pump, FullRhs{ScaledModel::make(params, pump)}, initial, horizon, tol, options);
}

Trajectory integrate_prescribed(const SystemParams& params, const PumpCondition& pump, double mech_amplitude,
                                int mode, double horizon, double tol, const IntegrateOptions& options) {
    params.validate(true, false);
    if (mode < 0 || mode >= kModes) throw ConfigError("integrate_prescribed: mode must be 0 or 1");
    const SystemState fp = lower_fixed_point(params, pump);
    PrescribedRhs rhs{ScaledModel::make(params, pump), fp.b, mode};
    SystemState init = fp;
    init.b[mode] += mech_amplitude;
    return run(params, pump, rhs, init, horizon, tol, options);
}

std::string to_string(AttractorKind kind) {
    switch (kind) {
        case AttractorKind::FixedPoint: return "FixedPoint";
        case AttractorKind::LimitCycle: return "LimitCycle";
        case AttractorKind::Torus: return "Torus";
        case AttractorKind::Undecided: return "Undecided";
    }
    return "Undecided";
}

AttractorKind attractor_from_string(const std::string& s) {
    for (auto k : {AttractorKind::FixedPoint, AttractorKind::LimitCycle, AttractorKind::Torus, AttractorKind::Undecided}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown attractor kind '" + s + "'");
}

SystemState seeded_initial_state(const SystemParams& params, const PumpCondition& pump) {
    SystemState y = lower_fixed_point(params, pump);
    const std::array<double, kModes> phase{0.3, 1.1};
    for (int j = 0; j < kModes; ++j) {
        y.b[j] += 1e-3 * std::abs(y.b[j]) * std::polar(1.0, phase[j]);
    }
    return y;
}

namespace {

struct WindowStats {
    double dev_first = 0.0;   // max |a - a_fp| over the first half
    double dev_second = 0.0;  // and over the second half
    double mean_a = 0.0;
    std::array<double, kModes> modulation{};  // 2 g_j <|b_j - <b_j>|> / omega_j
};

WindowStats window_stats(const std::vector<SystemState>& s, const SystemState& fp, const ScaledModel& m) {
    WindowStats w;
    const std::size_t n = s.size();
    std::array<cdouble, kModes> mean_b{};
    for (std::size_t k = 0; k < n; ++k) {
        const double dev = std::abs(s[k].a - fp.a);
        (k < n / 2 ? w.dev_first : w.dev_second) = std::max(k < n / 2 ? w.dev_first : w.dev_second, dev);
        w.mean_a += std::abs(s[k].a);
        for (int j = 0; j < kModes; ++j) mean_b[j] += s[k].b[j];
    }
    w.mean_a /= static_cast<double>(n);
    for (int j = 0; j < kModes; ++j) {
        mean_b[j] /= static_cast<double>(n);
        double osc = 0.0;
        for (const auto& st : s) osc += std::abs(st.b[j] - mean_b[j]);
        w.modulation[j] = 2.0 * m.g[j] * (osc / static_cast<double>(n)) / m.omega[j];
    }
    return w;
}

// Fundamental frequencies of the |a(t)| envelope over the tail.
std::vector<double> envelope_fundamentals(const TailWindow& tail, double ratio) {
    const std::size_t n = tail.samples.size();
    if (n < 64) return {};
    std::vector<double> x(n);
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = std::abs(tail.samples[k].a);
        mean += x[k];
    }
    mean /= static_cast<double>(n);
    const double pi = std::acos(-1.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(k) / static_cast<double>(n));
        x[k] = (x[k] - mean) * w;
    }
    const auto spec = fft::real_forward(x);
    std::vector<double> mag(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = std::abs(spec[k]);
    const double bin = tail.sample_rate / static_cast<double>(n);

    double top = 0.0;
    for (std::size_t k = 3; k < mag.size(); ++k) top = std::max(top, mag[k]);
    if (top <= 1e-14 * std::max(mean, 1e-300) * static_cast<double>(n)) return {};

    struct Line {
        double f;
        double mag;
    };
    std::vector<Line> lines;
    for (std::size_t k = 3; k + 3 < mag.size(); ++k) {
        if (mag[k] < ratio * top) continue;
        bool peak = true;
        for (std::size_t d = 1; d <= 3 && peak; ++d) peak = mag[k] >= mag[k - d] && mag[k] > mag[k + d];
        if (!peak) continue;
        const double l = std::log(mag[k - 1]), c = std::log(mag[k]), r = std::log(mag[k + 1]);
        const double den = l - 2.0 * c + r;
        const double off = den != 0.0 ? 0.5 * (l - r) / den : 0.0;
        lines.push_back({(static_cast<double>(k) + std::clamp(off, -0.5, 0.5)) * bin, mag[k]});
    }
    if (lines.empty()) return {};
    const auto strongest = *std::max_element(lines.begin(), lines.end(), [](auto& p, auto& q) { return p.mag < q.mag; });

    auto explains = [&](double f0, const Line& l) {
        const double h = std::round(l.f / f0);
        return h >= 1.0 && std::abs(l.f - h * f0) <= 2.0 * bin + 1e-3 * l.f;
    };
    // Single fundamental (possibly a subharmonic of the strongest line)?
    for (int sub = 1; sub <= 3; ++sub) {
        const double f0 = strongest.f / sub;
        if (f0 < 3.0 * bin) break;
        if (std::all_of(lines.begin(), lines.end(), [&](const Line& l) { return explains(f0, l); })) {
            return {f0};
        }
    }
    // Otherwise report the strongest line and the strongest line it cannot explain.
    std::vector<double> out{strongest.f};
    const Line* second = nullptr;
    for (const auto& l : lines) {
        if (!explains(strongest.f, l) && (!second || l.mag > second->mag)) second = &l;
    }
    if (second) out.push_back(second->f);
    return out;
}

}  // namespace

SettleResult settle(const SystemParams& params, const PumpCondition& pump, const SystemState& initial,
                    const SettleCriteria& criteria) {
    params.validate(true, false);
    check_tolerance(criteria.tol);
    if (!(criteria.var_tol > 0.0) || !(criteria.max_horizon > 0.0) || !(criteria.converge_tol > 0.0)) {
        throw ConfigError("settle: criteria must be positive");
    }
    if (!initial.finite()) throw InvalidStateError("settle: non-finite initial state");

    const ScaledModel m = ScaledModel::make(params, pump);
    const SystemState fp = lower_fixed_point(params, pump);
    FullRhs rhs{m};
    DormandPrince<FullRhs> stepper(rhs, criteria.tol, m.to_tau(max_step_seconds(params)));

    const double period1 = units::kTwoPi / params.modes[0].omega;
    const double window = criteria.window > 0.0 ? criteria.window : 512.0 * period1;
    const double tau_window = m.to_tau(window);
    const double tau_max = m.to_tau(criteria.max_horizon);
    constexpr std::size_t kWindowSamples = 4096;

    SettleResult result;
    Trajectory& traj = result.trajectory;
    traj.params = params;
    traj.pump = pump;
    AttractorReport& rep = result.report;
    rep.growth_rate_estimate = kNaN;

    double tau = 0.0;
    SystemState y = initial;
    std::vector<double> rec_tau{0.0};
    traj.states.push_back(y);

    std::vector<WindowStats> history;
    AttractorKind decided = AttractorKind::Undecided;
    bool converged = false;
    std::size_t steps_used = 0;

    while (tau < tau_max) {
        const double tau_end = std::min(tau + tau_window, tau_max);
        std::vector<SystemState> samples;
        samples.reserve(kWindowSamples + 1);
        UniformSampler sampler;
        sampler.tau0 = tau;
        sampler.dtau = (tau_end - tau) / static_cast<double>(kWindowSamples);
        sampler.count = kWindowSamples + 1;
        sampler.out = &samples;
        std::vector<double> sample_tau;
        sampler.times = &sample_tau;
        samples.push_back(y);
        sample_tau.push_back(tau);
        sampler.next = 1;
        const std::size_t before = stepper.stats().accepted;
        const StepOutcome o = stepper.advance(tau, y, tau_end, [&](const DenseStep& d) { sampler.consume(d); },
                                              criteria.max_steps - std::min(criteria.max_steps, steps_used));
        steps_used += stepper.stats().accepted - before;
        if (o == StepOutcome::StepBudget) break;
        if (o != StepOutcome::Ok) raise(o, m, tau, y);
        while (samples.size() < sampler.count) {
            samples.push_back(y);
            sample_tau.push_back(tau);
        }
        // Keep every 16th window sample as the coarse record.
        for (std::size_t k = 16; k < samples.size(); k += 16) {
            rec_tau.push_back(sample_tau[k]);
            traj.states.push_back(samples[k]);
        }

        const WindowStats w = window_stats(samples, fp, m);
        history.push_back(w);

        // The floor only matters for an undriven cavity (fixed point at the origin).
        const double fp_scale = std::max(std::abs(fp.a), 1e-6);
        const double dev_tol = std::sqrt(criteria.var_tol) * fp_scale;
        const bool decaying = w.dev_second <= w.dev_first;
        if (w.dev_second <= dev_tol && decaying) {
            decided = AttractorKind::FixedPoint;
            converged = true;
            break;
        }
        if (history.size() >= 2) {
            const WindowStats& prev = history[history.size() - 2];
            const double mod = std::max(w.modulation[0], w.modulation[1]);
            bool stable = mod >= 1e-3 &&
                          std::abs(w.mean_a - prev.mean_a) <= criteria.converge_tol * w.mean_a;
            for (int j = 0; j < kModes && stable; ++j) {
                stable = std::abs(w.modulation[j] - prev.modulation[j]) <=
                         criteria.converge_tol * w.modulation[j] + 1e-6 * mod;
            }
            if (stable) {
                converged = true;
                break;
            }
        }
    }
    rep.settle_time = m.to_seconds(tau);

    // Early growth estimate from the first two windows' deviation.
    if (history.size() >= 2 && history[0].dev_second > 0.0 && history[1].dev_second > 0.0) {
        rep.growth_rate_estimate = std::log(history[1].dev_second / history[0].dev_second) / window;
    }

    // Dense tail after the settle phase.
    const IntegrateOptions& to = criteria.tail;
    const double rate = to.tail_rate > 0.0 ? to.tail_rate : default_tail_rate(params);
    const std::size_t n_tail = std::max<std::size_t>(to.tail_samples, 2);
    traj.tail.sample_rate = rate;
    traj.tail.t0 = m.to_seconds(tau);
    traj.tail.samples.reserve(n_tail);
    traj.tail.samples.push_back(y);
    UniformSampler tail;
    tail.tau0 = tau;
    tail.dtau = m.omega_ref / rate;
    tail.count = n_tail;
    tail.next = 1;
    tail.out = &traj.tail.samples;
    std::vector<double> tail_tau;
    tail.times = &tail_tau;
    const double tau_tail_end = tail.tau(n_tail - 1);
    const StepOutcome o = stepper.advance(tau, y, tau_tail_end, [&](const DenseStep& d) { tail.consume(d); });
    if (o != StepOutcome::Ok) raise(o, m, tau, y);
    while (traj.tail.samples.size() < n_tail) traj.tail.samples.push_back(y);
    rec_tau.push_back(tau);
    traj.states.push_back(y);

    traj.t.reserve(rec_tau.size());
    for (double tk : rec_tau) traj.t.push_back(m.to_seconds(tk));
    traj.accepted_steps = stepper.stats().accepted;
    traj.rejected_steps = stepper.stats().rejected;

    // Tail statistics.
    const auto& ts = traj.tail.samples;
    std::array<cdouble, kModes> mean_b{};
    for (const auto& s : ts) {
        const double amp = std::abs(s.a);
        rep.cavity.mean += amp;
        rep.cavity.max = std::max(rep.cavity.max, amp);
        for (int j = 0; j < kModes; ++j) {
            const double bj = std::abs(s.b[j]);
            rep.mech[j].mean += bj;
            rep.mech[j].max = std::max(rep.mech[j].max, bj);
            mean_b[j] += s.b[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(ts.size());
    rep.cavity.mean *= inv;
    for (int j = 0; j < kModes; ++j) {
        rep.mech[j].mean *= inv;
        mean_b[j] *= inv;
        double osc = 0.0;
        for (const auto& s : ts) osc += std::abs(s.b[j] - mean_b[j]);
        rep.mech_oscillation[j] = osc * inv;
    }

    if (decided == AttractorKind::FixedPoint) {
        rep.kind = AttractorKind::FixedPoint;
    } else if (!converged) {
        rep.kind = AttractorKind::Undecided;
    } else {
        rep.envelope_fundamentals = envelope_fundamentals(traj.tail, criteria.torus_ratio);
        rep.kind = rep.envelope_fundamentals.size() >= 2 ? AttractorKind::Torus : AttractorKind::LimitCycle;
        if (rep.envelope_fundamentals.empty()) rep.envelope_fundamentals.push_back(0.0);
    }
    return result;
}

double growth_rate_from_transient(const Trajectory& traj, Oscillator osc) {
    const int j = static_cast<int>(osc);
    if (traj.t.size() < 8) throw FitError("growth_rate_from_transient: too few samples");
    const SystemState fp = lower_fixed_point(traj.params, traj.pump);
    // Skip the cavity transient.
    const double skip = traj.params.kappa > 0.0 ? 20.0 / traj.params.kappa : 0.0;

    std::vector<double> ts, ls;
    double first = -1.0;
    for (std::size_t k = 0; k < traj.t.size(); ++k) {
        if (traj.t[k] < skip) continue;
        const double e = std::abs(traj.states[k].b[j] - fp.b[j]);
        if (!(e > 0.0)) continue;
        if (first < 0.0) first = e;
        if (e > 1e3 * first) break;  // left the linear regime
        ts.push_back(traj.t[k]);
        ls.push_back(std::log(e));
    }
    const std::size_t n = ts.size();
    if (n < 8) throw FitError("growth_rate_from_transient: transient not resolved");
    const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(n);
    const double lm = std::accumulate(ls.begin(), ls.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (ts[k] - tm) * (ts[k] - tm);
        sxy += (ts[k] - tm) * (ls[k] - lm);
    }
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = ls[k] - (lm + slope * (ts[k] - tm));
        rss += r * r;
    }
    const double rms = std::sqrt(rss / static_cast<double>(n));
    if (rms > 0.1) {
        std::ostringstream os;
        os << "growth_rate_from_transient: log-envelope not straight (rms residual " << rms << ")";
        throw FitError(os.str());
    }
    return slope;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool tail_only) {
    os << "t,re_a,im_a,re_b1,im_b1,re_b2,im_b2\n";
    os.precision(17);
    auto row = [&](double t, const SystemState& s) {
        os << t << ',' << s.a.real() << ',' << s.a.imag() << ',' << s.b[0].real() << ',' << s.b[0].imag() << ','
           << s.b[1].real() << ',' << s.b[1].imag() << '\n';
    };
    if (tail_only) {
        for (std::size_t k = 0; k < traj.tail.samples.size(); ++k) row(traj.tail.time(k), traj.tail.samples[k]);
    } else {
        for (std::size_t k = 0; k < traj.t.size(); ++k) row(traj.t[k], traj.states[k]);
    }
}

namespace {
constexpr char kMagic[8] = {'E', 'M', 'C', 'T', 'R', 'A', 'J', '\0'};

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("read_trajectory_binary: truncated stream");
    return v;
}
}  // namespace

void write_trajectory_binary(std::ostream& os, const Trajectory& traj, bool tail_only) {
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, 1);
    const std::uint64_t count = tail_only ? traj.tail.samples.size() : traj.t.size();
    put(os, count);
    put(os, tail_only ? traj.tail.sample_rate : 0.0);
    put(os, tail_only ? traj.tail.t0 : (traj.t.empty() ? 0.0 : traj.t.front()));
    for (std::uint64_t k = 0; k < count; ++k) {
        const double t = tail_only ? traj.tail.time(k) : traj.t[k];
        const SystemState& s = tail_only ? traj.tail.samples[k] : traj.states[k];
        for (double v : {t, s.a.real(), s.a.imag(), s.b[0].real(), s.b[0].imag(), s.b[1].real(), s.b[1].imag()}) {
            put(os, v);
        }
    }
    if (!os) throw IoError("write_trajectory_binary: write failed");
}

BinaryTrajectory read_trajectory_binary(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw IoError("read_trajectory_binary: bad magic");
    BinaryTrajectory out;
    out.version = get<std::uint32_t>(is);
    if (out.version != 1) throw IoError("read_trajectory_binary: unsupported version");
    const auto count = get<std::uint64_t>(is);
    out.sample_rate = get<double>(is);
    (void)get<double>(is);
    out.t.reserve(count);
    out.states.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        out.t.push_back(get<double>(is));
        SystemState s;
        const double ar = get<double>(is), ai = get<double>(is);
        const double b1r = get<double>(is), b1i = get<double>(is);
        const double b2r = get<double>(is), b2i = get<double>(is);
        s.a = {ar, ai};
        s.b = {cdouble(b1r, b1i), cdouble(b2r, b2i)};
        out.states.push_back(s);
    }
    return out;
}

}  // namespace emcomb
