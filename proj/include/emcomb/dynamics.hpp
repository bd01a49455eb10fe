#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emcomb/errors.hpp"
#include "emcomb/params.hpp"

namespace emcomb {

/// Step-size collapse; carries the last accepted state.
class IntegrationFailure : public NumericalError {
public:
    IntegrationFailure(const std::string& what, double t, SystemState last)
        : NumericalError("integration_failure", what), t_(t), last_(last) {}
    [[nodiscard]] double time() const { return t_; }
    [[nodiscard]] const SystemState& last_state() const { return last_; }

private:
    double t_;
    SystemState last_;
};

/// Non-finite state during integration.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, double t, SystemState last)
        : NumericalError("divergence", what), t_(t), last_(last) {}
    [[nodiscard]] double time() const { return t_; }
    [[nodiscard]] const SystemState& last_state() const { return last_; }

private:
    double t_;
    SystemState last_;
};

/// Uniformly resampled segment at the end of a run; sample k sits at
/// t0 + k / sample_rate.
struct TailWindow {
    double t0 = 0.0;
    double sample_rate = 0.0;  // Hz
    std::vector<SystemState> samples;

    [[nodiscard]] double time(std::size_t k) const { return t0 + static_cast<double>(k) / sample_rate; }
    [[nodiscard]] double duration() const {
        return samples.empty() ? 0.0 : static_cast<double>(samples.size() - 1) / sample_rate;
    }
};

struct Trajectory {
    SystemParams params;
    PumpCondition pump;
    std::vector<double> t;  // s, strictly increasing
    std::vector<SystemState> states;
    TailWindow tail;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

struct IntegrateOptions {
    double record_interval = 0.0;  // s; 0 picks horizon / 8192
    std::size_t tail_samples = 73728;  // 4.5 segments of 2^14 (8 half-overlapped)
    double tail_rate = 0.0;  // Hz; 0 picks 64 samples per mode-1 period
    std::size_t max_steps = 200'000'000;
};

/// Default tail sample rate: 64 samples per mode-1 period, raised in powers of
/// two until there are at least 16 samples per mode-2 period.
[[nodiscard]] double default_tail_rate(const SystemParams& params);

/// Largest step the integrator may take: 1/32 of a mode-2 period.
[[nodiscard]] double max_step_seconds(const SystemParams& params);

/// Adaptive Dormand-Prince 5(4) integration of the equations of motion from
/// t = 0 to `horizon` seconds with relative local error target `tol`.
[[nodiscard]] Trajectory integrate(const SystemParams& params, const PumpCondition& pump,
                                   const SystemState& initial, double horizon, double tol,
                                   const IntegrateOptions& options = {});

/// Cavity driven by a prescribed mechanical limit cycle: mode `mode` follows
/// b_j(t) = b_j,static + B exp(-i omega_mj t) with no damping or back-action,
/// the other mode is frozen at its static value. Static values are those of
/// the lower fixed point. The cavity starts from that fixed point.
[[nodiscard]] Trajectory integrate_prescribed(const SystemParams& params, const PumpCondition& pump,
                                              double mech_amplitude, int mode, double horizon,
                                              double tol, const IntegrateOptions& options = {});

enum class AttractorKind { FixedPoint, LimitCycle, Torus, Undecided };

[[nodiscard]] std::string to_string(AttractorKind kind);
[[nodiscard]] AttractorKind attractor_from_string(const std::string& s);

struct AmplitudeStats {
    double mean = 0.0;
    double max = 0.0;
};

struct AttractorReport {
    AttractorKind kind = AttractorKind::Undecided;
    double settle_time = 0.0;  // s
    AmplitudeStats cavity;     // |a| over the tail
    std::array<AmplitudeStats, kModes> mech;  // |b_j| over the tail
    /// Mean oscillation amplitude |b_j - <b_j>| over the tail.
    std::array<double, kModes> mech_oscillation{};
    double growth_rate_estimate = 0.0;  // 1/s, NaN when no transient was resolved
    /// Fundamental frequencies (Hz) found in the spectrum of |a(t)|.
    std::vector<double> envelope_fundamentals;
};

struct SettleCriteria {
    double var_tol = 1e-10;       // FixedPoint: max |a - a_fp|^2 < var_tol |a_fp|^2
    double max_horizon = 0.0;     // s; required
    double window = 0.0;          // s; 0 picks 512 mode-1 periods
    double converge_tol = 2e-3;   // relative window-to-window change of tail amplitudes
    double tol = 1e-9;            // integrator tolerance
    double torus_ratio = 0.05;    // second envelope line / first (amplitude)
    std::size_t max_steps = 200'000'000;
    IntegrateOptions tail{};
};

/// Lower fixed point plus 1e-3 relative kicks on b_1 and b_2 with fixed phases.
[[nodiscard]] SystemState seeded_initial_state(const SystemParams& params, const PumpCondition& pump);

/// Integrates in windows until the attractor is identified or max_horizon is
/// reached, then records a dense tail for spectral use.
struct SettleResult {
    Trajectory trajectory;
    AttractorReport report;
};
[[nodiscard]] SettleResult settle(const SystemParams& params, const PumpCondition& pump,
                                  const SystemState& initial, const SettleCriteria& criteria);

enum class Oscillator { B1 = 0, B2 = 1 };

/// Least-squares slope of log|b_j(t) - b_j,fp| over the early transient of a
/// run started near the lower fixed point. Positive means unstable.
[[nodiscard]] double growth_rate_from_transient(const Trajectory& traj, Oscillator osc);

// Trajectory export.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool tail_only = false);

/// Binary layout (little-endian): char[8] "EMCTRAJ\0", uint32 version (=1),
/// uint64 sample count, double sample rate (Hz, 0 when non-uniform),
/// double t0, then per sample 7 doubles (t, Re a, Im a, Re b1, Im b1, Re b2, Im b2).
void write_trajectory_binary(std::ostream& os, const Trajectory& traj, bool tail_only = true);

struct BinaryTrajectory {
    std::uint32_t version = 0;
    double sample_rate = 0.0;
    std::vector<double> t;
    std::vector<SystemState> states;
};
[[nodiscard]] BinaryTrajectory read_trajectory_binary(std::istream& is);

}  // namespace emcomb
