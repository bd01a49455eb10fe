#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "emcomb/params.hpp"

namespace emcomb {

using Jacobian = Eigen::Matrix<double, 6, 6>;

enum class DominantMode { Mode1, Mode2, Cavity };

[[nodiscard]] std::string to_string(DominantMode m);
[[nodiscard]] DominantMode dominant_mode_from_string(const std::string& s);

struct StabilityReport {
    SystemState fixed_point;
    std::array<cdouble, 6> eigenvalues{};  // 1/s, sorted by real part descending
    double max_growth = 0.0;               // 1/s
    DominantMode dominant_mode = DominantMode::Cavity;
};

/// Analytic Jacobian (1/s) of the equations of motion in the basis
/// (Re a, Im a, Re b1, Im b1, Re b2, Im b2). Throws NotAFixedPointError when
/// `fp` does not satisfy the steady-state equations to 1e-9 (relative).
[[nodiscard]] Jacobian jacobian(const SystemParams& params, const PumpCondition& pump, const SystemState& fp);

/// Jacobian without the fixed-point precondition; used by tests and by the
/// finite-difference comparison at arbitrary states.
[[nodiscard]] Jacobian jacobian_at(const SystemParams& params, const PumpCondition& pump, const SystemState& state);

/// Eigen-analysis at the lower fixed point.
[[nodiscard]] StabilityReport analyze(const SystemParams& params, const PumpCondition& pump);

struct GrowthRate {
    double rate = 0.0;  // 1/s
    DominantMode mode = DominantMode::Cavity;
};

[[nodiscard]] GrowthRate max_growth_rate(const SystemParams& params, const PumpCondition& pump);

/// Resolved-sideband optical damping of mode j at the lower fixed point:
///   Gamma_j = g_j^2 n kappa [ 1/((kappa/2)^2 + (D+w_j)^2) - 1/((kappa/2)^2 + (D-w_j)^2) ]
/// with D the static-shift corrected detuning. Negative on the blue side
/// (anti-damping); the effective damping is gamma_j + Gamma_j.
[[nodiscard]] double sideband_gain(const SystemParams& params, const PumpCondition& pump, int mode);

struct Threshold {
    double p_dbm = 0.0;
    DominantMode branch = DominantMode::Cavity;
    int iterations = 0;
};

/// Bisection on pump power for the zero crossing of max_growth_rate at fixed
/// detuning. Requires growth(lo) < 0 < growth(hi); stops once
/// |max_growth| < 1e-3 gamma_1.
[[nodiscard]] Threshold threshold_power(const SystemParams& params, double delta_dc, double lo_dbm, double hi_dbm);

/// Scans upward from `lo_dbm` in `step_db` steps for the first unstable power
/// and bisects the bracket it finds. Returns nullopt when nothing up to
/// `hi_dbm` is unstable.
[[nodiscard]] std::optional<Threshold> find_threshold(const SystemParams& params, double delta_dc,
                                                      double lo_dbm = -160.0, double hi_dbm = 40.0,
                                                      double step_db = 2.0);

/// Threshold of the instability carried by mechanical mode `mode` alone
/// (the other coupling switched off).
[[nodiscard]] std::optional<Threshold> single_mode_threshold(const SystemParams& params, double delta_dc, int mode,
                                                             double lo_dbm = -160.0, double hi_dbm = 40.0,
                                                             double step_db = 2.0);

struct ThresholdCurve {
    std::vector<double> detunings;      // rad/s
    std::vector<double> threshold_dbm;  // NaN where no instability was found
    std::vector<DominantMode> branch;
    // Single-mode thresholds (the two dashed boundaries), filled on request.
    std::vector<double> mode1_dbm;
    std::vector<double> mode2_dbm;
};

struct ThresholdCurveOptions {
    double lo_dbm = -160.0;
    double hi_dbm = 40.0;
    double step_db = 2.0;
    bool per_mode = false;
    int threads = 0;  // 0: OpenMP default
};

/// Parallel over detunings (OpenMP); bit-identical to threshold_curve_serial.
[[nodiscard]] ThresholdCurve threshold_curve(const SystemParams& params, const std::vector<double>& detunings,
                                             const ThresholdCurveOptions& options = {});
[[nodiscard]] ThresholdCurve threshold_curve_serial(const SystemParams& params, const std::vector<double>& detunings,
                                                    const ThresholdCurveOptions& options = {});

/// CSV columns delta_dc_hz, threshold_dbm, branch (+ mode1_dbm, mode2_dbm when
/// per-mode thresholds were computed).
void write_threshold_csv(std::ostream& os, const ThresholdCurve& curve, const std::string& header = {});

}  // namespace emcomb
