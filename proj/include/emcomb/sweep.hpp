#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "emcomb/comb.hpp"
#include "emcomb/dynamics.hpp"
#include "emcomb/spectral.hpp"
#include "emcomb/stability.hpp"

namespace emcomb {

inline constexpr int kFormatVersion = 1;

/// Version string written into every output header.
[[nodiscard]] std::string_view code_version();

/// "756 kHz", "5.31GHz", "2.32 Hz" or a bare number (Hz). Throws ConfigError.
[[nodiscard]] double parse_frequency_hz(std::string_view text);

/// "lo:hi:n" -> n evenly spaced values including both ends (n = 1 gives lo).
[[nodiscard]] std::vector<double> parse_range(std::string_view text);
[[nodiscard]] std::vector<double> linspace(double lo, double hi, std::size_t n);
/// lo, lo + step, ... up to hi (inclusive within 1e-9 step).
[[nodiscard]] std::vector<double> step_range(double lo, double hi, double step);

[[nodiscard]] std::uint64_t fnv1a64(std::string_view data);

struct ClassifierSettings {
    double margin_db = 10.0;
    double dynamic_range_db = 80.0;
    int kmax = 6;
    double tol_hz = 0.0;  // 0: max(3 rbw, 1e-3 f1)
    bool subtract_carrier = true;
    bool measured_frequencies = true;  // lattice from the b_j oscillation lines
};

struct SweepPlan {
    std::string preset = "desk-scale";
    SystemParams params;            // preset with config overrides applied
    double attenuation_db = 0.0;    // on-chip power = grid value - attenuation
    std::vector<double> detunings;  // delta_dc / omega_m1
    std::vector<double> powers_dbm;
    // Horizon = budget / |max growth|, clamped to [min_horizon, max_horizon] / gamma_1.
    double budget = 200.0;
    double min_horizon = 40.0;
    double max_horizon = 400.0;
    double tol = 1e-9;
    std::size_t max_steps = 20'000'000;  // per point; exhausted points are Undecided
    ClassifierSettings classifier;
    int threads = 0;  // 0: OpenMP default
    std::string output_dir = ".";

    /// Throws ConfigError on an unusable plan.
    void validate() const;

    /// Everything that determines the results (not threads, not output_dir).
    [[nodiscard]] nlohmann::ordered_json effective_config() const;
    [[nodiscard]] std::string config_hash() const;
};

/// Plan seeded from a preset with empty grids.
[[nodiscard]] SweepPlan plan_from_preset(const std::string& preset_name);

/// Applies a YAML config on top of `base`. A `preset:` key replaces the base
/// parameters before the other overrides are applied. Throws ConfigError.
[[nodiscard]] SweepPlan apply_config_yaml(const SweepPlan& base, const std::string& yaml_text);
[[nodiscard]] SweepPlan load_config_file(const SweepPlan& base, const std::string& path);

struct PointResult {
    double delta_over_omega1 = 0.0;
    double p_d_dbm = 0.0;  // on-chip
    std::optional<Regime> regime;  // empty when the point failed before classification
    double dominant_spacing_hz = 0.0;
    double max_growth_per_s = 0.0;
    std::optional<DominantMode> branch;
    std::optional<AttractorKind> attractor;
    std::string error;  // error code, empty on success
    std::array<double, kModes> mech_oscillation{};
    std::array<double, kModes> lattice_hz{};
    std::vector<LatticeAssignment> teeth;
    double wall_seconds = 0.0;  // not part of equality

    [[nodiscard]] bool same_data(const PointResult& o, bool with_teeth = true) const;
};

struct SweepResult {
    std::string preset;
    std::string config_hash;
    nlohmann::ordered_json config;
    std::vector<PointResult> points;  // detuning-major, power-minor
    ThresholdCurve thresholds;        // over plan.detunings (rad/s), per-mode
};

/// One grid point with its intermediate artifacts (what `simulate` writes).
struct PointDetail {
    PointResult result;
    std::optional<SettleResult> settled;
    std::optional<Spectrum> spectrum;
    std::vector<Tooth> teeth;
    std::optional<CombClassification> classification;
    std::string message;  // error text when result.error is set
};

/// settle from the seeded state, output spectrum, teeth, classification.
/// Library errors are caught and recorded in result.error.
[[nodiscard]] PointDetail simulate_point(const SweepPlan& plan, double delta_over_omega1, double p_dbm);
[[nodiscard]] PointResult run_point(const SweepPlan& plan, double delta_over_omega1, double p_dbm);

/// Parallel over grid points (OpenMP, dynamic schedule); results are stored
/// by grid index, so the output does not depend on the thread count.
[[nodiscard]] SweepResult run_sweep(const SweepPlan& plan);
[[nodiscard]] SweepResult run_sweep_serial(const SweepPlan& plan);

enum class MapFormat { Csv, Json };

void write_map_csv(std::ostream& os, const SweepResult& r);
void write_map_json(std::ostream& os, const SweepResult& r);
/// Writes `path`; IoError carries the path.
void export_map(const SweepResult& r, const std::string& path, MapFormat format);

[[nodiscard]] SweepResult read_map_csv(std::istream& is);
[[nodiscard]] SweepResult read_map_json(std::istream& is);

/// Header lines ("# key: value") shared by every artifact of a plan.
[[nodiscard]] std::string artifact_header(const std::string& preset, const std::string& hash,
                                          const nlohmann::ordered_json& config);

}  // namespace emcomb
