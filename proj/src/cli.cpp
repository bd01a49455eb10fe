#include "emcomb/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "emcomb/comb.hpp"
#include "emcomb/errors.hpp"
#include "emcomb/model.hpp"
#include "emcomb/spectral.hpp"
#include "emcomb/stability.hpp"
#include "emcomb/sweep.hpp"
#include "emcomb/units.hpp"

namespace emcomb {

namespace {

namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(const std::string& code) {
    return (code == "config_error" || code == "io_error") ? kExitUsage : kExitNumerical;
}

struct Globals {
    std::string preset = "desk-scale";
    std::string config;
};

SweepPlan base_plan(const Globals& g) {
    SweepPlan p = plan_from_preset(g.preset);
    if (!g.config.empty()) p = load_config_file(p, g.config);
    return p;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    return f;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

double frequency_arg(const std::string& s) { return parse_frequency_hz(s); }

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
    double detuning = 1.0;
    double power = 0.0;
    std::string out = ".";
    double horizon = 0.0;
    bool keep_carrier = false;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    SweepPlan plan = base_plan(g);
    if (a.horizon > 0.0) {
        plan.max_horizon = a.horizon;
        plan.min_horizon = std::min(plan.min_horizon, a.horizon);
    }
    if (a.keep_carrier) plan.classifier.subtract_carrier = false;
    plan.detunings = {a.detuning};
    plan.powers_dbm = {a.power};
    plan.validate();

    const PointDetail d = simulate_point(plan, a.detuning, a.power);
    const PointResult& r = d.result;
    const fs::path dir(a.out);
    make_dir(dir);
    const std::string header = artifact_header(plan.preset, plan.config_hash(), plan.effective_config());
    if (d.settled) {
        auto f = open_out(dir / "trajectory.bin");
        write_trajectory_binary(f, d.settled->trajectory, true);
        auto c = open_out(dir / "trajectory.csv");
        c << header;
        write_trajectory_csv(c, d.settled->trajectory, false);
    }
    if (d.spectrum) {
        auto f = open_out(dir / "spectrum.csv");
        write_spectrum_csv(f, *d.spectrum, header);
        auto t = open_out(dir / "teeth.json");
        write_teeth_json(t, d.teeth);
    }
    if (d.classification) {
        auto f = open_out(dir / "classification.json");
        write_classification_json(f, *d.classification);
    }
    if (!r.error.empty()) {
        err << "emcomb simulate: " << r.error << ": " << d.message << '\n';
        return exit_code_for(r.error);
    }
    out << std::setprecision(10) << "regime=" << to_string(*r.regime) << " attractor=" << to_string(*r.attractor)
        << " dominant_spacing_hz=" << r.dominant_spacing_hz << " teeth=" << d.teeth.size()
        << " max_growth_per_s=" << r.max_growth_per_s << '\n';
    return 0;
}

// ------------------------------------------------------------------ threshold

struct ThresholdArgs {
    std::string detuning;
    bool per_mode = false;
    std::string out;
    int threads = 0;
};

int cmd_threshold(const Globals& g, const ThresholdArgs& a, std::ostream& out) {
    SweepPlan plan = base_plan(g);
    plan.params.validate(false, false);
    const auto grid = parse_range(a.detuning);
    std::vector<double> det;
    for (double x : grid) det.push_back(x * plan.params.modes[0].omega);
    ThresholdCurveOptions o;
    o.per_mode = a.per_mode;
    o.threads = a.threads;
    const ThresholdCurve c = threshold_curve(plan.params, det, o);
    plan.detunings = grid;
    const std::string header = artifact_header(plan.preset, plan.config_hash(), plan.effective_config());
    if (a.out.empty()) {
        write_threshold_csv(out, c, header);
    } else {
        auto f = open_out(a.out);
        write_threshold_csv(f, c, header);
    }
    return 0;
}

// ------------------------------------------------------------------ sweep

struct SweepArgs {
    std::string detuning;
    std::string power;
    std::string out;
    int threads = -1;
    std::string format = "both";
};

int cmd_sweep(const Globals& g, const SweepArgs& a, std::ostream& out) {
    SweepPlan plan = base_plan(g);
    if (!a.detuning.empty()) plan.detunings = parse_range(a.detuning);
    if (!a.power.empty()) plan.powers_dbm = parse_range(a.power);
    if (a.threads >= 0) plan.threads = a.threads;
    if (!a.out.empty()) plan.output_dir = a.out;
    plan.validate();

    const SweepResult r = run_sweep(plan);
    const fs::path dir(plan.output_dir);
    make_dir(dir);
    if (a.format == "csv" || a.format == "both") export_map(r, (dir / "map.csv").string(), MapFormat::Csv);
    if (a.format == "json" || a.format == "both") export_map(r, (dir / "map.json").string(), MapFormat::Json);
    {
        auto f = open_out(dir / "thresholds.csv");
        write_threshold_csv(f, r.thresholds, artifact_header(r.preset, r.config_hash, r.config));
    }
    std::size_t failed = 0;
    for (const auto& p : r.points) failed += p.error.empty() ? 0 : 1;
    out << "points=" << r.points.size() << " failed=" << failed << " config_hash=" << r.config_hash
        << " out=" << dir.string() << '\n';
    return 0;
}

// ------------------------------------------------------------------ classify

struct ClassifyArgs {
    std::string teeth;
    std::string fm1;
    std::string fm2;
    std::string tol;
    int kmax = 6;
    std::string out;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
    std::ifstream in(a.teeth);
    if (!in) throw ConfigError("cannot open tooth list '" + a.teeth + "'");
    const auto teeth = read_teeth_json(in);
    const double f1 = frequency_arg(a.fm1);
    const double f2 = frequency_arg(a.fm2);
    const double tol = a.tol.empty() ? 1e-3 * f1 : frequency_arg(a.tol);
    const CombClassification c = classify(teeth, f1, f2, tol, a.kmax);
    if (a.out.empty()) {
        write_classification_json(out, c);
    } else {
        auto f = open_out(a.out);
        write_classification_json(f, c);
    }
    return 0;
}

// ------------------------------------------------------------------ analytic

struct AnalyticArgs {
    double detuning = 1.0;
    double power = -60.0;
    double beta = 1.0;
    int mode = 1;
    int kmax = -1;
};

int cmd_analytic(const Globals& g, const AnalyticArgs& a, std::ostream& out) {
    SweepPlan plan = base_plan(g);
    const SystemParams& p = plan.params;
    p.validate(false, false);
    if (a.mode != 1 && a.mode != 2) throw ConfigError("--mode must be 1 or 2");
    const int j = a.mode - 1;
    const auto pump =
        PumpCondition::from_detuning_dbm(p, a.detuning * p.modes[0].omega, a.power - plan.attenuation_db);
    const BesselComb bc = bessel_comb(p, pump, amplitude_for_index(p, j, a.beta), j, a.kmax);
    const double photon = units::kHbar * pump.omega_d;
    const double root_ke = std::sqrt(p.kappa_e);
    out << artifact_header(plan.preset, plan.config_hash(), plan.effective_config());
    out << "# beta: " << bc.modulation_index << "\n# mech_freq_hz: " << bc.mech_freq << '\n';
    out << "k,detuning_hz,abs_alpha,arg_alpha_rad,power_dbm\n";
    out << std::setprecision(12);
    for (int k = -bc.kmax; k <= bc.kmax; ++k) {
        const cdouble al = bc.at(k);
        const cdouble field = k == 0 ? pump.s_in - root_ke * al : -root_ke * al;
        out << k << ',' << k * bc.mech_freq << ',' << std::abs(al) << ',' << std::arg(al) << ','
            << units::watts_to_dbm(photon * std::norm(field)) << '\n';
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-mode electromechanical frequency comb simulator", "emcomb"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--preset", g.preset, "Parameter preset (paper-device, desk-scale)")
        ->check(CLI::IsMember({"paper-device", "desk-scale"}));
    app.add_option("--config", g.config, "YAML config applied on top of the preset");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Settle one pump point and write trajectory, spectrum and classification");
    s->add_option("--detuning", sim.detuning, "delta_dc / omega_m1");
    s->add_option("--power", sim.power, "Pump power in dBm (before attenuation)")->required();
    s->add_option("--out", sim.out, "Output directory");
    s->add_option("--horizon", sim.horizon, "Maximum simulated time in units of 1/gamma_1");
    s->add_flag("--keep-carrier", sim.keep_carrier, "Do not cancel the reflected pump before the PSD");

    ThresholdArgs th;
    auto* t = app.add_subcommand("threshold", "Instability threshold versus detuning (CSV)");
    t->add_option("--detuning", th.detuning, "lo:hi:n in units of omega_m1")->required();
    t->add_flag("--per-mode", th.per_mode, "Also compute the single-mode thresholds");
    t->add_option("--out", th.out, "Output file (default: stdout)");
    t->add_option("--threads", th.threads, "Worker threads (0: OpenMP default)");

    SweepArgs sw;
    auto* w = app.add_subcommand("sweep", "Detuning x power map");
    w->add_option("--detuning", sw.detuning, "lo:hi:n in units of omega_m1");
    w->add_option("--power", sw.power, "lo:hi:n in dBm");
    w->add_option("--out", sw.out, "Output directory");
    w->add_option("--threads", sw.threads, "Worker threads (0: OpenMP default)");
    w->add_option("--format", sw.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));

    ClassifyArgs cl;
    auto* c = app.add_subcommand("classify", "Classify an external tooth list");
    c->add_option("--teeth", cl.teeth, "JSON tooth list")->required();
    c->add_option("--fm1", cl.fm1, "Mode-1 frequency (Hz, or with kHz/MHz suffix)")->required();
    c->add_option("--fm2", cl.fm2, "Mode-2 frequency")->required();
    c->add_option("--tol", cl.tol, "Assignment tolerance (default 1e-3 fm1)");
    c->add_option("--kmax", cl.kmax, "Lattice search bound");
    c->add_option("--out", cl.out, "Output file (default: stdout)");

    AnalyticArgs an;
    auto* b = app.add_subcommand("analytic", "Bessel comb of a prescribed mechanical cycle");
    b->add_option("--detuning", an.detuning, "delta_dc / omega_m1");
    b->add_option("--power", an.power, "Pump power in dBm (before attenuation)");
    b->add_option("--beta", an.beta, "Modulation index 2 g |B| / omega_m");
    b->add_option("--mode", an.mode, "Mechanical mode (1 or 2)");
    b->add_option("--kmax", an.kmax, "Highest tooth order (default: automatic)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*s) return cmd_simulate(g, sim, out, err);
        if (*t) return cmd_threshold(g, th, out);
        if (*w) return cmd_sweep(g, sw, out);
        if (*c) return cmd_classify(cl, out);
        if (*b) return cmd_analytic(g, an, out);
    } catch (const Error& e) {
        err << "emcomb: " << e.code() << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    }
    return kExitUsage;
}

}  // namespace emcomb
