#include "emcomb/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "emcomb/errors.hpp"
#include "emcomb/parallel.hpp"
#include "emcomb/spectral.hpp"
#include "emcomb/units.hpp"

namespace emcomb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

bool PointResult::same_data(const PointResult& o, bool with_teeth) const {
    bool eq = same(delta_over_omega1, o.delta_over_omega1) && same(p_d_dbm, o.p_d_dbm) && regime == o.regime &&
              same(dominant_spacing_hz, o.dominant_spacing_hz) && same(max_growth_per_s, o.max_growth_per_s) &&
              branch == o.branch && attractor == o.attractor && error == o.error;
    if (!eq || !with_teeth) return eq;
    for (int j = 0; j < kModes; ++j) {
        eq = eq && same(mech_oscillation[j], o.mech_oscillation[j]) && same(lattice_hz[j], o.lattice_hz[j]);
    }
    if (!eq || teeth.size() != o.teeth.size()) return false;
    for (std::size_t i = 0; i < teeth.size(); ++i) {
        const auto& x = teeth[i];
        const auto& y = o.teeth[i];
        if (!(same(x.tooth.freq, y.tooth.freq) && same(x.tooth.detuning, y.tooth.detuning) &&
              same(x.tooth.power_dbm, y.tooth.power_dbm) && x.k1 == y.k1 && x.k2 == y.k2 &&
              same(x.residual, y.residual) && x.order == y.order && x.assigned == y.assigned)) {
            return false;
        }
    }
    return true;
}

PointDetail simulate_point(const SweepPlan& plan, double delta_over_omega1, double p_dbm) {
    const auto start = std::chrono::steady_clock::now();
    PointDetail d;
    PointResult& r = d.result;
    r.delta_over_omega1 = delta_over_omega1;
    r.p_d_dbm = p_dbm - plan.attenuation_db;
    r.max_growth_per_s = kNaN;
    r.mech_oscillation = {kNaN, kNaN};
    r.lattice_hz = {kNaN, kNaN};
    const SystemParams& params = plan.params;
    try {
        const auto pump = PumpCondition::from_detuning_dbm(params, delta_over_omega1 * params.modes[0].omega, r.p_d_dbm);
        const StabilityReport st = analyze(params, pump);
        r.max_growth_per_s = st.max_growth;
        r.branch = st.dominant_mode;

        const double g1 = params.modes[0].gamma;
        SettleCriteria crit;
        crit.tol = plan.tol;
        crit.max_steps = plan.max_steps;
        const double rate = std::abs(st.max_growth);
        const double horizon = rate > 0.0 ? plan.budget / rate : plan.max_horizon / g1;
        crit.max_horizon = std::clamp(horizon, plan.min_horizon / g1, plan.max_horizon / g1);
        d.settled = settle(params, pump, seeded_initial_state(params, pump), crit);
        const SettleResult& s = *d.settled;
        r.attractor = s.report.kind;
        r.mech_oscillation = s.report.mech_oscillation;

        PsdOptions po;
        po.threads = 1;  // the sweep already parallelizes over points
        d.spectrum = output_spectrum(s.trajectory, plan.classifier.subtract_carrier, po);
        TeethOptions to;
        to.margin_db = plan.classifier.margin_db;
        to.dynamic_range_db = plan.classifier.dynamic_range_db;
        d.teeth = find_teeth(*d.spectrum, to);
        for (int j = 0; j < kModes; ++j) {
            r.lattice_hz[j] = plan.classifier.measured_frequencies ? oscillation_frequency(s.trajectory, j)
                                                                   : units::rad_to_hz(params.modes[j].omega);
        }
        const double tol = plan.classifier.tol_hz > 0.0 ? plan.classifier.tol_hz
                                                        : default_tolerance(d.spectrum->rbw, r.lattice_hz[0]);
        d.classification = classify(d.teeth, r.lattice_hz[0], r.lattice_hz[1], tol, plan.classifier.kmax);
        r.regime = d.classification->regime;
        r.dominant_spacing_hz = d.classification->dominant_spacing;
        r.teeth = d.classification->assignments;
    } catch (const Error& e) {
        r.error = e.code();
        d.message = e.what();
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return d;
}

PointResult run_point(const SweepPlan& plan, double delta_over_omega1, double p_dbm) {
    return simulate_point(plan, delta_over_omega1, p_dbm).result;
}

namespace {

SweepResult prepare(const SweepPlan& plan) {
    plan.validate();
    SweepResult r;
    r.preset = plan.preset;
    r.config_hash = plan.config_hash();
    r.config = plan.effective_config();
    r.points.resize(plan.detunings.size() * plan.powers_dbm.size());
    return r;
}

std::vector<double> detunings_rad(const SweepPlan& plan) {
    std::vector<double> d;
    for (double x : plan.detunings) d.push_back(x * plan.params.modes[0].omega);
    return d;
}

ThresholdCurveOptions threshold_options(int threads) {
    ThresholdCurveOptions o;
    o.per_mode = true;
    o.threads = threads;
    return o;
}

}  // namespace

SweepResult run_sweep(const SweepPlan& plan) {
    SweepResult r = prepare(plan);
    const std::size_t np = plan.powers_dbm.size();
    const auto n = static_cast<long>(r.points.size());
    const int threads = resolve_threads(plan.threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads != 1)
    for (long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        r.points[k] = run_point(plan, plan.detunings[k / np], plan.powers_dbm[k % np]);
    }
    r.thresholds = threshold_curve(plan.params, detunings_rad(plan), threshold_options(threads));
    return r;
}

SweepResult run_sweep_serial(const SweepPlan& plan) {
    SweepResult r = prepare(plan);
    const std::size_t np = plan.powers_dbm.size();
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        r.points[k] = run_point(plan, plan.detunings[k / np], plan.powers_dbm[k % np]);
    }
    r.thresholds = threshold_curve_serial(plan.params, detunings_rad(plan), threshold_options(1));
    return r;
}

// ---------------------------------------------------------------- CSV

namespace {

const char* kCsvColumns =
    "delta_dc_over_omega_m1,p_d_dbm,regime,dominant_spacing_hz,max_growth_per_s,attractor,branch,error";

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_num(const std::string& s) {
    if (s == "nan") return kNaN;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw ConfigError("map: bad number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("map: bad number '" + s + "'");
    }
}

}  // namespace

void write_map_csv(std::ostream& os, const SweepResult& r) {
    os << artifact_header(r.preset, r.config_hash, r.config) << kCsvColumns << '\n';
    for (const auto& p : r.points) {
        os << num(p.delta_over_omega1) << ',' << num(p.p_d_dbm) << ',' << (p.regime ? to_string(*p.regime) : "none")
           << ',' << num(p.dominant_spacing_hz) << ',' << num(p.max_growth_per_s) << ','
           << (p.attractor ? to_string(*p.attractor) : "none") << ',' << (p.branch ? to_string(*p.branch) : "none")
           << ',' << (p.error.empty() ? "ok" : p.error) << '\n';
    }
}

SweepResult read_map_csv(std::istream& is) {
    SweepResult r;
    std::string line;
    bool have_columns = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(": ");
            if (colon == std::string::npos) continue;
            const std::string key = line.substr(2, colon - 2);
            const std::string value = line.substr(colon + 2);
            if (key == "format_version" && value != std::to_string(kFormatVersion)) {
                throw ConfigError("map: unsupported format_version " + value);
            }
            if (key == "preset") r.preset = value;
            if (key == "config_hash") r.config_hash = value;
            if (key == "config") r.config = nlohmann::ordered_json::parse(value);
            continue;
        }
        if (!have_columns) {
            if (line != kCsvColumns) throw ConfigError("map: unexpected column header '" + line + "'");
            have_columns = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw ConfigError("map: expected 8 fields in '" + line + "'");
        PointResult p;
        p.delta_over_omega1 = parse_num(f[0]);
        p.p_d_dbm = parse_num(f[1]);
        if (f[2] != "none") p.regime = regime_from_string(f[2]);
        p.dominant_spacing_hz = parse_num(f[3]);
        p.max_growth_per_s = parse_num(f[4]);
        if (f[5] != "none") p.attractor = attractor_from_string(f[5]);
        if (f[6] != "none") p.branch = dominant_mode_from_string(f[6]);
        p.error = f[7] == "ok" ? "" : f[7];
        r.points.push_back(std::move(p));
    }
    return r;
}

// ---------------------------------------------------------------- JSON

namespace {

using json = nlohmann::ordered_json;

json jnum(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
double from_jnum(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json jvec(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}
std::vector<double> from_jvec(const json& j) {
    std::vector<double> v;
    for (const auto& x : j) v.push_back(from_jnum(x));
    return v;
}

}  // namespace

void write_map_json(std::ostream& os, const SweepResult& r) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["preset"] = r.preset;
    doc["code_version"] = std::string(code_version());
    doc["config_hash"] = r.config_hash;
    doc["config"] = r.config;
    json pts = json::array();
    for (const auto& p : r.points) {
        json teeth = json::array();
        for (const auto& a : p.teeth) {
            teeth.push_back({{"freq_hz", a.tooth.freq},
                             {"detuning_hz", a.tooth.detuning},
                             {"power_dbm", a.tooth.power_dbm},
                             {"assigned", a.assigned},
                             {"k1", a.k1},
                             {"k2", a.k2},
                             {"order", a.order},
                             {"residual_hz", a.residual}});
        }
        pts.push_back({{"delta_dc_over_omega_m1", jnum(p.delta_over_omega1)},
                       {"p_d_dbm", jnum(p.p_d_dbm)},
                       {"regime", p.regime ? json(to_string(*p.regime)) : json(nullptr)},
                       {"dominant_spacing_hz", jnum(p.dominant_spacing_hz)},
                       {"max_growth_per_s", jnum(p.max_growth_per_s)},
                       {"attractor", p.attractor ? json(to_string(*p.attractor)) : json(nullptr)},
                       {"branch", p.branch ? json(to_string(*p.branch)) : json(nullptr)},
                       {"error", p.error.empty() ? json(nullptr) : json(p.error)},
                       {"mech_oscillation", {jnum(p.mech_oscillation[0]), jnum(p.mech_oscillation[1])}},
                       {"lattice_hz", {jnum(p.lattice_hz[0]), jnum(p.lattice_hz[1])}},
                       {"teeth", teeth}});
    }
    doc["points"] = pts;
    const auto& t = r.thresholds;
    std::vector<double> det_hz;
    for (double d : t.detunings) det_hz.push_back(units::rad_to_hz(d));
    json branch = json::array();
    for (std::size_t i = 0; i < t.branch.size(); ++i) {
        branch.push_back(std::isnan(t.threshold_dbm[i]) ? json(nullptr) : json(to_string(t.branch[i])));
    }
    doc["thresholds"] = {{"delta_dc_hz", jvec(det_hz)},
                         {"threshold_dbm", jvec(t.threshold_dbm)},
                         {"branch", branch},
                         {"mode1_dbm", jvec(t.mode1_dbm)},
                         {"mode2_dbm", jvec(t.mode2_dbm)}};
    std::vector<double> wall;
    for (const auto& p : r.points) wall.push_back(p.wall_seconds);
    doc["timing"] = {{"wall_seconds", wall}};
    os << doc.dump(1) << '\n';
}

SweepResult read_map_json(std::istream& is) {
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("map: ") + e.what());
    }
    SweepResult r;
    try {
        if (doc.at("format_version").get<int>() != kFormatVersion) throw ConfigError("map: unsupported format_version");
        r.preset = doc.at("preset").get<std::string>();
        r.config_hash = doc.at("config_hash").get<std::string>();
        r.config = doc.at("config");
        const auto& wall = doc.contains("timing") ? doc["timing"].at("wall_seconds") : json::array();
        std::size_t idx = 0;
        for (const auto& j : doc.at("points")) {
            PointResult p;
            p.delta_over_omega1 = from_jnum(j.at("delta_dc_over_omega_m1"));
            p.p_d_dbm = from_jnum(j.at("p_d_dbm"));
            if (!j.at("regime").is_null()) p.regime = regime_from_string(j["regime"].get<std::string>());
            p.dominant_spacing_hz = from_jnum(j.at("dominant_spacing_hz"));
            p.max_growth_per_s = from_jnum(j.at("max_growth_per_s"));
            if (!j.at("attractor").is_null()) p.attractor = attractor_from_string(j["attractor"].get<std::string>());
            if (!j.at("branch").is_null()) p.branch = dominant_mode_from_string(j["branch"].get<std::string>());
            if (!j.at("error").is_null()) p.error = j["error"].get<std::string>();
            for (int m = 0; m < kModes; ++m) {
                p.mech_oscillation[m] = from_jnum(j.at("mech_oscillation").at(m));
                p.lattice_hz[m] = from_jnum(j.at("lattice_hz").at(m));
            }
            for (const auto& t : j.at("teeth")) {
                LatticeAssignment a;
                a.tooth.freq = t.at("freq_hz").get<double>();
                a.tooth.detuning = t.at("detuning_hz").get<double>();
                a.tooth.power_dbm = t.at("power_dbm").get<double>();
                a.assigned = t.at("assigned").get<bool>();
                a.k1 = t.at("k1").get<int>();
                a.k2 = t.at("k2").get<int>();
                a.order = t.at("order").get<int>();
                a.residual = t.at("residual_hz").get<double>();
                p.teeth.push_back(a);
            }
            if (idx < wall.size()) p.wall_seconds = wall[idx].get<double>();
            ++idx;
            r.points.push_back(std::move(p));
        }
        const auto& t = doc.at("thresholds");
        for (double hz : from_jvec(t.at("delta_dc_hz"))) r.thresholds.detunings.push_back(units::hz_to_rad(hz));
        r.thresholds.threshold_dbm = from_jvec(t.at("threshold_dbm"));
        for (const auto& b : t.at("branch")) {
            r.thresholds.branch.push_back(b.is_null() ? DominantMode::Cavity
                                                      : dominant_mode_from_string(b.get<std::string>()));
        }
        r.thresholds.mode1_dbm = from_jvec(t.at("mode1_dbm"));
        r.thresholds.mode2_dbm = from_jvec(t.at("mode2_dbm"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("map: ") + e.what());
    }
    return r;
}

void export_map(const SweepResult& r, const std::string& path, MapFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    if (format == MapFormat::Csv) {
        write_map_csv(out, r);
    } else {
        write_map_json(out, r);
    }
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace emcomb
