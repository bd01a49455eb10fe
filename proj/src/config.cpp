#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "emcomb/errors.hpp"
#include "emcomb/sweep.hpp"
#include "emcomb/units.hpp"

#ifndef EMCOMB_VERSION
#define EMCOMB_VERSION "0.0.0"
#endif

namespace emcomb {

std::string_view code_version() { return EMCOMB_VERSION; }

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

double parse_number(std::string_view text, const std::string& what) {
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigError("cannot parse " + what + " '" + t + "'");
    }
    if (used != t.size()) throw ConfigError("trailing characters in " + what + " '" + t + "'");
    return v;
}

}  // namespace

double parse_frequency_hz(std::string_view text) {
    std::string t = trim(text);
    double scale = 1.0;
    std::string lower;
    for (char c : t) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    struct Suffix {
        const char* s;
        double f;
    };
    for (auto [s, f] : {Suffix{"ghz", 1e9}, Suffix{"mhz", 1e6}, Suffix{"khz", 1e3}, Suffix{"hz", 1.0}}) {
        const std::string_view sv(s);
        if (lower.size() >= sv.size() && lower.compare(lower.size() - sv.size(), sv.size(), sv) == 0) {
            t = t.substr(0, t.size() - sv.size());
            scale = f;
            break;
        }
    }
    const double v = parse_number(t, "frequency") * scale;
    if (!std::isfinite(v)) throw ConfigError("frequency must be finite: '" + std::string(text) + "'");
    return v;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) throw ConfigError("range needs at least one point");
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    return v;
}

std::vector<double> parse_range(std::string_view text) {
    const std::string t = trim(text);
    const auto c1 = t.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : t.find(':', c1 + 1);
    if (c2 == std::string::npos || t.find(':', c2 + 1) != std::string::npos) {
        throw ConfigError("range must look like lo:hi:n, got '" + t + "'");
    }
    const double lo = parse_number(t.substr(0, c1), "range start");
    const double hi = parse_number(t.substr(c1 + 1, c2 - c1 - 1), "range end");
    const double n = parse_number(t.substr(c2 + 1), "range count");
    if (!(n >= 1.0) || n != std::floor(n) || n > 1e6) throw ConfigError("range count must be a positive integer");
    return linspace(lo, hi, static_cast<std::size_t>(n));
}

std::vector<double> step_range(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("step range needs step > 0 and stop >= start");
    const double n = std::floor((hi - lo) / step + 1e-9);
    if (n > 1e6) throw ConfigError("step range too long");
    std::vector<double> v;
    for (long k = 0; k <= static_cast<long>(n); ++k) v.push_back(lo + static_cast<double>(k) * step);
    return v;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void SweepPlan::validate() const {
    params.validate(false, false);
    if (detunings.empty()) throw ConfigError("sweep plan: detuning grid is empty");
    if (powers_dbm.empty()) throw ConfigError("sweep plan: power grid is empty");
    for (double d : detunings) {
        if (!std::isfinite(d)) throw ConfigError("sweep plan: non-finite detuning");
    }
    for (double p : powers_dbm) {
        if (!std::isfinite(p)) throw ConfigError("sweep plan: non-finite power");
    }
    if (!(budget > 0.0) || !(min_horizon > 0.0) || !(max_horizon >= min_horizon)) {
        throw ConfigError("sweep plan: budget and horizons must be positive with max_horizon >= min_horizon");
    }
    if (!(tol >= 1e-12 && tol <= 1e-3)) throw ConfigError("sweep plan: tol must lie in [1e-12, 1e-3]");
    if (max_steps == 0) throw ConfigError("sweep plan: max_steps must be positive");
    if (!std::isfinite(attenuation_db)) throw ConfigError("sweep plan: attenuation must be finite");
    const auto& c = classifier;
    if (!(c.margin_db >= 6.0)) throw ConfigError("classifier: margin_db must be >= 6");
    if (!(c.dynamic_range_db > 0.0)) throw ConfigError("classifier: dynamic_range_db must be > 0");
    if (c.kmax < 1 || c.kmax > 64) throw ConfigError("classifier: kmax must lie in [1, 64]");
    if (!(c.tol_hz >= 0.0)) throw ConfigError("classifier: tol must be >= 0");
}

nlohmann::ordered_json SweepPlan::effective_config() const {
    using units::rad_to_hz;
    auto mode = [](const MechanicalMode& m) {
        return nlohmann::ordered_json{
            {"frequency_hz", rad_to_hz(m.omega)}, {"gamma_hz", rad_to_hz(m.gamma)}, {"g_hz", rad_to_hz(m.g)}};
    };
    nlohmann::ordered_json j;
    j["preset"] = preset;
    j["device"] = {{"cavity_frequency_hz", rad_to_hz(params.omega_c)},
                   {"kappa_hz", rad_to_hz(params.kappa)},
                   {"kappa_e_hz", rad_to_hz(params.kappa_e)},
                   {"mode1", mode(params.modes[0])},
                   {"mode2", mode(params.modes[1])}};
    j["attenuation_db"] = attenuation_db;
    j["detunings"] = detunings;
    j["powers_dbm"] = powers_dbm;
    j["budget"] = budget;
    j["min_horizon"] = min_horizon;
    j["max_horizon"] = max_horizon;
    j["tol"] = tol;
    j["max_steps"] = max_steps;
    j["classifier"] = {{"margin_db", classifier.margin_db},
                       {"dynamic_range_db", classifier.dynamic_range_db},
                       {"kmax", classifier.kmax},
                       {"tol_hz", classifier.tol_hz},
                       {"subtract_carrier", classifier.subtract_carrier},
                       {"measured_frequencies", classifier.measured_frequencies}};
    return j;
}

std::string SweepPlan::config_hash() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(effective_config().dump())));
    return buf;
}

SweepPlan plan_from_preset(const std::string& preset_name) {
    SweepPlan p;
    p.preset = preset_name;
    p.params = preset(preset_name).params;
    return p;
}

namespace {

using units::hz_to_rad;

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) throw ConfigError("config: '" + where + "' must be a mapping");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
}

double frequency(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) throw ConfigError("config: " + where + " must be a scalar frequency");
    return parse_frequency_hz(n.Scalar());
}

double number(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) throw ConfigError("config: " + where + " must be a number");
    return parse_number(n.Scalar(), where);
}

bool boolean(const YAML::Node& n, const std::string& where) {
    try {
        return n.as<bool>();
    } catch (const YAML::Exception&) {
        throw ConfigError("config: " + where + " must be true or false");
    }
}

// A list, "lo:hi:n", or {start, stop, count | step}.
std::vector<double> grid(const YAML::Node& n, const std::string& where) {
    if (n.IsSequence()) {
        std::vector<double> v;
        for (const auto& e : n) v.push_back(number(e, where));
        if (v.empty()) throw ConfigError("config: " + where + " is empty");
        return v;
    }
    if (n.IsScalar()) {
        const std::string s = n.Scalar();
        if (s.find(':') != std::string::npos) return parse_range(s);
        return {number(n, where)};
    }
    if (n.IsMap()) {
        check_keys(n, where, {"start", "stop", "count", "step"});
        if (!n["start"] || !n["stop"]) throw ConfigError("config: " + where + " needs start and stop");
        const double lo = number(n["start"], where + ".start");
        const double hi = number(n["stop"], where + ".stop");
        if (n["count"] && n["step"]) throw ConfigError("config: " + where + " takes count or step, not both");
        if (n["count"]) {
            const double c = number(n["count"], where + ".count");
            if (!(c >= 1.0) || c != std::floor(c)) throw ConfigError("config: " + where + ".count must be >= 1");
            return linspace(lo, hi, static_cast<std::size_t>(c));
        }
        if (n["step"]) return step_range(lo, hi, number(n["step"], where + ".step"));
        throw ConfigError("config: " + where + " needs count or step");
    }
    throw ConfigError("config: " + where + " has an unsupported form");
}

void apply_mode(const YAML::Node& n, MechanicalMode& m, const std::string& where) {
    check_keys(n, where, {"frequency", "gamma", "g"});
    if (n["frequency"]) m.omega = hz_to_rad(frequency(n["frequency"], where + ".frequency"));
    if (n["gamma"]) m.gamma = hz_to_rad(frequency(n["gamma"], where + ".gamma"));
    if (n["g"]) m.g = hz_to_rad(frequency(n["g"], where + ".g"));
}

}  // namespace

SweepPlan apply_config_yaml(const SweepPlan& base, const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    SweepPlan p = base;
    if (root.IsNull()) return p;
    try {
        check_keys(root, "top level",
                   {"format_version", "preset", "device", "attenuation_db", "sweep", "classifier", "output_dir"});
        if (root["format_version"] && number(root["format_version"], "format_version") != kFormatVersion) {
            throw ConfigError("config: unsupported format_version");
        }
        if (root["preset"]) {
            const auto name = root["preset"].as<std::string>();
            p.params = preset(name).params;
            p.preset = name;
        }
        if (const auto d = root["device"]) {
            check_keys(d, "device", {"cavity_frequency", "kappa", "kappa_e", "mode1", "mode2"});
            if (d["cavity_frequency"]) p.params.omega_c = hz_to_rad(frequency(d["cavity_frequency"], "cavity_frequency"));
            if (d["kappa"]) p.params.kappa = hz_to_rad(frequency(d["kappa"], "kappa"));
            if (d["kappa_e"]) p.params.kappa_e = hz_to_rad(frequency(d["kappa_e"], "kappa_e"));
            if (d["mode1"]) apply_mode(d["mode1"], p.params.modes[0], "device.mode1");
            if (d["mode2"]) apply_mode(d["mode2"], p.params.modes[1], "device.mode2");
            p.preset += "+overrides";
        }
        if (root["attenuation_db"]) p.attenuation_db = number(root["attenuation_db"], "attenuation_db");
        if (const auto s = root["sweep"]) {
            check_keys(s, "sweep",
                       {"detuning", "power_dbm", "budget", "min_horizon", "max_horizon", "tol", "max_steps", "threads"});
            if (s["detuning"]) p.detunings = grid(s["detuning"], "sweep.detuning");
            if (s["power_dbm"]) p.powers_dbm = grid(s["power_dbm"], "sweep.power_dbm");
            if (s["budget"]) p.budget = number(s["budget"], "sweep.budget");
            if (s["min_horizon"]) p.min_horizon = number(s["min_horizon"], "sweep.min_horizon");
            if (s["max_horizon"]) p.max_horizon = number(s["max_horizon"], "sweep.max_horizon");
            if (s["tol"]) p.tol = number(s["tol"], "sweep.tol");
            if (s["max_steps"]) {
                const double v = number(s["max_steps"], "sweep.max_steps");
                if (!(v >= 1.0) || v > 1e12) throw ConfigError("config: sweep.max_steps out of range");
                p.max_steps = static_cast<std::size_t>(v);
            }
            if (s["threads"]) p.threads = static_cast<int>(number(s["threads"], "sweep.threads"));
        }
        if (const auto c = root["classifier"]) {
            check_keys(c, "classifier",
                       {"margin_db", "dynamic_range_db", "kmax", "tol", "subtract_carrier", "measured_frequencies"});
            auto& k = p.classifier;
            if (c["margin_db"]) k.margin_db = number(c["margin_db"], "classifier.margin_db");
            if (c["dynamic_range_db"]) k.dynamic_range_db = number(c["dynamic_range_db"], "classifier.dynamic_range_db");
            if (c["kmax"]) k.kmax = static_cast<int>(number(c["kmax"], "classifier.kmax"));
            if (c["tol"]) k.tol_hz = frequency(c["tol"], "classifier.tol");
            if (c["subtract_carrier"]) k.subtract_carrier = boolean(c["subtract_carrier"], "classifier.subtract_carrier");
            if (c["measured_frequencies"]) {
                k.measured_frequencies = boolean(c["measured_frequencies"], "classifier.measured_frequencies");
            }
        }
        if (root["output_dir"]) p.output_dir = root["output_dir"].as<std::string>();
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return p;
}

SweepPlan load_config_file(const SweepPlan& base, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return apply_config_yaml(base, os.str());
}

std::string artifact_header(const std::string& preset_name, const std::string& hash,
                            const nlohmann::ordered_json& config) {
    std::ostringstream os;
    os << "# format_version: " << kFormatVersion << '\n'
       << "# preset: " << preset_name << '\n'
       << "# code_version: " << code_version() << '\n'
       << "# config_hash: " << hash << '\n'
       << "# config: " << config.dump() << '\n';
    return os.str();
}

}  // namespace emcomb
