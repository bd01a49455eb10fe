#include "emcomb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "emcomb/errors.hpp"
#include "emcomb/fft.hpp"
#include "emcomb/parallel.hpp"
#include "emcomb/units.hpp"

namespace emcomb {

std::vector<cdouble> output_field(const Trajectory& traj, bool subtract_carrier) {
    const auto& tail = traj.tail;
    if (tail.samples.empty() || !(tail.sample_rate > 0.0)) {
        throw InsufficientDataError("output_field: trajectory has no uniform tail (resampling required)");
    }
    const double root_ke = std::sqrt(traj.params.kappa_e);
    std::vector<cdouble> out(tail.samples.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = traj.pump.s_in - root_ke * tail.samples[k].a;
    if (subtract_carrier) {
        cdouble mean{};
        for (const auto& v : out) mean += v;
        mean /= static_cast<double>(out.size());
        for (auto& v : out) v -= mean;
    }
    return out;
}

namespace {

constexpr double kMinWattsPerHz = 1e-300;

struct Layout {
    std::size_t length = 0;
    std::size_t hop = 0;
    std::size_t segments = 0;
};

Layout layout(std::size_t n, std::size_t segments) {
    if (segments < 4) throw InsufficientDataError("psd: at least 4 segments are required");
    Layout l;
    l.segments = segments;
    l.hop = n / (segments + 1);
    l.length = 2 * l.hop;
    if (l.length < 4096) {
        std::ostringstream os;
        os << "psd: " << n << " samples give segments of " << l.length << " for " << segments
           << " segments; need >= 4096 each";
        throw InsufficientDataError(os.str());
    }
    return l;
}

std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
    return w;
}

void segment_power(std::span<const cdouble> series, const Layout& l, const std::vector<double>& w, std::size_t s,
                   std::vector<double>& out) {
    std::vector<cdouble> buf(l.length);
    const std::size_t start = s * l.hop;
    for (std::size_t k = 0; k < l.length; ++k) buf[k] = series[start + k] * w[k];
    fft::transform(buf, +1);
    out.resize(l.length);
    for (std::size_t k = 0; k < l.length; ++k) out[k] = std::norm(buf[k]);
}

Spectrum assemble(const std::vector<std::vector<double>>& power, const Layout& l, const std::vector<double>& w,
                  double sample_rate, double omega_d) {
    double w2 = 0.0;
    for (double v : w) w2 += v * v;
    const double photon_energy = units::kHbar * omega_d;
    const double scale = photon_energy / (sample_rate * w2 * static_cast<double>(l.segments));

    Spectrum sp;
    sp.ref = units::rad_to_hz(omega_d);
    sp.bin = sample_rate / static_cast<double>(l.length);
    sp.rbw = sp.bin * kHannEnbw;
    sp.segments = l.segments;
    sp.segment_length = l.length;
    sp.freqs.resize(l.length);
    sp.psd.resize(l.length);
    const std::size_t half = l.length / 2;
    for (std::size_t i = 0; i < l.length; ++i) {
        // Output index i holds offset (i - half) bins; FFT index wraps.
        const std::size_t k = (i + half) % l.length;
        double acc = 0.0;
        for (const auto& p : power) acc += p[k];  // fixed order: deterministic
        sp.freqs[i] = sp.ref + (static_cast<double>(i) - static_cast<double>(half)) * sp.bin;
        sp.psd[i] = units::watts_to_dbm(std::max(acc * scale, kMinWattsPerHz));
    }
    return sp;
}

void check_series(std::span<const cdouble> series, double sample_rate) {
    if (!(sample_rate > 0.0)) throw ConfigError("psd: sample rate must be > 0");
    for (const auto& v : series) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InvalidStateError("psd: non-finite sample");
    }
}

}  // namespace

Spectrum psd(std::span<const cdouble> series, double sample_rate, double omega_d, const PsdOptions& options) {
    const Layout l = layout(series.size(), options.segments);
    check_series(series, sample_rate);
    const auto w = hann(l.length);
    std::vector<std::vector<double>> power(l.segments);
    const auto n = static_cast<long>(l.segments);
    const int threads = resolve_threads(options.threads);
#pragma omp parallel for schedule(static) num_threads(threads) if (threads != 1)
    for (long s = 0; s < n; ++s) {
        segment_power(series, l, w, static_cast<std::size_t>(s), power[static_cast<std::size_t>(s)]);
    }
    return assemble(power, l, w, sample_rate, omega_d);
}

Spectrum psd_serial(std::span<const cdouble> series, double sample_rate, double omega_d, std::size_t segments) {
    const Layout l = layout(series.size(), segments);
    check_series(series, sample_rate);
    const auto w = hann(l.length);
    std::vector<std::vector<double>> power(l.segments);
    for (std::size_t s = 0; s < l.segments; ++s) segment_power(series, l, w, s, power[s]);
    return assemble(power, l, w, sample_rate, omega_d);
}

Spectrum output_spectrum(const Trajectory& traj, bool subtract_carrier, const PsdOptions& options) {
    const auto field = output_field(traj, subtract_carrier);
    Spectrum sp = psd(field, traj.tail.sample_rate, traj.pump.omega_d, options);
    sp.pump_dbm = traj.pump.p_d_dbm;
    return sp;
}

namespace {

std::size_t half_span_bins(const Spectrum& spec) {
    return static_cast<std::size_t>(std::ceil(2.0 * spec.rbw / spec.bin - 1e-9));
}

double integrate_bins(const std::vector<double>& lin, std::size_t centre, std::size_t h, double bin) {
    const std::size_t lo = centre >= h ? centre - h : 0;
    const std::size_t hi = std::min(lin.size() - 1, centre + h);
    double acc = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) acc += lin[i];
    return acc * bin;
}

std::vector<double> to_linear(const std::vector<double>& psd_dbm) {
    std::vector<double> lin(psd_dbm.size());
    for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = std::pow(10.0, psd_dbm[i] / 10.0);  // mW/Hz
    return lin;
}

}  // namespace

double integrated_power_dbm(const Spectrum& spec, double freq) {
    if (spec.psd.empty()) throw InsufficientDataError("integrated_power_dbm: empty spectrum");
    const double pos = std::round((freq - spec.freqs.front()) / spec.bin);
    const auto centre = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(spec.psd.size() - 1)));
    const double mw = integrate_bins(to_linear(spec.psd), centre, half_span_bins(spec), spec.bin);
    return 10.0 * std::log10(mw);
}

std::vector<Tooth> find_teeth(const Spectrum& spec, const TeethOptions& options) {
    if (!(options.margin_db >= 6.0)) throw ConfigError("find_teeth: margin_db must be >= 6");
    const std::size_t n = spec.psd.size();
    const std::size_t h = std::max<std::size_t>(1, half_span_bins(spec));
    if (n < 2 * h + 3) return {};
    const auto lin = to_linear(spec.psd);

    struct Candidate {
        std::size_t i;
        double power_dbm;
    };
    std::vector<Candidate> cands;
    std::vector<double> window;
    for (std::size_t i = h; i + h < n; ++i) {
        bool peak = true;
        for (std::size_t d = 1; d <= h && peak; ++d) peak = lin[i] > lin[i - d] && lin[i] >= lin[i + d];
        if (!peak) continue;
        const std::size_t lo = i >= options.floor_halfwidth ? i - options.floor_halfwidth : 0;
        const std::size_t hi = std::min(n, i + options.floor_halfwidth + 1);
        window.assign(spec.psd.begin() + static_cast<long>(lo), spec.psd.begin() + static_cast<long>(hi));
        auto mid = window.begin() + static_cast<long>(window.size() / 2);
        std::nth_element(window.begin(), mid, window.end());
        if (spec.psd[i] - *mid < options.margin_db) continue;
        cands.push_back({i, 10.0 * std::log10(integrate_bins(lin, i, h, spec.bin))});
    }
    if (cands.empty()) return {};

    double ref = spec.pump_dbm;
    if (!std::isfinite(ref)) {
        ref = std::max_element(cands.begin(), cands.end(), [](auto& a, auto& b) { return a.power_dbm < b.power_dbm; })
                  ->power_dbm;
    }
    std::vector<Tooth> teeth;
    for (const auto& c : cands) {
        if (c.power_dbm < ref - options.dynamic_range_db) continue;
        const double l = spec.psd[c.i - 1], m = spec.psd[c.i], r = spec.psd[c.i + 1];
        const double den = l - 2.0 * m + r;
        const double off = den < 0.0 ? std::clamp(0.5 * (l - r) / den, -0.5, 0.5) : 0.0;
        Tooth t;
        t.freq = spec.freqs[c.i] + off * spec.bin;
        t.power_dbm = c.power_dbm;
        t.detuning = t.freq - spec.ref;
        teeth.push_back(t);
    }
    return teeth;
}

double oscillation_frequency(const Trajectory& traj, int mode) {
    if (mode < 0 || mode >= kModes) throw ConfigError("oscillation_frequency: mode must be 0 or 1");
    const double bare = units::rad_to_hz(traj.params.modes[mode].omega);
    const auto& tail = traj.tail.samples;
    const std::size_t n = tail.size();
    if (n < 1024) return bare;
    cdouble mean{};
    for (const auto& s : tail) mean += s.b[mode];
    mean /= static_cast<double>(n);
    const auto w = hann(n);
    std::vector<cdouble> buf(n);
    for (std::size_t k = 0; k < n; ++k) buf[k] = (tail[k].b[mode] - mean) * w[k];
    fft::transform(buf, +1);

    const double bin = traj.tail.sample_rate / static_cast<double>(n);
    const auto lo = static_cast<std::size_t>(std::ceil(0.9 * bare / bin));
    const auto hi = static_cast<std::size_t>(std::floor(1.1 * bare / bin));
    if (lo < 1 || hi + 1 >= n / 2 || hi <= lo) return bare;
    std::vector<double> pw(hi - lo + 1);
    for (std::size_t k = lo; k <= hi; ++k) pw[k - lo] = std::norm(buf[k]);
    // Interior local maxima only: leakage from a strong line outside the
    // window rises monotonically towards one edge.
    std::size_t peak = 0;
    double top = 0.0;
    for (std::size_t k = lo + 3; k + 3 <= hi; ++k) {
        const double v = pw[k - lo];
        bool is_peak = v > top;
        for (std::size_t d = 1; d <= 3 && is_peak; ++d) is_peak = v > pw[k - d - lo] && v >= pw[k + d - lo];
        if (is_peak) {
            peak = k;
            top = v;
        }
    }
    if (peak == 0) return bare;
    std::nth_element(pw.begin(), pw.begin() + static_cast<long>(pw.size() / 2), pw.end());
    const double med = pw[pw.size() / 2];
    if (!(top > 100.0 * med) || top == 0.0) return bare;
    const double l = std::log(std::norm(buf[peak - 1]) + 1e-300), c = std::log(top),
                 r = std::log(std::norm(buf[peak + 1]) + 1e-300);
    const double den = l - 2.0 * c + r;
    const double off = den < 0.0 ? std::clamp(0.5 * (l - r) / den, -0.5, 0.5) : 0.0;
    return (static_cast<double>(peak) + off) * bin;
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spec, const std::string& header) {
    os << header << "freq_hz,psd_dbm_per_hz\n";
    os.precision(15);
    for (std::size_t i = 0; i < spec.psd.size(); ++i) os << spec.freqs[i] << ',' << spec.psd[i] << '\n';
}

void write_teeth_json(std::ostream& os, const std::vector<Tooth>& teeth) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : teeth) {
        arr.push_back({{"freq_hz", t.freq}, {"power_dbm", t.power_dbm}, {"detuning_hz", t.detuning}});
    }
    os << arr.dump(2) << '\n';
}

std::vector<Tooth> read_teeth_json(std::istream& is) {
    nlohmann::json doc;
    try {
        is >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tooth list: ") + e.what());
    }
    double ref = 0.0;
    bool have_ref = false;
    if (doc.is_object()) {
        if (doc.contains("ref_hz")) {
            ref = doc.at("ref_hz").get<double>();
            have_ref = true;
        }
        if (!doc.contains("teeth")) throw ConfigError("tooth list: object without a 'teeth' array");
        doc = doc.at("teeth");
    }
    if (!doc.is_array()) throw ConfigError("tooth list: expected an array of teeth");
    std::vector<Tooth> out;
    for (const auto& rec : doc) {
        if (!rec.is_object()) throw ConfigError("tooth list: every entry must be an object");
        Tooth t;
        const bool has_f = rec.contains("freq_hz");
        const bool has_d = rec.contains("detuning_hz");
        if (!has_f && !has_d) throw ConfigError("tooth list: entry needs freq_hz or detuning_hz");
        try {
            if (has_d) t.detuning = rec.at("detuning_hz").get<double>();
            if (has_f) t.freq = rec.at("freq_hz").get<double>();
            if (!has_d) {
                if (!have_ref) throw ConfigError("tooth list: freq_hz without detuning_hz needs a top-level ref_hz");
                t.detuning = t.freq - ref;
            }
            if (!has_f) t.freq = (have_ref ? ref : 0.0) + t.detuning;
            t.power_dbm = rec.value("power_dbm", 0.0);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("tooth list: ") + e.what());
        }
        out.push_back(t);
    }
    std::sort(out.begin(), out.end(), [](const Tooth& a, const Tooth& b) { return a.detuning < b.detuning; });
    return out;
}

}  // namespace emcomb
