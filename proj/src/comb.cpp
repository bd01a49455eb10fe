#include "emcomb/comb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "emcomb/errors.hpp"
#include "emcomb/model.hpp"
#include "emcomb/units.hpp"

namespace emcomb {

double lattice_gap(double f1_hz, double f2_hz, int bound) {
    double gap = std::numeric_limits<double>::infinity();
    for (int m1 = -bound; m1 <= bound; ++m1) {
        for (int m2 = 0; m2 <= bound; ++m2) {
            if (m2 == 0 && m1 <= 0) continue;
            gap = std::min(gap, std::abs(m1 * f1_hz + m2 * f2_hz));
        }
    }
    return gap;
}

double default_tolerance(double rbw_hz, double f1_hz) { return std::max(3.0 * rbw_hz, 1e-3 * f1_hz); }

namespace {

bool better(double r, int k1, int k2, double best_r, int b1, int b2, double eps) {
    if (r < best_r - eps) return true;
    if (r > best_r + eps) return false;
    const int s = std::abs(k1) + std::abs(k2), bs = std::abs(b1) + std::abs(b2);
    if (s != bs) return s < bs;
    return std::abs(k2) < std::abs(b2);
}

}  // namespace

std::vector<LatticeAssignment> lattice_fit(const std::vector<Tooth>& teeth, double f1_hz, double f2_hz, double tol_hz,
                                           int kmax) {
    if (!(f1_hz > 0.0) || !(f2_hz > 0.0)) throw ConfigError("lattice_fit: mechanical frequencies must be > 0");
    if (!(tol_hz > 0.0)) throw ConfigError("lattice_fit: tolerance must be > 0");
    if (kmax < 1) throw ConfigError("lattice_fit: kmax must be >= 1");
    std::vector<LatticeAssignment> out;
    out.reserve(teeth.size());
    const double eps = 1e-9 * std::max(f1_hz, f2_hz);
    for (const auto& t : teeth) {
        LatticeAssignment a;
        a.tooth = t;
        double best = std::numeric_limits<double>::infinity();
        int within = 0;
        for (int k1 = -kmax; k1 <= kmax; ++k1) {
            for (int k2 = -kmax; k2 <= kmax; ++k2) {
                const double r = std::abs(t.detuning - (k1 * f1_hz + k2 * f2_hz));
                if (r <= tol_hz) ++within;
                if (better(r, k1, k2, best, a.k1, a.k2, eps)) {
                    best = r;
                    a.k1 = k1;
                    a.k2 = k2;
                }
            }
        }
        if (within > 1) {
            std::ostringstream os;
            os << "lattice_fit: tooth at " << t.detuning << " Hz matches " << within
               << " lattice points within " << tol_hz << " Hz (lattice gap "
               << lattice_gap(f1_hz, f2_hz, 2 * kmax) << " Hz over |k| <= " << 2 * kmax << ")";
            throw AmbiguityError(os.str());
        }
        a.residual = t.detuning - (a.k1 * f1_hz + a.k2 * f2_hz);
        a.assigned = best <= tol_hz;
        a.order = (a.k1 != 0 && a.k2 != 0) ? std::min(std::abs(a.k1), std::abs(a.k2)) : 0;
        out.push_back(a);
    }
    return out;
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::SinglePeak: return "SinglePeak";
        case Regime::Comb1: return "Comb1";
        case Regime::Comb2: return "Comb2";
        case Regime::Hybrid: return "Hybrid";
    }
    return "SinglePeak";
}

Regime regime_from_string(const std::string& s) {
    for (auto r : {Regime::SinglePeak, Regime::Comb1, Regime::Comb2, Regime::Hybrid}) {
        if (to_string(r) == s) return r;
    }
    throw ConfigError("unknown regime '" + s + "'");
}

namespace {

// Least-squares slope of tooth frequency against index.
double spacing_fit(const std::vector<std::pair<int, double>>& pts) {
    double mk = 0.0, mf = 0.0;
    for (const auto& [k, f] : pts) {
        mk += k;
        mf += f;
    }
    mk /= static_cast<double>(pts.size());
    mf /= static_cast<double>(pts.size());
    double num = 0.0, den = 0.0;
    for (const auto& [k, f] : pts) {
        num += (k - mk) * (f - mf);
        den += (k - mk) * (k - mk);
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace

CombClassification classify(const std::vector<Tooth>& teeth, double f1_hz, double f2_hz, double tol_hz, int kmax) {
    CombClassification c;
    c.assignments = lattice_fit(teeth, f1_hz, f2_hz, tol_hz, kmax);

    bool mixed = false, only1 = false, only2 = false;
    std::set<int> k1s, k2s;
    std::map<int, std::vector<std::pair<int, double>>> rows, cols;  // rows: fixed k2, cols: fixed k1
    for (const auto& a : c.assignments) {
        if (!a.assigned) {
            ++c.unassigned;
            continue;
        }
        k1s.insert(a.k1);
        k2s.insert(a.k2);
        if (a.k1 != 0 && a.k2 != 0) {
            mixed = true;
            c.mixing_orders.insert(a.order);
        }
        if (a.k1 != 0 && a.k2 == 0) only1 = true;
        if (a.k1 == 0 && a.k2 != 0) only2 = true;
        rows[a.k2].emplace_back(a.k1, a.tooth.detuning);
        cols[a.k1].emplace_back(a.k2, a.tooth.detuning);
    }

    if (mixed || (only1 && only2)) {
        c.regime = Regime::Hybrid;
    } else if (k2s.size() == 1 && *k2s.begin() == 0 && k1s.size() >= 2) {
        c.regime = Regime::Comb1;
    } else if (k1s.size() == 1 && *k1s.begin() == 0 && k2s.size() >= 2) {
        c.regime = Regime::Comb2;
    } else {
        c.regime = Regime::SinglePeak;
    }

    if (c.regime != Regime::SinglePeak) {
        const std::vector<std::pair<int, double>>* best = nullptr;
        bool best_is_row = true;
        auto consider = [&](const auto& groups, bool is_row) {
            for (const auto& [key, pts] : groups) {
                (void)key;
                if (pts.size() < 2) continue;
                if (!best || pts.size() > best->size()) {
                    best = &pts;
                    best_is_row = is_row;
                }
            }
        };
        consider(rows, true);  // mode-1 sublattices first: they win ties
        consider(cols, false);
        if (best) {
            c.dominant_spacing = spacing_fit(*best);
        } else {
            c.dominant_spacing = best_is_row ? f1_hz : f2_hz;
        }
    }
    return c;
}

void write_classification_json(std::ostream& os, const CombClassification& c) {
    nlohmann::json teeth = nlohmann::json::array();
    for (const auto& a : c.assignments) {
        nlohmann::json rec{{"freq_hz", a.tooth.freq},
                           {"detuning_hz", a.tooth.detuning},
                           {"power_dbm", a.tooth.power_dbm},
                           {"assigned", a.assigned}};
        if (a.assigned) {
            rec["k1"] = a.k1;
            rec["k2"] = a.k2;
            rec["order"] = a.order;
        } else {
            rec["k1"] = nullptr;
            rec["k2"] = nullptr;
            rec["order"] = nullptr;
        }
        rec["residual_hz"] = a.residual;
        teeth.push_back(std::move(rec));
    }
    nlohmann::json doc{{"format_version", 1},
                       {"regime", to_string(c.regime)},
                       {"dominant_spacing_hz", c.dominant_spacing},
                       {"mixing_orders_present", std::vector<int>(c.mixing_orders.begin(), c.mixing_orders.end())},
                       {"unassigned", c.unassigned},
                       {"teeth", teeth}};
    os << doc.dump(2) << '\n';
}

cdouble BesselComb::at(int k) const {
    if (k < -kmax || k > kmax) return {};
    return alpha[static_cast<std::size_t>(k + kmax)];
}

double amplitude_for_index(const SystemParams& params, int mode, double beta) {
    if (mode < 0 || mode >= kModes) throw ConfigError("mode must be 0 or 1");
    const auto& m = params.modes[mode];
    if (!(m.g > 0.0)) throw ConfigError("amplitude_for_index: mode is uncoupled");
    return beta * m.omega / (2.0 * m.g);
}

BesselComb bessel_comb(const SystemParams& params, const PumpCondition& pump, cdouble mech_amplitude, int mode,
                       int kmax) {
    if (mode < 0 || mode >= kModes) throw ConfigError("bessel_comb: mode must be 0 or 1");
    params.validate(true, false);
    const auto& mm = params.modes[mode];
    const double beta = 2.0 * mm.g * std::abs(mech_amplitude) / mm.omega;
    if (!std::isfinite(beta) || beta > 500.0) {
        throw TruncationError("bessel_comb: modulation index out of range for the series", -1);
    }
    const double phase = std::arg(mech_amplitude);

    const SystemState fp = lower_fixed_point(params, pump);
    const double d = shifted_detuning(params, pump, fp.photons());
    const double drive = std::sqrt(params.kappa_e) * pump.s_in;
    const cdouble i(0.0, 1.0);

    // |J_n(beta)| is below 1e-17 beyond this order.
    const int nmax = static_cast<int>(std::ceil(beta + 12.0 * std::cbrt(std::max(beta, 1.0)) + 25.0));
    std::vector<double> jn(static_cast<std::size_t>(2 * nmax + 1));
    for (int n = -nmax; n <= nmax; ++n) {
        const double v = std::cyl_bessel_j(static_cast<double>(std::abs(n)), beta);
        jn[static_cast<std::size_t>(n + nmax)] = (n < 0 && (n % 2 != 0)) ? -v : v;
    }
    auto J = [&](int n) { return std::abs(n) > nmax ? 0.0 : jn[static_cast<std::size_t>(n + nmax)]; };
    std::vector<cdouble> filt(static_cast<std::size_t>(2 * nmax + 1));
    for (int n = -nmax; n <= nmax; ++n) {
        filt[static_cast<std::size_t>(n + nmax)] = drive / (0.5 * params.kappa - i * (d - n * mm.omega));
    }

    const int kall = 2 * nmax;
    std::vector<cdouble> all(static_cast<std::size_t>(2 * kall + 1));
    double total = 0.0;
    for (int k = -kall; k <= kall; ++k) {
        cdouble s{};
        for (int n = -nmax; n <= nmax; ++n) {
            const double jj = J(n) * J(n + k);
            if (jj != 0.0) s += jj * filt[static_cast<std::size_t>(n + nmax)];
        }
        s *= std::polar(1.0, k * phase);
        all[static_cast<std::size_t>(k + kall)] = s;
        total += std::norm(s);
    }

    // Smallest order whose discarded tail is below 1e-10 of the total.
    int need = 0;
    {
        double tail = total;
        for (int k = 0; k <= kall; ++k) {
            tail -= std::norm(all[static_cast<std::size_t>(k + kall)]);
            if (k > 0) tail -= std::norm(all[static_cast<std::size_t>(-k + kall)]);
            need = k;
            if (total == 0.0 || tail <= 1e-10 * total) break;
        }
    }
    if (kmax < 0) {
        kmax = need;
    } else if (kmax < need) {
        std::ostringstream os;
        os << "bessel_comb: kmax " << kmax << " discards more than 1e-10 of the comb power at beta " << beta
           << "; need kmax >= " << need;
        throw TruncationError(os.str(), need);
    }

    BesselComb bc;
    bc.modulation_index = beta;
    bc.mech_freq = units::rad_to_hz(mm.omega);
    bc.kmax = kmax;
    bc.alpha.resize(static_cast<std::size_t>(2 * kmax + 1));
    for (int k = -kmax; k <= kmax; ++k) {
        bc.alpha[static_cast<std::size_t>(k + kmax)] =
            std::abs(k) <= kall ? all[static_cast<std::size_t>(k + kall)] : cdouble{};
    }
    return bc;
}

std::string to_string(Competition c) {
    switch (c) {
        case Competition::Mode1Wins: return "mode1_wins";
        case Competition::Mode2Wins: return "mode2_wins";
        case Competition::Coexist: return "coexist";
    }
    return "coexist";
}

Competition competition_outcome(const AttractorReport& report, const CombClassification& c) {
    if (report.kind == AttractorKind::Undecided) {
        throw IndeterminateOutcomeError("competition_outcome: attractor is undecided");
    }
    if (report.kind == AttractorKind::FixedPoint) {
        throw IndeterminateOutcomeError("competition_outcome: no self-sustained oscillation (fixed point)");
    }
    const double b1 = report.mech_oscillation[0];
    const double b2 = report.mech_oscillation[1];
    if (c.regime == Regime::Comb1 && b2 < 0.01 * b1) return Competition::Mode1Wins;
    if (c.regime == Regime::Comb2 && b1 < 0.01 * b2) return Competition::Mode2Wins;
    return Competition::Coexist;
}

}  // namespace emcomb
