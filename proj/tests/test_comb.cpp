#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "emcomb/comb.hpp"
#include "emcomb/dynamics.hpp"
#include "emcomb/errors.hpp"
#include "emcomb/model.hpp"
#include "emcomb/spectral.hpp"
#include "emcomb/stability.hpp"
#include "emcomb/units.hpp"
#include "support.hpp"

using namespace emcomb;
using testing::desk;

namespace {

constexpr double kF1 = 756e3;
constexpr double kF2 = 1.750e6;

Tooth at(double detuning, double power = -90.0) { return {5.31e9 + detuning, power, detuning}; }

std::vector<Tooth> teeth_at(const std::vector<double>& detunings) {
    std::vector<Tooth> out;
    for (double d : detunings) out.push_back(at(d));
    return out;
}

// Exhaustive nearest-point search with the documented tie rules.
std::pair<int, int> brute_nearest(double d, double f1, double f2, int kmax) {
    double best = INFINITY;
    std::pair<int, int> arg{0, 0};
    for (int k1 = -kmax; k1 <= kmax; ++k1) {
        for (int k2 = -kmax; k2 <= kmax; ++k2) {
            const double r = std::abs(d - (k1 * f1 + k2 * f2));
            const int s = std::abs(k1) + std::abs(k2), bs = std::abs(arg.first) + std::abs(arg.second);
            const bool take = r < best - 1e-6 ||
                              (std::abs(r - best) <= 1e-6 && (s < bs || (s == bs && std::abs(k2) < std::abs(arg.second))));
            if (take) {
                best = r;
                arg = {k1, k2};
            }
        }
    }
    return arg;
}

// Steady-state Fourier coefficients of the linear cavity driven through a
// prescribed mechanical cycle b(t) = b_static + B exp(-i w t), by RK4 over
// many periods and a rectangle-rule average over the last one.
struct CavityOracle {
    std::vector<cdouble> alpha;  // index k + kmax
    double mean_power = 0.0;     // <|a|^2> over one period
};

CavityOracle cavity_oracle(const SystemParams& p, const PumpCondition& pump, int mode, double B, int kmax) {
    const double w = p.modes[mode].omega;
    const double g = p.modes[mode].g;
    const double dt = shifted_detuning(p, pump, lower_fixed_point(p, pump).photons());
    const double drive = std::sqrt(p.kappa_e) * pump.s_in;
    const cdouble i(0.0, 1.0);
    auto f = [&](double t, cdouble a) {
        return (i * (dt - 2.0 * g * B * std::cos(w * t)) - 0.5 * p.kappa) * a + drive;
    };
    const double period = units::kTwoPi / w;
    const int per = 4096;
    const double h = period / per;
    const int settle_periods = static_cast<int>(std::ceil(60.0 / (p.kappa * period))) + 4;
    cdouble a = drive / cdouble(0.5 * p.kappa, -dt);
    double t = 0.0;
    auto step = [&] {
        const cdouble k1 = f(t, a), k2 = f(t + h / 2, a + h / 2 * k1), k3 = f(t + h / 2, a + h / 2 * k2),
                      k4 = f(t + h, a + h * k3);
        a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    for (int s = 0; s < settle_periods * per; ++s) {
        step();
        t = (s + 1) * h;
    }
    const double t0 = t;
    CavityOracle o;
    o.alpha.assign(static_cast<std::size_t>(2 * kmax + 1), {});
    for (int s = 0; s < per; ++s) {
        const double ph = w * (t - t0);
        for (int k = -kmax; k <= kmax; ++k) o.alpha[static_cast<std::size_t>(k + kmax)] += a * std::polar(1.0, k * ph);
        o.mean_power += std::norm(a);
        step();
        t = t0 + (s + 1) * h;
    }
    for (auto& v : o.alpha) v /= static_cast<double>(per);
    o.mean_power /= per;
    return o;
}

double sum_norm(const BesselComb& bc) {
    double s = 0.0;
    for (const auto& v : bc.alpha) s += std::norm(v);
    return s;
}

}  // namespace

TEST_CASE("lattice gap by enumeration") {
    auto oracle = [](double f1, double f2, int b) {
        double g = INFINITY;
        for (int m1 = -b; m1 <= b; ++m1)
            for (int m2 = -b; m2 <= b; ++m2)
                if (m1 != 0 || m2 != 0) g = std::min(g, std::abs(m1 * f1 + m2 * f2));
        return g;
    };
    for (int b : {1, 3, 6, 12}) CHECK(lattice_gap(kF1, kF2, b) == doctest::Approx(oracle(kF1, kF2, b)).epsilon(1e-12));
    CHECK(lattice_gap(kF1, kF2, 6) == doctest::Approx(238e3).epsilon(1e-9));
    CHECK(lattice_gap(kF1, kF2, 12) == doctest::Approx(42e3).epsilon(1e-9));
    CHECK(lattice_gap(1.0, 2.0, 2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("lattice fit examples") {
    const auto carrier = lattice_fit({at(0.0)}, kF1, kF2, 1e3);
    REQUIRE(carrier.size() == 1);
    CHECK(carrier[0].k1 == 0);
    CHECK(carrier[0].k2 == 0);
    CHECK(carrier[0].residual == 0.0);
    CHECK(carrier[0].assigned);

    const auto comb = lattice_fit(teeth_at({-2 * kF1, -kF1, kF1, 2 * kF1}), kF1, kF2, 1e3);
    const int want[] = {-2, -1, 1, 2};
    for (std::size_t n = 0; n < 4; ++n) {
        CHECK(comb[n].k1 == want[n]);
        CHECK(comb[n].k2 == 0);
        CHECK(comb[n].order == 0);
    }

    const auto diff = lattice_fit({at(kF2 - kF1)}, kF1, kF2, 1e3);
    CHECK(diff[0].k1 == -1);
    CHECK(diff[0].k2 == 1);
    CHECK(diff[0].order == 1);
    CHECK(std::abs(diff[0].residual) < 1e-6);
    // Only one lattice point in the box lies within 1 kHz of the tooth.
    int within = 0;
    for (int k1 = -6; k1 <= 6; ++k1)
        for (int k2 = -6; k2 <= 6; ++k2) within += std::abs(kF2 - kF1 - (k1 * kF1 + k2 * kF2)) <= 1e3;
    CHECK(within == 1);

    const auto off = lattice_fit({at(kF1 / 2.0)}, kF1, kF2, 1e3);
    CHECK_FALSE(off[0].assigned);
    CHECK(std::abs(off[0].residual) > 1e3);

    const auto outside = lattice_fit({at(7 * kF1)}, kF1, kF2, 1e3, 6);
    CHECK_FALSE(outside[0].assigned);
    CHECK(lattice_fit({at(7 * kF1)}, kF1, kF2, 1e3, 7)[0].k1 == 7);

    const auto mixed = lattice_fit({at(3 * kF2 - 2 * kF1 + 150.0)}, kF1, kF2, 1e3);
    CHECK(mixed[0].order == 2);
    CHECK(mixed[0].residual == doctest::Approx(150.0));
}

TEST_CASE("lattice fit ties and input checks") {
    // Exactly between k1 = 0 and k1 = 1: the smaller index sum wins.
    const auto mid = lattice_fit({at(500.0)}, 1000.0, 10500.0, 40.0, 3);
    CHECK(mid[0].k1 == 0);
    CHECK(mid[0].k2 == 0);
    // Between (1, 0) and (0, 1) with equal index sums: smaller |k2| wins.
    const double f1 = 1000.0, f2 = 1100.0;
    const auto tie = lattice_fit({at(1050.0)}, f1, f2, 40.0, 3);
    CHECK(tie[0].k1 == 1);
    CHECK(tie[0].k2 == 0);
    CHECK_FALSE(tie[0].assigned);
    // Both within tolerance: refuse to choose.
    CHECK_THROWS_AS((void)lattice_fit({at(1050.0)}, f1, f2, 60.0, 3), AmbiguityError);

    CHECK_THROWS_AS((void)lattice_fit({}, 0.0, kF2, 1e3), ConfigError);
    CHECK_THROWS_AS((void)lattice_fit({}, kF1, kF2, 0.0), ConfigError);
    CHECK_THROWS_AS((void)lattice_fit({}, kF1, kF2, 1e3, 0), ConfigError);
    CHECK(lattice_fit({}, kF1, kF2, 1e3).empty());
    CHECK(default_tolerance(4430.0, kF1) == doctest::Approx(13290.0));
    CHECK(default_tolerance(10.0, kF1) == doctest::Approx(756.0));
}

TEST_CASE("ambiguity on a near-commensurate pair") {
    const double f2 = 2.0 * kF1 + 500.0;
    CHECK_THROWS_AS((void)lattice_fit({at(2.0 * kF1)}, kF1, f2, 1e3), AmbiguityError);
    try {
        (void)lattice_fit({at(2.0 * kF1)}, kF1, f2, 1e3);
    } catch (const AmbiguityError& e) {
        CHECK(std::string(e.what()).find("lattice") != std::string::npos);
    }
    CHECK_NOTHROW((void)lattice_fit({at(2.0 * kF1)}, kF1, f2, 200.0));
}

TEST_CASE("lattice fit agrees with brute force on random detunings") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(-8e6, 8e6);
    for (int n = 0; n < 300; ++n) {
        const double d = u(rng);
        const auto fit = lattice_fit({at(d)}, kF1, kF2, 1e3);
        const auto [k1, k2] = brute_nearest(d, kF1, kF2, 6);
        CHECK(fit[0].k1 == k1);
        CHECK(fit[0].k2 == k2);
        CHECK(fit[0].assigned == (std::abs(d - (k1 * kF1 + k2 * kF2)) <= 1e3));
    }
}

TEST_CASE("lattice fit round trip over random assignment sets") {
    const double tol = default_tolerance(1.5 * 48.384e6 / 16384.0, kF1);
    REQUIRE(lattice_gap(kF1, kF2, 12) > 2.0 * tol);
    std::mt19937_64 rng(7);
    for (int set = 0; set < 200; ++set) {
        const int kmax = std::uniform_int_distribution<int>(1, 6)(rng);
        std::uniform_int_distribution<int> k(-kmax, kmax);
        std::uniform_real_distribution<double> jitter(-0.249 * tol, 0.249 * tol);
        const int count = std::uniform_int_distribution<int>(1, 20)(rng);
        std::vector<std::pair<int, int>> truth;
        std::vector<Tooth> teeth;
        for (int n = 0; n < count; ++n) {
            truth.emplace_back(k(rng), k(rng));
            teeth.push_back(at(truth.back().first * kF1 + truth.back().second * kF2 + jitter(rng)));
        }
        const auto fit = lattice_fit(teeth, kF1, kF2, tol, kmax);
        REQUIRE(fit.size() == truth.size());
        for (std::size_t n = 0; n < fit.size(); ++n) {
            CHECK(fit[n].assigned);
            CHECK(fit[n].k1 == truth[n].first);
            CHECK(fit[n].k2 == truth[n].second);
            CHECK(std::abs(fit[n].residual) < tol / 4.0);
        }
    }
}

TEST_CASE("classification examples") {
    const double tol = 1e3;
    CHECK(classify({}, kF1, kF2, tol).regime == Regime::SinglePeak);
    const auto single = classify({at(0.0)}, kF1, kF2, tol);
    CHECK(single.regime == Regime::SinglePeak);
    CHECK(single.dominant_spacing == 0.0);

    const auto c1 = classify(teeth_at({-2 * kF1, -kF1, 0.0, kF1, 2 * kF1}), kF1, kF2, tol);
    CHECK(c1.regime == Regime::Comb1);
    CHECK(c1.dominant_spacing == doctest::Approx(kF1).epsilon(1e-12));
    CHECK(c1.mixing_orders.empty());

    const auto c2 = classify(teeth_at({-kF2, 0.0, kF2, 2 * kF2}), kF1, kF2, tol);
    CHECK(c2.regime == Regime::Comb2);
    CHECK(c2.dominant_spacing == doctest::Approx(kF2).epsilon(1e-12));

    // Mode-2 comb dressed by +-1 units of mode 1.
    std::vector<double> dressed;
    for (int k = -2; k <= 2; ++k) {
        dressed.push_back(k * kF2);
        dressed.push_back(k * kF2 + kF1);
        dressed.push_back(k * kF2 - kF1);
    }
    const auto h = classify(teeth_at(dressed), kF1, kF2, tol);
    CHECK(h.regime == Regime::Hybrid);
    CHECK(h.mixing_orders.count(1) == 1);
    CHECK(h.unassigned == 0);
    CHECK(h.dominant_spacing == doctest::Approx(kF2).epsilon(1e-12));
    for (const auto& a : h.assignments) CHECK(std::abs(a.residual) < tol);

    // Coexisting single-mode combs with no mixed tooth.
    CHECK(classify(teeth_at({0.0, kF1, kF2}), kF1, kF2, tol).regime == Regime::Hybrid);

    // Unassigned teeth are counted but do not change the regime.
    const auto u = classify(teeth_at({0.0, kF1, 2 * kF1, 0.45 * kF1}), kF1, kF2, tol);
    CHECK(u.regime == Regime::Comb1);
    CHECK(u.unassigned == 1);

    // Pulled comb: spacing is fitted from the tooth positions.
    const auto pulled = classify(teeth_at({0.0, kF1 + 200.0, 2 * kF1 + 400.0, -kF1 - 200.0}), kF1, kF2, tol);
    CHECK(pulled.dominant_spacing == doctest::Approx(kF1 + 200.0).epsilon(1e-12));

    for (auto r : {Regime::SinglePeak, Regime::Comb1, Regime::Comb2, Regime::Hybrid}) {
        CHECK(regime_from_string(to_string(r)) == r);
    }
    CHECK_THROWS_AS((void)regime_from_string("comb"), ConfigError);
}

TEST_CASE("classification JSON") {
    const auto c = classify(teeth_at({0.0, kF1, kF2 - kF1, 0.4 * kF1}), kF1, kF2, 1e3);
    std::ostringstream os;
    write_classification_json(os, c);
    const auto j = nlohmann::json::parse(os.str());
    CHECK(j.at("format_version") == 1);
    CHECK(j.at("regime") == "Hybrid");
    REQUIRE(j.at("teeth").size() == 4);
    CHECK(j["teeth"][2]["k1"] == -1);
    CHECK(j["teeth"][2]["k2"] == 1);
    CHECK(j["teeth"][2]["order"] == 1);
    CHECK(j["teeth"][3]["k1"].is_null());
    CHECK(j["teeth"][3]["assigned"] == false);
    CHECK(j.at("mixing_orders_present") == nlohmann::json::array({1}));
}

TEST_CASE("bessel comb without modulation is the linear cavity") {
    const SystemParams& p = desk();
    const auto pump = PumpCondition::from_detuning_dbm(p, p.modes[0].omega, -75.0);
    const auto bc = bessel_comb(p, pump, 0.0, 0);
    CHECK(bc.modulation_index == 0.0);
    CHECK(bc.kmax == 0);
    CHECK(testing::rel(bc.at(0), lower_fixed_point(p, pump).a) < 1e-12);
    CHECK(bc.at(1) == cdouble{});
    CHECK(bc.mech_freq == doctest::Approx(kF1));
}

TEST_CASE("first-order sidebands scale linearly with beta") {
    const SystemParams& p = desk();
    const auto pump = PumpCondition::from_detuning_dbm(p, p.modes[0].omega, -75.0);
    for (int mode : {0, 1}) {
        const auto b1 = bessel_comb(p, pump, amplitude_for_index(p, mode, 1e-3), mode, 3);
        const auto b2 = bessel_comb(p, pump, amplitude_for_index(p, mode, 2e-3), mode, 3);
        CHECK(b1.modulation_index == doctest::Approx(1e-3).epsilon(1e-12));
        for (int k : {-1, 1}) {
            const double ratio = std::abs(b2.at(k) / b2.at(0)) / std::abs(b1.at(k) / b1.at(0));
            CHECK(std::abs(ratio - 2.0) < 0.02);
        }
    }
}

TEST_CASE("bessel comb matches the steady-state Fourier series") {
    const SystemParams& p = desk();
    for (double x : {0.6, 1.0, 1.6}) {
        const auto pump = PumpCondition::from_detuning_dbm(p, x * p.modes[0].omega, -80.0);
        for (double beta : {0.3, 2.0}) {
            const auto bc = bessel_comb(p, pump, amplitude_for_index(p, 0, beta), 0);
            const int kmax = bc.kmax;
            const auto oracle = cavity_oracle(p, pump, 0, amplitude_for_index(p, 0, beta), kmax);
            double scale = 0.0;
            for (const auto& v : oracle.alpha) scale = std::max(scale, std::abs(v));
            CAPTURE(x);
            CAPTURE(beta);
            for (int k = -kmax; k <= kmax; ++k) {
                CAPTURE(k);
                CHECK(std::abs(bc.at(k) - oracle.alpha[static_cast<std::size_t>(k + kmax)]) < 1e-7 * scale);
            }
            CHECK(sum_norm(bc) == doctest::Approx(oracle.mean_power).epsilon(1e-6));
        }
    }
}

TEST_CASE("flat-filter limit of the comb power") {
    SystemParams p = desk();
    p.kappa = 200.0 * p.modes[0].omega;
    p.kappa_e = 0.5 * p.kappa;
    const auto pump = PumpCondition::from_detuning_dbm(p, 0.0, -60.0);
    for (double beta : {0.5, 1.0, 2.0}) {
        const double B = amplitude_for_index(p, 0, beta);
        const auto bc = bessel_comb(p, pump, B, 0);
        const auto oracle = cavity_oracle(p, pump, 0, B, 0);
        CAPTURE(beta);
        CHECK(std::abs(sum_norm(bc) / oracle.mean_power - 1.0) < 1e-3);
    }
}

TEST_CASE("bessel truncation") {
    const SystemParams& p = desk();
    const auto pump = PumpCondition::from_detuning_dbm(p, p.modes[0].omega, -75.0);
    const auto full = bessel_comb(p, pump, amplitude_for_index(p, 0, 2.0), 0);
    CHECK(full.kmax >= 5);
    try {
        (void)bessel_comb(p, pump, amplitude_for_index(p, 0, 2.0), 0, 2);
        FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
        CHECK(e.required_order() == full.kmax);
    }
    CHECK_NOTHROW((void)bessel_comb(p, pump, amplitude_for_index(p, 0, 2.0), 0, full.kmax));
    CHECK_THROWS_AS((void)bessel_comb(p, pump, amplitude_for_index(p, 0, 1e4), 0), TruncationError);
    CHECK_THROWS_AS((void)bessel_comb(p, pump, 1.0, 2), ConfigError);
    CHECK_THROWS_AS((void)amplitude_for_index(testing::uncoupled(p), 0, 1.0), ConfigError);
}

TEST_CASE("competition outcome rules") {
    AttractorReport r;
    CombClassification c;
    r.kind = AttractorKind::Undecided;
    CHECK_THROWS_AS((void)competition_outcome(r, c), IndeterminateOutcomeError);
    r.kind = AttractorKind::FixedPoint;
    CHECK_THROWS_AS((void)competition_outcome(r, c), IndeterminateOutcomeError);

    r.kind = AttractorKind::LimitCycle;
    r.mech_oscillation = {1.0, 0.005};
    c.regime = Regime::Comb1;
    CHECK(competition_outcome(r, c) == Competition::Mode1Wins);
    r.mech_oscillation = {1.0, 0.02};
    CHECK(competition_outcome(r, c) == Competition::Coexist);
    r.mech_oscillation = {0.005, 1.0};
    c.regime = Regime::Comb2;
    CHECK(competition_outcome(r, c) == Competition::Mode2Wins);
    c.regime = Regime::Hybrid;
    CHECK(competition_outcome(r, c) == Competition::Coexist);
    CHECK(to_string(Competition::Mode1Wins) == "mode1_wins");
}

namespace {

std::pair<Competition, Regime> outcome_at(double delta, double dbm) {
    const SystemParams& p = desk();
    const auto pump = PumpCondition::from_detuning_dbm(p, delta, dbm);
    SettleCriteria crit;
    crit.max_horizon = 400.0 / p.modes[0].gamma;
    const SettleResult r = settle(p, pump, seeded_initial_state(p, pump), crit);
    const Spectrum s = output_spectrum(r.trajectory, false);
    const auto c = classify(find_teeth(s), oscillation_frequency(r.trajectory, 0),
                            oscillation_frequency(r.trajectory, 1), default_tolerance(s.rbw, kF1));
    return {competition_outcome(r.report, c), c.regime};
}

}  // namespace

TEST_CASE("mode 1 wins just above its threshold at the mode-1 detuning") {
    const SystemParams& p = desk();
    const double delta = p.modes[0].omega;
    const auto th = find_threshold(p, delta);
    REQUIRE(th);
    const auto [who, regime] = outcome_at(delta, th->p_dbm + 1.0);
    CHECK(who == Competition::Mode1Wins);
    CHECK(regime == Regime::Comb1);
}

TEST_CASE("mode 2 wins just above its threshold at the mode-2 detuning") {
    const SystemParams& p = desk();
    const double delta = p.modes[1].omega;
    const auto th = find_threshold(p, delta);
    REQUIRE(th);
    CHECK(th->branch == DominantMode::Mode2);
    const auto [who, regime] = outcome_at(delta, th->p_dbm + 1.0);
    CHECK(who == Competition::Mode2Wins);
    CHECK(regime == Regime::Comb2);
}

TEST_CASE("hybrid coexistence inside the overlap window at half the mode-1 detuning") {
    const SystemParams& p = desk();
    const double delta = 0.5 * p.modes[0].omega;
    const auto m2 = single_mode_threshold(p, delta, 1);
    REQUIRE(m2);
    bool found = false;
    for (double off = 0.0; off <= 10.0 && !found; off += 2.0) {
        const auto [who, regime] = outcome_at(delta, m2->p_dbm + off);
        found = who == Competition::Coexist && regime == Regime::Hybrid;
    }
    CHECK(found);
}
