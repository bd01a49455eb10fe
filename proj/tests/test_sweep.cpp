#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "emcomb/errors.hpp"
#include "emcomb/sweep.hpp"
#include "emcomb/units.hpp"

using namespace emcomb;

namespace {

SweepPlan grid_plan() {
    SweepPlan plan = plan_from_preset("desk-scale");
    plan.detunings = {0.6, 0.8, 1.0, 1.2};
    plan.powers_dbm = {-80.0, -72.0, -66.0, -60.0};
    return plan;
}

std::string csv(const SweepResult& r) {
    std::ostringstream os;
    write_map_csv(os, r);
    return os.str();
}

std::string json_text(const SweepResult& r) {
    std::ostringstream os;
    write_map_json(os, r);
    return os.str();
}

// The sweep is computed once and shared by the cases below.
const SweepResult& grid_result() {
    static const SweepResult r = [] {
        SweepPlan plan = grid_plan();
        plan.threads = 8;
        return run_sweep(plan);
    }();
    return r;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "emcomb_test_sweep";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("frequency parsing") {
    CHECK(parse_frequency_hz("756 kHz") == 756e3);
    CHECK(parse_frequency_hz("5.31GHz") == doctest::Approx(5.31e9).epsilon(1e-15));
    CHECK(parse_frequency_hz("2.32 Hz") == 2.32);
    CHECK(parse_frequency_hz(" 1.75MHz ") == 1.75e6);
    CHECK(parse_frequency_hz("380e3") == 380e3);
    CHECK_THROWS_AS((void)parse_frequency_hz("fast"), ConfigError);
    CHECK_THROWS_AS((void)parse_frequency_hz("3 kHzz"), ConfigError);
    CHECK_THROWS_AS((void)parse_frequency_hz("inf"), ConfigError);
}

TEST_CASE("ranges") {
    const auto r = parse_range("0.4:1.6:25");
    REQUIRE(r.size() == 25);
    CHECK(r.front() == 0.4);
    CHECK(r.back() == 1.6);
    CHECK(r[12] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(parse_range("2:5:1") == std::vector<double>{2.0});
    CHECK_THROWS_AS((void)parse_range("1:2"), ConfigError);
    CHECK_THROWS_AS((void)parse_range("1:2:0"), ConfigError);
    CHECK_THROWS_AS((void)parse_range("1:2:2.5"), ConfigError);
    CHECK_THROWS_AS((void)parse_range("1:2:3:4"), ConfigError);

    const auto s = step_range(-49.0, -43.0, 0.5);
    CHECK(s.size() == 13);
    CHECK(s.back() == doctest::Approx(-43.0));
    CHECK(step_range(0.0, 1.0, 0.3).size() == 4);
    CHECK_THROWS_AS((void)step_range(0.0, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS((void)step_range(1.0, 0.0, 0.1), ConfigError);
}

TEST_CASE("fnv1a64 reference vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("config layering") {
    const SweepPlan base = plan_from_preset("paper-device");
    CHECK(base.params.modes[0].gamma == doctest::Approx(units::hz_to_rad(2.32)));

    const SweepPlan p = apply_config_yaml(base, R"(
preset: desk-scale
attenuation_db: 3
sweep:
  detuning: 0.4:1.2:11
  power_dbm: {start: -80, stop: -60, step: 5}
  tol: 1e-10
classifier:
  margin_db: 12
  tol: 5 kHz
)");
    CHECK(p.preset == "desk-scale");
    CHECK(p.params.modes[0].gamma == doctest::Approx(units::hz_to_rad(756.0)));
    CHECK(p.detunings.size() == 11);
    CHECK(p.powers_dbm == std::vector<double>{-80, -75, -70, -65, -60});
    CHECK(p.attenuation_db == 3.0);
    CHECK(p.tol == 1e-10);
    CHECK(p.classifier.margin_db == 12.0);
    CHECK(p.classifier.tol_hz == 5e3);

    // Later layers win; untouched keys survive.
    const SweepPlan q = apply_config_yaml(p, "device:\n  kappa: 400 kHz\nsweep:\n  power_dbm: [-70]\n");
    CHECK(q.params.kappa == doctest::Approx(units::hz_to_rad(400e3)));
    CHECK(q.preset == "desk-scale+overrides");
    CHECK(q.powers_dbm == std::vector<double>{-70});
    CHECK(q.detunings == p.detunings);
    CHECK(q.config_hash() != p.config_hash());
    CHECK(apply_config_yaml(p, "").config_hash() == p.config_hash());

    // Threads and output location do not change the hash.
    SweepPlan t = p;
    t.threads = 7;
    t.output_dir = "/elsewhere";
    CHECK(t.config_hash() == p.config_hash());
    CHECK(p.config_hash().rfind("fnv1a64:", 0) == 0);
}

TEST_CASE("config errors") {
    const SweepPlan base = plan_from_preset("desk-scale");
    CHECK_THROWS_AS((void)apply_config_yaml(base, "detunings: [1]\n"), ConfigError);
    CHECK_THROWS_AS((void)apply_config_yaml(base, "sweep:\n  powers: [1]\n"), ConfigError);
    CHECK_THROWS_AS((void)apply_config_yaml(base, "device:\n  mode1:\n    q: 3\n"), ConfigError);
    CHECK_THROWS_AS((void)apply_config_yaml(base, "preset: nowhere\n"), ConfigError);
    CHECK_THROWS_AS((void)apply_config_yaml(base, "sweep: [\n"), ConfigError);
    CHECK_THROWS_AS((void)apply_config_yaml(base, "format_version: 2\n"), ConfigError);
    CHECK_THROWS_AS((void)apply_config_yaml(base, "sweep:\n  power_dbm: {start: 0, stop: 1}\n"), ConfigError);
    CHECK_THROWS_AS((void)load_config_file(base, "/nonexistent/config.yaml"), ConfigError);

    SweepPlan empty = base;
    CHECK_THROWS_AS(empty.validate(), ConfigError);
    SweepPlan ok = grid_plan();
    CHECK_NOTHROW(ok.validate());
    SweepPlan bad_tol = grid_plan();
    bad_tol.tol = 1e-2;
    CHECK_THROWS_AS(bad_tol.validate(), ConfigError);
    SweepPlan bad_margin = grid_plan();
    bad_margin.classifier.margin_db = 3.0;
    CHECK_THROWS_AS(bad_margin.validate(), ConfigError);
    CHECK_THROWS_AS((void)run_sweep(empty), ConfigError);
}

TEST_CASE("single point below threshold") {
    SweepPlan plan = plan_from_preset("desk-scale");
    plan.detunings = {1.0};
    plan.powers_dbm = {-85.0};
    const SweepResult r = run_sweep(plan);
    REQUIRE(r.points.size() == 1);
    const auto& p = r.points[0];
    CHECK(p.error.empty());
    REQUIRE(p.regime);
    CHECK(*p.regime == Regime::SinglePeak);
    CHECK(p.attractor == AttractorKind::FixedPoint);
    CHECK(p.max_growth_per_s < 0.0);
    CHECK(p.dominant_spacing_hz == 0.0);
    REQUIRE(r.thresholds.threshold_dbm.size() == 1);
    CHECK(r.thresholds.threshold_dbm[0] > -85.0);
}

TEST_CASE("attenuation shifts the on-chip power") {
    SweepPlan plan = plan_from_preset("desk-scale");
    plan.detunings = {1.0};
    plan.powers_dbm = {-75.0};
    plan.attenuation_db = 10.0;
    const PointResult p = run_point(plan, 1.0, -75.0);
    CHECK(p.p_d_dbm == -85.0);
}

TEST_CASE("4x4 grid: one record per point, ordered detuning-major") {
    const SweepResult& r = grid_result();
    const SweepPlan plan = grid_plan();
    REQUIRE(r.points.size() == 16);
    for (std::size_t k = 0; k < 16; ++k) {
        CHECK(r.points[k].delta_over_omega1 == plan.detunings[k / 4]);
        CHECK(r.points[k].p_d_dbm == plan.powers_dbm[k % 4]);
        CHECK(r.points[k].error.empty());
        CHECK(r.points[k].regime.has_value());
        CHECK(r.points[k].attractor.has_value());
    }
    // The regime agrees with the sign of the linear growth rate.
    for (const auto& p : r.points) {
        CAPTURE(p.delta_over_omega1);
        CAPTURE(p.p_d_dbm);
        if (p.max_growth_per_s < 0.0) {
            CHECK(*p.regime == Regime::SinglePeak);
        } else {
            CHECK(*p.regime == Regime::Comb1);
            CHECK(std::abs(p.dominant_spacing_hz - 756e3) < 0.01 * 756e3);
        }
    }
    std::istringstream in(csv(r));
    std::string line;
    std::size_t data = 0, header = 0;
    while (std::getline(in, line)) (line[0] == '#' ? header : data) += 1;
    CHECK(data == 17);  // column names plus 16 rows
    CHECK(header == 5);
}

TEST_CASE("results do not depend on the thread count") {
    const SweepResult& eight = grid_result();
    SweepPlan plan = grid_plan();
    plan.threads = 1;
    const SweepResult one = run_sweep(plan);
    const SweepResult serial = run_sweep_serial(grid_plan());
    CHECK(csv(one) == csv(eight));
    CHECK(csv(serial) == csv(eight));
    for (std::size_t k = 0; k < one.points.size(); ++k) {
        CHECK(one.points[k].same_data(eight.points[k]));
        CHECK(serial.points[k].same_data(eight.points[k]));
    }
    CHECK(one.thresholds.threshold_dbm == eight.thresholds.threshold_dbm);
}

TEST_CASE("map round trip") {
    const SweepResult& r = grid_result();
    std::istringstream c(csv(r));
    const SweepResult from_csv = read_map_csv(c);
    CHECK(from_csv.preset == r.preset);
    CHECK(from_csv.config_hash == r.config_hash);
    CHECK(from_csv.config == r.config);
    REQUIRE(from_csv.points.size() == r.points.size());
    for (std::size_t k = 0; k < r.points.size(); ++k) CHECK(from_csv.points[k].same_data(r.points[k], false));

    std::istringstream j(json_text(r));
    const SweepResult from_json = read_map_json(j);
    REQUIRE(from_json.points.size() == r.points.size());
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        CHECK(from_json.points[k].same_data(r.points[k]));
        CHECK(from_json.points[k].wall_seconds == r.points[k].wall_seconds);
    }
    CHECK(from_json.thresholds.threshold_dbm == r.thresholds.threshold_dbm);
    CHECK(from_json.thresholds.mode2_dbm == r.thresholds.mode2_dbm);
    CHECK(from_json.thresholds.branch == r.thresholds.branch);
    CHECK(json_text(from_json) == json_text(r));
    CHECK(csv(from_csv) == csv(r));
}

TEST_CASE("empty result exports a header-only file") {
    SweepResult r;
    r.preset = "desk-scale";
    r.config_hash = "fnv1a64:0000000000000000";
    r.config = nlohmann::ordered_json::object();
    const auto path = scratch("empty.csv");
    export_map(r, path.string(), MapFormat::Csv);
    std::ifstream in(path);
    std::string line, last;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        last = line;
    }
    CHECK(n == 6);
    CHECK(last.rfind("delta_dc_over_omega_m1,p_d_dbm,regime", 0) == 0);
    std::ifstream again(path);
    CHECK(read_map_csv(again).points.empty());

    const auto jpath = scratch("empty.json");
    export_map(r, jpath.string(), MapFormat::Json);
    std::ifstream jin(jpath);
    CHECK(read_map_json(jin).points.empty());
}

TEST_CASE("failures are recorded per point") {
    SweepPlan plan = plan_from_preset("desk-scale");
    plan.detunings = {1.0};
    plan.powers_dbm = {-60.0};
    plan.classifier.tol_hz = 400e3;  // larger than half the lattice gap
    const SweepResult r = run_sweep(plan);
    REQUIRE(r.points.size() == 1);
    CHECK(r.points[0].error == "lattice_ambiguity");
    CHECK_FALSE(r.points[0].regime.has_value());
    CHECK(r.points[0].attractor.has_value());
    const std::string text = csv(r);
    CHECK(text.find(",lattice_ambiguity\n") != std::string::npos);
    std::istringstream in(text);
    CHECK(read_map_csv(in).points[0].error == "lattice_ambiguity");

    SweepPlan tiny = plan;
    tiny.classifier.tol_hz = 0.0;
    tiny.max_steps = 10;
    // An exhausted step budget is an outcome, not an error.
    const PointResult u = run_point(tiny, 1.0, -60.0);
    CHECK(u.error.empty());
    CHECK(u.attractor == AttractorKind::Undecided);
}

TEST_CASE("unwritable export path") {
    SweepResult r;
    try {
        export_map(r, "/nonexistent-dir/map.csv", MapFormat::Csv);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/nonexistent-dir/map.csv") != std::string::npos);
    }
}

TEST_CASE("malformed maps are rejected") {
    std::istringstream wrong_cols("a,b,c\n1,2,3\n");
    CHECK_THROWS_AS((void)read_map_csv(wrong_cols), ConfigError);
    std::istringstream version("# format_version: 9\n");
    CHECK_THROWS_AS((void)read_map_csv(version), ConfigError);
    std::istringstream not_json("{");
    CHECK_THROWS_AS((void)read_map_json(not_json), ConfigError);
}
