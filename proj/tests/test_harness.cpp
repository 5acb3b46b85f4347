#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "loopalloc/errors.hpp"
#include "loopalloc/harness.hpp"
#include "loopalloc/verify.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace loopalloc;
using namespace loopalloc::harness;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ScenarioSpec symmetric_pair_spec() {
    ScenarioSpec s = preset_paper();
    s.loops.resize(2);
    for (auto& l : s.loops) {
        l.offset_m = 1500e3;
        l.entropy_bits = 20.0;
        l.dim_m = 2;  // keep the constants cheap
    }
    return s;
}

}  // namespace

TEST_CASE("the bundled preset carries the documented values") {
    const auto s = preset_paper();
    REQUIRE(s.loops.size() == 4);
    CHECK(s.global.bandwidth_hz == 15e3);
    CHECK(s.global.error_prob == 1e-6);
    CHECK_FALSE(s.global.include_prop_delay);
    CHECK(s.channel.carrier_mhz == 2000.0);
    CHECK(s.channel.noise_dbm == -110.0);
    CHECK(s.channel.gmax_dbi == 23.0);
    CHECK(s.channel.theta3db_deg == 30.0);
    CHECK(s.channel.p_los == 0.919);
    CHECK(s.channel.spacecraft_height_m == 3000e3);
    const double entropies[] = {48.0, 36.0, 24.0, 12.0};
    const double offsets[] = {1000e3, 2000e3, 3000e3, 4000e3};
    for (int k = 0; k < 4; ++k) {
        CHECK(s.loops[k].entropy_bits == entropies[k]);
        CHECK(s.loops[k].offset_m == offsets[k]);
        CHECK(s.loops[k].dim_m == 100);
        CHECK(s.loops[k].sigma_v == 0.01);
        CHECK(s.loops[k].sigma_w == 0.0);
        CHECK(s.loops[k].cycle_time_s == 0.05);
        CHECK(s.loops[k].overhead_s == 0.04);
    }
}

TEST_CASE("preset builds a four-loop scenario with converted units") {
    const auto sc = build_scenario(preset_paper());
    REQUIRE(sc.loops.size() == 4);
    CHECK(sc.p_max == doctest::Approx(10.0).epsilon(1e-12));  // 10 dBW
    for (const auto& l : sc.loops)
        CHECK(l.noise_power == doctest::Approx(1e-14).epsilon(1e-12));
    // distances ascend, so gains descend
    for (int k = 0; k + 1 < 4; ++k)
        CHECK(sc.loops[k].budget.channel_gain > sc.loops[k + 1].budget.channel_gain);
}

TEST_CASE("spec save/load round-trips to an identical document") {
    const auto s = preset_paper();
    const auto path = temp_path("loopalloc_roundtrip.json");
    save_spec(s, path);
    const auto again = load_spec(path);
    CHECK(spec_to_json_text(again) == spec_to_json_text(s));
    std::filesystem::remove(path);
}

TEST_CASE("missing or ill-typed fields are reported by name") {
    auto text = spec_to_json_text(preset_paper());
    {
        auto broken = text;
        const auto pos = broken.find("pmax_dbw");
        broken.replace(pos, 8, "pmax_xxx");
        CHECK_THROWS_WITH_AS(static_cast<void>(spec_from_json_text(broken)),
                             doctest::Contains("pmax_dbw"), config_error);
    }
    {
        auto broken = text;
        const auto pos = broken.find("\"carrier_mhz\": 2000.0");
        REQUIRE(pos != std::string::npos);
        broken.replace(pos, 21, "\"carrier_mhz\": \"fast\"");
        CHECK_THROWS_WITH_AS(static_cast<void>(spec_from_json_text(broken)),
                             doctest::Contains("carrier_mhz"), config_error);
    }
    CHECK_THROWS_AS(static_cast<void>(load_spec("/nonexistent/file.json")), config_error);
    CHECK_THROWS_AS(static_cast<void>(spec_from_json_text("{ not json")), config_error);
}

TEST_CASE("csv header and formatting contract") {
    CHECK(csv_text({}) ==
          "sweep_param,scheme,loop,p_watt,n_symbols,cycle_rate_bits,lqr_cost,stable\n");

    ResultRow r;
    r.sweep_param = 2.5;
    r.scheme = "proposed";
    r.loop = 1;
    r.p_watt = 0.123456789123;
    r.n_symbols = 150;
    r.cycle_rate_bits = 435.272;
    r.lqr_cost = control::LqrCost::of(1.5);
    r.stable = true;
    CHECK(csv_text({r}).find("2.50000000e+00,proposed,1,1.23456789e-01,150,4.35272000e+02,"
                             "1.50000000e+00,true\n") != std::string::npos);

    r.sweep_param.reset();
    r.lqr_cost = control::LqrCost::unstable();
    r.stable = false;
    CHECK(csv_text({r}).find(",proposed,1,") != std::string::npos);
    CHECK(csv_text({r}).find("unstable,false\n") != std::string::npos);
}

TEST_CASE("csv files end lines with LF only and reproduce byte-identically") {
    auto spec = symmetric_pair_spec();
    spec.global.pmax_dbw = 92.0;
    const auto rows = run_sweep(spec, SweepParam::PMax, 88.0, 94.0, 3, {"proposed", "equal"},
                                alloc::SolverOptions{});
    const auto p1 = temp_path("loopalloc_csv_a.csv");
    const auto p2 = temp_path("loopalloc_csv_b.csv");
    emit_csv(rows, p1);
    emit_csv(run_sweep(spec, SweepParam::PMax, 88.0, 94.0, 3, {"proposed", "equal"},
                       alloc::SolverOptions{}),
             p2);
    const auto a = slurp(p1), b = slurp(p2);
    CHECK(a == b);
    CHECK(a.find('\r') == std::string::npos);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("sweep rows arrive in (point, scheme, loop) order") {
    auto spec = symmetric_pair_spec();
    const auto rows = run_sweep(spec, SweepParam::PMax, 90.0, 91.0, 2, {"proposed", "equal"},
                                alloc::SolverOptions{});
    REQUIRE(rows.size() == 2 * 2 * 2);
    CHECK(rows[0].scheme == "proposed");
    CHECK(rows[0].loop == 1);
    CHECK(rows[1].loop == 2);
    CHECK(rows[2].scheme == "equal");
    CHECK(*rows[0].sweep_param == 90.0);
    CHECK(*rows[4].sweep_param == 91.0);
}

TEST_CASE("symmetric scenarios give identical rows across schemes") {
    auto spec = symmetric_pair_spec();
    const auto rows =
        run_sweep(spec, SweepParam::PMax, 90.0, 92.0, 2,
                  {"proposed", "max_min", "max_sum", "equal"}, alloc::SolverOptions{});
    // within a point, every scheme allocates the same (symmetric) split
    for (std::size_t point = 0; point < 2; ++point) {
        const std::size_t base = point * 8;
        for (std::size_t s = 1; s < 4; ++s)
            for (std::size_t k = 0; k < 2; ++k) {
                CHECK(rows[base + 2 * s + k].p_watt ==
                      doctest::Approx(rows[base + k].p_watt).epsilon(1e-9));
            }
    }
}

TEST_CASE("infeasible sweep points are recorded, not fatal") {
    auto spec = preset_paper();  // 10 dBW default is far below the thresholds
    const auto rows = run_sweep(spec, SweepParam::PMax, 10.0, 85.0, 4, {"proposed"},
                                alloc::SolverOptions{});
    REQUIRE(rows.size() == 16);
    CHECK_FALSE(rows[0].stable);  // 10 dBW: infeasible, flagged
    CHECK(rows[0].p_watt == 0.0);
    bool any_stable = false;
    for (const auto& r : rows) any_stable |= r.stable;
    CHECK(any_stable);  // 85 dBW solves fine
}

TEST_CASE("cycle-time sweep rebuilds blocklengths") {
    auto spec = symmetric_pair_spec();
    spec.global.pmax_dbw = 95.0;
    const auto rows = run_sweep(spec, SweepParam::CycleTime, 0.045, 0.06, 2, {"proposed"},
                                alloc::SolverOptions{});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].n_symbols == 75);   // 5 ms window
    CHECK(rows[2].n_symbols == 300);  // 20 ms window
}

TEST_CASE("sensing-noise sweep rebuilds the control constants") {
    auto spec = symmetric_pair_spec();
    spec.global.pmax_dbw = 110.0;
    const auto rows = run_sweep(spec, SweepParam::SensingNoise, 0.0, 0.1, 2, {"proposed"},
                                alloc::SolverOptions{});
    REQUIRE(rows.size() == 4);
    REQUIRE(rows[0].stable);
    REQUIRE(rows[2].stable);
    CHECK(rows[2].lqr_cost.value > rows[0].lqr_cost.value);  // noisier sensing costs more
}

TEST_CASE("scheme dispatch knows every tag and rejects others") {
    for (const char* s : {"proposed", "proposed_cf", "max_sum", "max_sum_cf", "max_min",
                          "max_min_cf", "modified_max_min", "equal", "shannon"})
        CHECK(scheme_known(s));
    CHECK_FALSE(scheme_known("fastest"));
    const auto sc = build_scenario(symmetric_pair_spec());
    CHECK_THROWS_AS(run_scheme(sc, "fastest", alloc::SolverOptions{}), config_error);
    CHECK_THROWS_AS(sweep_param_from_name("power"), config_error);
}

TEST_CASE("corrupting the curvature constant makes the classification check fail") {
    const auto good = verify::check_curvature_classification();
    CHECK(good.pass);
    const auto bad =
        verify::check_curvature_classification(fbl::CurvatureThreshold{0.690439, 0.50});
    CHECK_FALSE(bad.pass);
}
