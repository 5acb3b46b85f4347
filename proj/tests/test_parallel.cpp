#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "loopalloc/alloc.hpp"
#include "loopalloc/control.hpp"
#include "loopalloc/harness.hpp"
#include "loopalloc/mat.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace loopalloc;

namespace {

la::Mat random_mat(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    la::Mat m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
    return m;
}

}  // namespace

TEST_CASE("parallel matmul is bit-identical to the serial reference") {
    std::mt19937_64 rng(42);
    for (std::size_t n : {3, 17, 48, 100, 211}) {
        const auto a = random_mat(n, rng);
        const auto b = random_mat(n, rng);
        CHECK(la::mul(a, b) == la::mul_serial(a, b));
    }
}

TEST_CASE("parallel multi-rhs solve is bit-identical to the serial reference") {
    std::mt19937_64 rng(43);
    for (std::size_t n : {5, 64, 128}) {
        auto a = random_mat(n, rng);
        for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);
        const auto b = random_mat(n, rng);
        const auto f = la::lu_factor(a);
        CHECK(la::lu_solve(f, b) == la::lu_solve_serial(f, b));
    }
}

TEST_CASE("riccati constants do not depend on the thread count") {
#ifdef _OPENMP
    const auto dyn = control::dynamics_from_entropy(24.0, 100, 0.01, 0.05);
    omp_set_num_threads(1);
    const auto c1 = control::control_constants(dyn);
    omp_set_num_threads(2);
    const auto c2 = control::control_constants(dyn);
    CHECK(c1.s_mat == c2.s_mat);
    CHECK(c1.p_mat == c2.p_mat);
    CHECK(c1.sigma_mat == c2.sigma_mat);
    CHECK(c1.g_const == c2.g_const);
    CHECK(c1.cost_floor == c2.cost_floor);
#endif
}

TEST_CASE("parallel oracle equals the serial oracle") {
    alloc::Scenario sc;
    sc.bandwidth_hz = 15e3;
    sc.p_max = 60.0;
    const double inv_gains2[] = {1.5, 8.0};
    for (double ig : inv_gains2) {
        alloc::ScenarioLoop sl;
        sl.budget.channel_gain = 1.0 / ig;
        sl.error_prob = 1e-6;
        sl.noise_power = 1.0;
        sl.constants =
            control::control_constants(control::dynamics_from_entropy(14.0, 1, 0.01, 0.0));
        sl.cycle_time_s = 0.01;
        sl.overhead_s = 0.0;
        sc.loops.push_back(std::move(sl));
    }
    const auto par2 = alloc::brute_force_oracle(sc, 4001);
    const auto ser2 = alloc::brute_force_oracle_serial(sc, 4001);
    CHECK(par2.power == ser2.power);
    CHECK(par2.total_cost.value == ser2.total_cost.value);

    // add a third loop to exercise the 2-D grid
    {
        alloc::ScenarioLoop sl;
        sl.budget.channel_gain = 1.0 / 4.0;
        sl.error_prob = 1e-6;
        sl.noise_power = 1.0;
        sl.constants =
            control::control_constants(control::dynamics_from_entropy(9.0, 1, 0.01, 0.0));
        sl.cycle_time_s = 0.01;
        sl.overhead_s = 0.0;
        sc.loops.push_back(std::move(sl));
        sc.p_max = 90.0;
    }
    const auto par3 = alloc::brute_force_oracle(sc, 101);
    const auto ser3 = alloc::brute_force_oracle_serial(sc, 101);
    CHECK(par3.power == ser3.power);
    CHECK(par3.total_cost.value == ser3.total_cost.value);
}

TEST_CASE("sweep output is byte-identical across thread counts") {
#ifdef _OPENMP
    auto spec = harness::preset_paper();
    spec.loops.resize(2);
    for (auto& l : spec.loops) l.dim_m = 4;
    omp_set_num_threads(1);
    const auto rows1 = harness::run_sweep(spec, harness::SweepParam::PMax, 80.0, 95.0, 6,
                                          {"proposed", "max_min", "equal"},
                                          alloc::SolverOptions{});
    omp_set_num_threads(2);
    const auto rows2 = harness::run_sweep(spec, harness::SweepParam::PMax, 80.0, 95.0, 6,
                                          {"proposed", "max_min", "equal"},
                                          alloc::SolverOptions{});
    CHECK(harness::csv_text(rows1) == harness::csv_text(rows2));
#endif
}
