// Compares the OpenMP kernels against their serial references: dense
// matmul, the m=100 estimation fixed point, the allocation grid oracle and
// a budget sweep. Run manually; not part of ctest.
#include <chrono>
#include <cstdio>
#include <random>

#include "loopalloc/alloc.hpp"
#include "loopalloc/control.hpp"
#include "loopalloc/harness.hpp"
#include "loopalloc/mat.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace loopalloc;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

la::Mat random_mat(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    la::Mat m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
    return m;
}

template <class F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("openmp disabled: parallel paths fall back to serial\n");
#endif

    std::mt19937_64 rng(1);
    std::printf("\n-- dense matmul, serial vs parallel --\n");
    for (std::size_t n : {64, 100, 160, 256, 384}) {
        const auto a = random_mat(n, rng);
        const auto b = random_mat(n, rng);
        volatile double sink = 0.0;
        const double ts = time_best_of(5, [&] { sink = la::mul_serial(a, b)(0, 0); });
        const double tp = time_best_of(5, [&] { sink = la::mul(a, b)(0, 0); });
        std::printf("  n=%3zu  serial %8.3f ms   parallel %8.3f ms   speedup %.2fx\n", n,
                    ts * 1e3, tp * 1e3, ts / tp);
        (void)sink;
    }

    std::printf("\n-- estimation fixed point, m = 100 --\n");
    {
        const auto dyn = control::dynamics_from_entropy(24.0, 100, 0.01, 0.1);
#ifdef _OPENMP
        omp_set_num_threads(1);
#endif
        const double t1 = time_best_of(3, [&] { control::solve_estimation_riccati(dyn); });
#ifdef _OPENMP
        omp_set_num_threads(omp_get_num_procs());
#endif
        const double tn = time_best_of(3, [&] { control::solve_estimation_riccati(dyn); });
        std::printf("  1 thread %8.3f ms   all threads %8.3f ms   speedup %.2fx\n", t1 * 1e3,
                    tn * 1e3, t1 / tn);
    }

    std::printf("\n-- allocation grid oracle, K = 2, 2e6 points --\n");
    {
        alloc::Scenario sc;
        sc.bandwidth_hz = 15e3;
        sc.p_max = 60.0;
        for (double ig : {1.5, 8.0}) {
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
        const double ts =
            time_best_of(3, [&] { alloc::brute_force_oracle_serial(sc, 2'000'000); });
        const double tp = time_best_of(3, [&] { alloc::brute_force_oracle(sc, 2'000'000); });
        std::printf("  serial %8.3f ms   parallel %8.3f ms   speedup %.2fx\n", ts * 1e3,
                    tp * 1e3, ts / tp);
    }

    std::printf("\n-- budget sweep on the bundled preset, 12 points x 3 schemes --\n");
    {
        const auto spec = harness::preset_paper();
        const auto run = [&] {
            return harness::run_sweep(spec, harness::SweepParam::PMax, 80.0, 102.0, 12,
                                      {"proposed", "max_min", "max_sum"},
                                      alloc::SolverOptions{});
        };
#ifdef _OPENMP
        omp_set_num_threads(1);
#endif
        const double t1 = time_best_of(2, [&] { run(); });
#ifdef _OPENMP
        omp_set_num_threads(omp_get_num_procs());
#endif
        const double tn = time_best_of(2, [&] { run(); });
        std::printf("  1 thread %8.3f ms   all threads %8.3f ms   speedup %.2fx\n", t1 * 1e3,
                    tn * 1e3, t1 / tn);
    }
    return 0;
}
