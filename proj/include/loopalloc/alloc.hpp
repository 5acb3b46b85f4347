#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loopalloc/channel.hpp"
#include "loopalloc/control.hpp"
#include "loopalloc/fbl.hpp"

namespace loopalloc::alloc {

// One loop of a scenario: link, coding target, control constants, timing.
struct ScenarioLoop {
    channel::LinkBudget budget;
    double error_prob = 1e-6;
    double noise_power = 1.0;  // watts
    control::ControlConstants constants;
    double cycle_time_s = 0.0;
    double overhead_s = 0.0;  // sensing + computing + actuation time
};

struct Scenario {
    std::vector<ScenarioLoop> loops;
    double bandwidth_hz = 0.0;
    double p_max = 0.0;  // watts, shared budget
    bool include_prop_delay = false;
};

struct SolverOptions {
    double power_tol = 1e-12;  // relative, inner/outer bisections
    double cost_tol = 1e-9;    // relative, budget residual
    double sca_tol = 1e-6;     // relative objective change terminating SCA
    int max_iters = 500;       // outer SCA cap
    int oracle_grid = 10000;
};

struct Allocation {
    std::string scheme;
    std::vector<double> power;
    std::vector<std::int64_t> blocklength;
    std::vector<double> cycle_rate;
    std::vector<control::LqrCost> lqr_cost;
    control::LqrCost total_cost;
    std::optional<double> dual_value;    // lambda (may underflow to 0; see log_dual)
    std::optional<double> log_dual;      // ln(lambda), always finite when present
    std::optional<double> kkt_residual;  // max relative stationarity violation
    int iterations = 0;
    bool clamped = false;  // a closed form clipped negative powers
};

// Which rate expression drives a solver. Final reporting always uses the
// exact short-blocklength rate regardless of what the solver optimized.
enum class RateModel { Fbl, Shannon };

// T_k = cycle_time - overhead - (prop delay if included); n* = floor(B T_k).
// Throws infeasible_error when the window closes or holds less than one
// symbol.
std::pair<double, std::int64_t> transmission_window_and_blocklength(double cycle_time_s,
                                                                    double overhead_s,
                                                                    double bandwidth_hz,
                                                                    double prop_delay_s,
                                                                    bool include_prop_delay);

// Minimum power at which the cycle rate reaches the loop's entropy, by
// bisection on [0, p_max]; |R - h| <= 1e-8 bits at the returned point.
// Throws infeasible_error naming the loop when even p_max is not enough.
double stability_threshold(const Scenario& scenario, std::size_t loop_index,
                           RateModel model = RateModel::Fbl);

// Budget-constrained minimization of the summed rate-cost (dual bisection
// on the budget multiplier, per-loop stationarity roots in log space).
Allocation solve_proposed(const Scenario& scenario, const SolverOptions& options);

// High-SNR closed form of the proposed allocation; clips negative powers
// to zero and rescales the remainder.
Allocation closed_form_proposed(const Scenario& scenario);

// Sum-rate maximization via successive linearization of the dispersion
// penalty; closed form is threshold-clamped water-filling.
Allocation solve_max_sum(const Scenario& scenario, const SolverOptions& options);
Allocation closed_form_max_sum(const Scenario& scenario);

// Max-min rate via the same linearization on the epigraph form; at the
// optimum all unclamped cycle rates coincide.
Allocation solve_max_min(const Scenario& scenario, const SolverOptions& options);
Allocation closed_form_max_min(const Scenario& scenario);

// Max-min on R_k - (m/2) log2(G_k): the rate fairness objective shifted by
// each loop's sensing-and-control weight.
Allocation solve_modified_max_min(const Scenario& scenario, const SolverOptions& options);

// p_k = p_max / K, evaluation only; loops may come out unstable.
Allocation equal_power(const Scenario& scenario);

// The proposed solver driven by the Shannon rate, re-evaluated under the
// exact short-blocklength rate for reporting.
Allocation shannon_baseline(const Scenario& scenario, const SolverOptions& options);

// Exhaustive search over {p >= p_th, sum p = p_max} with `grid` points per
// free axis; K <= 3. The serial variant is the reference the parallel one
// is tested against.
Allocation brute_force_oracle(const Scenario& scenario, int grid);
Allocation brute_force_oracle_serial(const Scenario& scenario, int grid);

// Fills rates and costs for given powers; when log_dual is supplied the
// stationarity residual of the budget-constrained problem is reported.
Allocation evaluate_allocation(const Scenario& scenario, const std::vector<double>& powers,
                               std::optional<double> log_dual = std::nullopt);

}  // namespace loopalloc::alloc
