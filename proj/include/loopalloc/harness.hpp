#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loopalloc/alloc.hpp"

namespace loopalloc::harness {

// On-disk scenario document. Field names and units match the JSON schema;
// conversions to watts/meters/radians happen in build_scenario.
struct ScenarioSpec {
    struct Global {
        double bandwidth_hz = 0.0;
        double pmax_dbw = 0.0;
        double error_prob = 1e-6;
        bool include_prop_delay = false;
    };
    struct Channel {
        double carrier_mhz = 0.0;
        double p_los = 1.0;
        double sf1_db = 0.0;
        double sf2_db = 0.0;
        double cl_db = 0.0;
        double gmax_dbi = 0.0;
        double theta3db_deg = 30.0;
        double noise_dbm = 0.0;
        double spacecraft_height_m = 0.0;
    };
    struct Loop {
        double offset_m = 0.0;
        double entropy_bits = 1.0;
        std::int64_t dim_m = 1;
        double sigma_v = 0.0;
        double sigma_w = 0.0;
        double cycle_time_s = 0.0;
        double overhead_s = 0.0;
    };
    Global global;
    Channel channel;
    std::vector<Loop> loops;
};

// Bundled reference scenario "paper": the four-probe orbital layout this
// tool ships as its default working example.
ScenarioSpec preset_paper();

ScenarioSpec spec_from_json_text(const std::string& text);
std::string spec_to_json_text(const ScenarioSpec& spec);

// Throws config_error naming the first missing or ill-typed field.
ScenarioSpec load_spec(const std::string& path);
void save_spec(const ScenarioSpec& spec, const std::string& path);

// Unit conversion + link budgets + control constants.
alloc::Scenario build_scenario(const ScenarioSpec& spec);
alloc::Scenario load_scenario(const std::string& path);

struct ResultRow {
    std::optional<double> sweep_param;
    std::string scheme;
    int loop = 0;  // 1-based
    double p_watt = 0.0;
    std::int64_t n_symbols = 0;
    double cycle_rate_bits = 0.0;
    control::LqrCost lqr_cost;
    bool stable = false;
};

std::vector<ResultRow> rows_from_allocation(const alloc::Allocation& a,
                                            std::optional<double> sweep_param);

// Fixed header, scientific notation with 9 significant digits, "unstable"
// sentinel, LF endings; byte-identical across runs and thread counts.
std::string csv_text(const std::vector<ResultRow>& rows);
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);

// Solver dispatch by scheme tag: proposed, max_sum, max_min,
// modified_max_min, equal, shannon, plus _cf closed forms.
alloc::Allocation run_scheme(const alloc::Scenario& scenario, const std::string& scheme,
                             const alloc::SolverOptions& options);
bool scheme_known(const std::string& scheme);

enum class SweepParam { PMax, CycleTime, SensingNoise };
SweepParam sweep_param_from_name(const std::string& name);

// Evaluates every scheme at every sweep point; rows come back in
// deterministic (point, scheme, loop) order and infeasible points are
// recorded (stable=false) rather than aborting. Points may be evaluated
// concurrently.
std::vector<ResultRow> run_sweep(const ScenarioSpec& spec, SweepParam param, double from,
                                 double to, int steps, const std::vector<std::string>& schemes,
                                 const alloc::SolverOptions& options);

}  // namespace loopalloc::harness
