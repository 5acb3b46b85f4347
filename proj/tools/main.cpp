#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loopalloc/errors.hpp"
#include "loopalloc/harness.hpp"
#include "loopalloc/verify.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void print_allocation(const loopalloc::alloc::Allocation& a) {
    std::printf("scheme %s\n", a.scheme.c_str());
    for (std::size_t k = 0; k < a.power.size(); ++k) {
        std::printf("  loop %zu: p = %.9e W, n = %lld, rate = %.9e bits, cost = ", k + 1,
                    a.power[k], static_cast<long long>(a.blocklength[k]), a.cycle_rate[k]);
        if (a.lqr_cost[k].stable)
            std::printf("%.9e\n", a.lqr_cost[k].value);
        else
            std::printf("unstable\n");
    }
    if (a.total_cost.stable)
        std::printf("  total cost = %.9e\n", a.total_cost.value);
    else
        std::printf("  total cost = unstable\n");
    if (a.kkt_residual) std::printf("  kkt residual = %.3e\n", *a.kkt_residual);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"power and blocklength allocation across control loops"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker thread count (0 = library default)");

    // solve
    auto* solve = app.add_subcommand("solve", "solve one scheme and write per-loop rows");
    std::string solve_scenario, solve_scheme = "proposed", solve_out;
    bool solve_closed_form = false;
    solve->add_option("--scenario", solve_scenario, "scenario JSON file")->required();
    solve->add_option("--scheme", solve_scheme,
                      "proposed|max_sum|max_min|modified_max_min|equal|shannon");
    solve->add_flag("--closed-form", solve_closed_form, "use the closed-form variant");
    solve->add_option("--out", solve_out, "output CSV path")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "sweep a parameter over a range of points");
    std::string sweep_scenario, sweep_param, sweep_schemes = "proposed", sweep_out;
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_steps = 0;
    sweep->add_option("--scenario", sweep_scenario, "scenario JSON file")->required();
    sweep->add_option("--param", sweep_param, "pmax|cycle_time|sensing_noise")->required();
    sweep->add_option("--from", sweep_from, "first sweep value")->required();
    sweep->add_option("--to", sweep_to, "last sweep value")->required();
    sweep->add_option("--steps", sweep_steps, "number of points (>= 2)")->required();
    sweep->add_option("--schemes", sweep_schemes, "comma-separated scheme list");
    sweep->add_option("--out", sweep_out, "output CSV path")->required();

    // oracle
    auto* oracle = app.add_subcommand("oracle", "exhaustive grid search (K <= 3)");
    std::string oracle_scenario;
    int oracle_grid = 10000;
    oracle->add_option("--scenario", oracle_scenario, "scenario JSON file")->required();
    oracle->add_option("--grid", oracle_grid, "grid points per free axis");

    // preset
    auto* preset = app.add_subcommand("preset", "emit a bundled scenario");
    std::string preset_name, preset_out;
    preset->add_option("name", preset_name, "preset name (paper)")->required();
    preset->add_option("--out", preset_out, "write to file instead of stdout");

    // verify
    app.add_subcommand("verify", "run the verification suite");

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    using namespace loopalloc;
    try {
        if (solve->parsed()) {
            const auto scenario = harness::load_scenario(solve_scenario);
            std::string scheme = solve_scheme;
            if (solve_closed_form) {
                if (scheme != "proposed" && scheme != "max_sum" && scheme != "max_min")
                    throw config_error("no closed form for scheme: " + scheme);
                scheme += "_cf";
            }
            const auto a = harness::run_scheme(scenario, scheme, alloc::SolverOptions{});
            harness::emit_csv(harness::rows_from_allocation(a, std::nullopt), solve_out);
            print_allocation(a);
            return kExitOk;
        }
        if (sweep->parsed()) {
            const auto spec = harness::load_spec(sweep_scenario);
            const auto rows = harness::run_sweep(spec, harness::sweep_param_from_name(sweep_param),
                                                 sweep_from, sweep_to, sweep_steps,
                                                 split_list(sweep_schemes),
                                                 alloc::SolverOptions{});
            harness::emit_csv(rows, sweep_out);
            std::printf("wrote %zu rows to %s\n", rows.size(), sweep_out.c_str());
            return kExitOk;
        }
        if (oracle->parsed()) {
            const auto scenario = harness::load_scenario(oracle_scenario);
            const auto a = alloc::brute_force_oracle(scenario, oracle_grid);
            print_allocation(a);
            return kExitOk;
        }
        if (preset->parsed()) {
            if (preset_name != "paper") throw config_error("unknown preset: " + preset_name);
            const auto spec = harness::preset_paper();
            if (preset_out.empty())
                std::cout << harness::spec_to_json_text(spec);
            else
                harness::save_spec(spec, preset_out);
            return kExitOk;
        }
        // verify
        return verify::run_and_report(std::cout) == 0 ? kExitOk : kExitInfeasible;
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const infeasible_error& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kExitInfeasible;
    } catch (const convergence_error& e) {
        std::fprintf(stderr, "no convergence: %s\n", e.what());
        return kExitNoConvergence;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
}
