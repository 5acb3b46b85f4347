#include "loopalloc/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "loopalloc/errors.hpp"

namespace loopalloc::harness {

using nlohmann::ordered_json;

ScenarioSpec preset_paper() {
    ScenarioSpec s;
    s.global.bandwidth_hz = 15e3;
    s.global.pmax_dbw = 10.0;
    s.global.error_prob = 1e-6;
    s.global.include_prop_delay = false;

    s.channel.carrier_mhz = 2000.0;
    s.channel.p_los = 0.919;
    s.channel.sf1_db = 1.14;
    s.channel.sf2_db = 8.78;
    s.channel.cl_db = 18.42;
    s.channel.gmax_dbi = 23.0;
    s.channel.theta3db_deg = 30.0;
    s.channel.noise_dbm = -110.0;
    s.channel.spacecraft_height_m = 3000e3;

    const double offsets[] = {1000e3, 2000e3, 3000e3, 4000e3};
    const double entropies[] = {48.0, 36.0, 24.0, 12.0};
    for (int k = 0; k < 4; ++k) {
        ScenarioSpec::Loop l;
        l.offset_m = offsets[k];
        l.entropy_bits = entropies[k];
        l.dim_m = 100;
        l.sigma_v = 0.01;
        l.sigma_w = 0.0;
        l.cycle_time_s = 0.05;
        l.overhead_s = 0.04;
        s.loops.push_back(l);
    }
    return s;
}

namespace {

const ordered_json& need(const ordered_json& j, const std::string& key,
                         const std::string& context) {
    const auto it = j.find(key);
    if (it == j.end()) throw config_error("missing field \"" + context + key + "\"");
    return *it;
}

double need_number(const ordered_json& j, const std::string& key, const std::string& context) {
    const auto& v = need(j, key, context);
    if (!v.is_number()) throw config_error("field \"" + context + key + "\" must be a number");
    return v.get<double>();
}

std::int64_t need_integer(const ordered_json& j, const std::string& key,
                          const std::string& context) {
    const auto& v = need(j, key, context);
    if (!v.is_number_integer())
        throw config_error("field \"" + context + key + "\" must be an integer");
    return v.get<std::int64_t>();
}

bool need_bool(const ordered_json& j, const std::string& key, const std::string& context) {
    const auto& v = need(j, key, context);
    if (!v.is_boolean()) throw config_error("field \"" + context + key + "\" must be a boolean");
    return v.get<bool>();
}

}  // namespace

ScenarioSpec spec_from_json_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw config_error(std::string("scenario parse error: ") + e.what());
    }

    ScenarioSpec s;
    const auto& g = need(j, "global", "");
    s.global.bandwidth_hz = need_number(g, "bandwidth_hz", "global.");
    s.global.pmax_dbw = need_number(g, "pmax_dbw", "global.");
    s.global.error_prob = need_number(g, "error_prob", "global.");
    s.global.include_prop_delay = need_bool(g, "include_prop_delay", "global.");

    const auto& c = need(j, "channel", "");
    s.channel.carrier_mhz = need_number(c, "carrier_mhz", "channel.");
    s.channel.p_los = need_number(c, "p_los", "channel.");
    s.channel.sf1_db = need_number(c, "sf1_db", "channel.");
    s.channel.sf2_db = need_number(c, "sf2_db", "channel.");
    s.channel.cl_db = need_number(c, "cl_db", "channel.");
    s.channel.gmax_dbi = need_number(c, "gmax_dbi", "channel.");
    s.channel.theta3db_deg = need_number(c, "theta3db_deg", "channel.");
    s.channel.noise_dbm = need_number(c, "noise_dbm", "channel.");
    s.channel.spacecraft_height_m = need_number(c, "spacecraft_height_m", "channel.");

    const auto& loops = need(j, "loops", "");
    if (!loops.is_array() || loops.empty())
        throw config_error("field \"loops\" must be a non-empty array");
    for (std::size_t k = 0; k < loops.size(); ++k) {
        const std::string ctx = "loops[" + std::to_string(k) + "].";
        const auto& lj = loops[k];
        ScenarioSpec::Loop l;
        l.offset_m = need_number(lj, "offset_m", ctx);
        l.entropy_bits = need_number(lj, "entropy_bits", ctx);
        l.dim_m = need_integer(lj, "dim_m", ctx);
        l.sigma_v = need_number(lj, "sigma_v", ctx);
        l.sigma_w = need_number(lj, "sigma_w", ctx);
        l.cycle_time_s = need_number(lj, "cycle_time_s", ctx);
        l.overhead_s = need_number(lj, "overhead_s", ctx);
        s.loops.push_back(l);
    }
    return s;
}

std::string spec_to_json_text(const ScenarioSpec& s) {
    ordered_json j;
    j["global"] = {{"bandwidth_hz", s.global.bandwidth_hz},
                   {"pmax_dbw", s.global.pmax_dbw},
                   {"error_prob", s.global.error_prob},
                   {"include_prop_delay", s.global.include_prop_delay}};
    j["channel"] = {{"carrier_mhz", s.channel.carrier_mhz},
                    {"p_los", s.channel.p_los},
                    {"sf1_db", s.channel.sf1_db},
                    {"sf2_db", s.channel.sf2_db},
                    {"cl_db", s.channel.cl_db},
                    {"gmax_dbi", s.channel.gmax_dbi},
                    {"theta3db_deg", s.channel.theta3db_deg},
                    {"noise_dbm", s.channel.noise_dbm},
                    {"spacecraft_height_m", s.channel.spacecraft_height_m}};
    j["loops"] = ordered_json::array();
    for (const auto& l : s.loops) {
        j["loops"].push_back({{"offset_m", l.offset_m},
                              {"entropy_bits", l.entropy_bits},
                              {"dim_m", l.dim_m},
                              {"sigma_v", l.sigma_v},
                              {"sigma_w", l.sigma_w},
                              {"cycle_time_s", l.cycle_time_s},
                              {"overhead_s", l.overhead_s}});
    }
    return j.dump(2) + "\n";
}

ScenarioSpec load_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return spec_from_json_text(buf.str());
}

void save_spec(const ScenarioSpec& spec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write scenario file: " + path);
    out << spec_to_json_text(spec);
    if (!out) throw config_error("write failed: " + path);
}

alloc::Scenario build_scenario(const ScenarioSpec& spec) {
    channel::ChannelParams params;
    params.carrier_freq_mhz = spec.channel.carrier_mhz;
    params.p_los = spec.channel.p_los;
    params.sf1_db = spec.channel.sf1_db;
    params.sf2_db = spec.channel.sf2_db;
    params.cl_db = spec.channel.cl_db;
    params.g_max_linear = channel::db_to_linear(spec.channel.gmax_dbi);
    params.theta_3db_rad = channel::deg_to_rad(spec.channel.theta3db_deg);
    params.noise_power_watt = channel::dbm_to_watt(spec.channel.noise_dbm);
    params.validate();

    alloc::Scenario sc;
    sc.bandwidth_hz = spec.global.bandwidth_hz;
    sc.p_max = channel::dbw_to_watt(spec.global.pmax_dbw);
    sc.include_prop_delay = spec.global.include_prop_delay;

    for (const auto& l : spec.loops) {
        alloc::ScenarioLoop sl;
        const auto geom =
            channel::geometry_from_layout(spec.channel.spacecraft_height_m, l.offset_m);
        sl.budget = channel::link_budget(geom, params);
        sl.error_prob = spec.global.error_prob;
        sl.noise_power = params.noise_power_watt;
        const auto dyn = control::dynamics_from_entropy(
            l.entropy_bits, static_cast<std::size_t>(l.dim_m), l.sigma_v, l.sigma_w);
        sl.constants = control::control_constants(dyn);
        sl.cycle_time_s = l.cycle_time_s;
        sl.overhead_s = l.overhead_s;
        sc.loops.push_back(std::move(sl));
    }
    return sc;
}

alloc::Scenario load_scenario(const std::string& path) { return build_scenario(load_spec(path)); }

std::vector<ResultRow> rows_from_allocation(const alloc::Allocation& a,
                                            std::optional<double> sweep_param) {
    std::vector<ResultRow> rows;
    rows.reserve(a.power.size());
    for (std::size_t k = 0; k < a.power.size(); ++k) {
        ResultRow r;
        r.sweep_param = sweep_param;
        r.scheme = a.scheme;
        r.loop = static_cast<int>(k + 1);
        r.p_watt = a.power[k];
        r.n_symbols = a.blocklength[k];
        r.cycle_rate_bits = a.cycle_rate[k];
        r.lqr_cost = a.lqr_cost[k];
        r.stable = a.lqr_cost[k].stable;
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

std::string sci9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.8e", v);
    return buf;
}

}  // namespace

std::string csv_text(const std::vector<ResultRow>& rows) {
    std::string out = "sweep_param,scheme,loop,p_watt,n_symbols,cycle_rate_bits,lqr_cost,stable\n";
    for (const auto& r : rows) {
        if (r.sweep_param) out += sci9(*r.sweep_param);
        out += ',';
        out += r.scheme;
        out += ',';
        out += std::to_string(r.loop);
        out += ',';
        out += sci9(r.p_watt);
        out += ',';
        out += std::to_string(r.n_symbols);
        out += ',';
        out += sci9(r.cycle_rate_bits);
        out += ',';
        out += r.lqr_cost.stable ? sci9(r.lqr_cost.value) : "unstable";
        out += ',';
        out += r.stable ? "true" : "false";
        out += '\n';
    }
    return out;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write csv file: " + path);
    out << csv_text(rows);
    if (!out) throw config_error("write failed: " + path);
}

alloc::Allocation run_scheme(const alloc::Scenario& scenario, const std::string& scheme,
                             const alloc::SolverOptions& options) {
    if (scheme == "proposed") return alloc::solve_proposed(scenario, options);
    if (scheme == "proposed_cf") return alloc::closed_form_proposed(scenario);
    if (scheme == "max_sum") return alloc::solve_max_sum(scenario, options);
    if (scheme == "max_sum_cf") return alloc::closed_form_max_sum(scenario);
    if (scheme == "max_min") return alloc::solve_max_min(scenario, options);
    if (scheme == "max_min_cf") return alloc::closed_form_max_min(scenario);
    if (scheme == "modified_max_min") return alloc::solve_modified_max_min(scenario, options);
    if (scheme == "equal") return alloc::equal_power(scenario);
    if (scheme == "shannon") return alloc::shannon_baseline(scenario, options);
    throw config_error("unknown scheme: " + scheme);
}

bool scheme_known(const std::string& scheme) {
    static const char* names[] = {"proposed", "proposed_cf",      "max_sum",
                                  "max_sum_cf", "max_min",        "max_min_cf",
                                  "modified_max_min", "equal",    "shannon"};
    for (const char* n : names)
        if (scheme == n) return true;
    return false;
}

SweepParam sweep_param_from_name(const std::string& name) {
    if (name == "pmax") return SweepParam::PMax;
    if (name == "cycle_time") return SweepParam::CycleTime;
    if (name == "sensing_noise") return SweepParam::SensingNoise;
    throw config_error("unknown sweep parameter: " + name);
}

namespace {

ScenarioSpec spec_at_point(const ScenarioSpec& base, SweepParam param, double value) {
    ScenarioSpec s = base;
    switch (param) {
        case SweepParam::PMax:
            s.global.pmax_dbw = value;
            break;
        case SweepParam::CycleTime:
            for (auto& l : s.loops) l.cycle_time_s = value;
            break;
        case SweepParam::SensingNoise:
            for (auto& l : s.loops) l.sigma_w = value;
            break;
    }
    return s;
}

}  // namespace

std::vector<ResultRow> run_sweep(const ScenarioSpec& spec, SweepParam param, double from,
                                 double to, int steps, const std::vector<std::string>& schemes,
                                 const alloc::SolverOptions& options) {
    if (steps < 2) throw config_error("sweep needs at least 2 points");
    if (schemes.empty()) throw config_error("sweep needs at least one scheme");
    for (const auto& s : schemes)
        if (!scheme_known(s)) throw config_error("unknown scheme: " + s);

    const std::size_t loops_n = spec.loops.size();
    const std::size_t per_point = schemes.size() * loops_n;
    std::vector<ResultRow> rows(static_cast<std::size_t>(steps) * per_point);

    // Points are independent; rows land at fixed offsets, so the output is
    // identical for any thread count.
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < steps; ++i) {
        const double value = from + (to - from) * static_cast<double>(i) /
                                        static_cast<double>(steps - 1);
        const ScenarioSpec point_spec = spec_at_point(spec, param, value);

        alloc::Scenario scenario;
        bool built = false;
        try {
            scenario = build_scenario(point_spec);
            built = true;
        } catch (const std::exception&) {
            built = false;
        }

        for (std::size_t s = 0; s < schemes.size(); ++s) {
            std::vector<ResultRow> chunk;
            if (built) {
                try {
                    const auto a = run_scheme(scenario, schemes[s], options);
                    chunk = rows_from_allocation(a, value);
                } catch (const std::exception&) {
                    // infeasible or non-convergent point: record, don't abort
                    chunk.clear();
                }
            }
            if (chunk.empty()) {
                // Infeasible point: keep the rows, flagged unstable.
                for (std::size_t k = 0; k < loops_n; ++k) {
                    ResultRow r;
                    r.sweep_param = value;
                    r.scheme = schemes[s];
                    r.loop = static_cast<int>(k + 1);
                    r.p_watt = 0.0;
                    r.n_symbols = 0;
                    r.cycle_rate_bits = 0.0;
                    r.lqr_cost = control::LqrCost::unstable();
                    r.stable = false;
                    chunk.push_back(std::move(r));
                }
            }
            for (std::size_t k = 0; k < loops_n; ++k)
                rows[static_cast<std::size_t>(i) * per_point + s * loops_n + k] =
                    std::move(chunk[k]);
        }
    }
    return rows;
}

}  // namespace loopalloc::harness
