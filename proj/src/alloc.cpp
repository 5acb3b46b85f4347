#include "loopalloc/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "loopalloc/errors.hpp"
#include "loopalloc/rootfind.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace loopalloc::alloc {

namespace {

constexpr double kLn2 = 0.6931471805599453094;
constexpr double kInf = std::numeric_limits<double>::infinity();

// floor() of a product whose factors came through binary floating point;
// values within 1e-9 relative of an integer snap to it first.
double floor_snapped(double x) {
    const double r = std::nearbyint(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return r;
    return std::floor(x);
}

// ln(e^x - 1), stable across the full positive range.
double log_expm1(double x) {
    return x < 30.0 ? std::log(std::expm1(x)) : x + std::log1p(-std::exp(-x));
}

struct PreparedLoop {
    double gain = 0.0;
    double noise = 1.0;
    double window_s = 0.0;
    std::int64_t n = 1;
    fbl::FblParams params;
    const control::ControlConstants* ctl = nullptr;
    double p_th = 0.0;
};

double model_rate(const PreparedLoop& lp, RateModel model, double p) {
    if (model == RateModel::Shannon) {
        const double snr = lp.gain * p / lp.noise;
        return static_cast<double>(lp.n) * std::log2(1.0 + snr);
    }
    return fbl::cycle_rate(p, lp.gain, lp.params, lp.noise);
}

double model_rate_d1(const PreparedLoop& lp, RateModel model, double p) {
    const double dsnr = lp.gain / lp.noise;
    const double snr = dsnr * p;
    const double n = static_cast<double>(lp.n);
    if (model == RateModel::Shannon) return n * fbl::kLog2E / (1.0 + snr) * dsnr;
    return (1.0 - lp.params.error_prob) * n * fbl::rate_d1(snr, lp.params) * dsnr;
}

double threshold_for(const PreparedLoop& lp, double p_max, RateModel model,
                     std::size_t loop_index) {
    const double h = lp.ctl->entropy;
    if (h <= 0.0) return 0.0;
    const auto gap = [&](double p) { return model_rate(lp, model, p) - h; };
    if (gap(p_max) < 0.0)
        throw infeasible_error("loop " + std::to_string(loop_index + 1) +
                               " infeasible: cycle rate at p_max stays below its entropy of " +
                               std::to_string(h) + " bits");
    // R < h everywhere left of the crossing (the rate first dips negative),
    // so the sign change on [0, p_max] is unique.
    const double p_th = bisect(gap, 0.0, p_max, 0.0, 200);
    if (std::abs(gap(p_th)) > 1e-8)
        throw convergence_error("stability threshold: residual above 1e-8 bits");
    return p_th;
}

PreparedLoop prepare_loop(const Scenario& scenario, std::size_t k, RateModel model,
                          bool with_threshold) {
    const ScenarioLoop& sl = scenario.loops[k];
    PreparedLoop lp;
    lp.gain = sl.budget.channel_gain;
    lp.noise = sl.noise_power;
    lp.ctl = &sl.constants;
    try {
        auto [window, n] = transmission_window_and_blocklength(
            sl.cycle_time_s, sl.overhead_s, scenario.bandwidth_hz, sl.budget.prop_delay_s,
            scenario.include_prop_delay);
        lp.window_s = window;
        lp.n = n;
    } catch (const infeasible_error& e) {
        throw infeasible_error("loop " + std::to_string(k + 1) + ": " + e.what());
    }
    lp.params = fbl::FblParams(lp.n, sl.error_prob);
    if (with_threshold) lp.p_th = threshold_for(lp, scenario.p_max, model, k);
    return lp;
}

std::vector<PreparedLoop> prepare(const Scenario& scenario, RateModel model,
                                  bool with_thresholds) {
    if (scenario.loops.empty()) throw std::domain_error("scenario has no loops");
    if (!(scenario.p_max > 0.0)) throw std::domain_error("p_max must be positive");
    std::vector<PreparedLoop> out;
    out.reserve(scenario.loops.size());
    for (std::size_t k = 0; k < scenario.loops.size(); ++k)
        out.push_back(prepare_loop(scenario, k, model, with_thresholds));
    return out;
}

double sum_thresholds(const std::vector<PreparedLoop>& loops) {
    double s = 0.0;
    for (const auto& lp : loops) s += lp.p_th;
    return s;
}

void require_scenario_feasible(const std::vector<PreparedLoop>& loops, double p_max) {
    const double s = sum_thresholds(loops);
    if (s > p_max * (1.0 + 1e-12))
        throw infeasible_error("scenario infeasible: stability thresholds sum to " +
                               std::to_string(s) + " W against a budget of " +
                               std::to_string(p_max) + " W");
}

// ln(-dL/dp) at power p. +inf at/below the stability threshold (the cost
// slope blows up there), -inf for loops with a flat cost (|det NM| = 0).
double log_neg_cost_slope(const PreparedLoop& lp, RateModel model, double p) {
    const double m = static_cast<double>(lp.ctl->dim);
    const double c = m * lp.ctl->nm_det_root;
    if (c == 0.0) return -kInf;
    const double omega = model_rate(lp, model, p) - lp.ctl->entropy;
    if (!(omega > 0.0)) return kInf;
    const double beta = 2.0 * kLn2 / m;
    const double x = beta * omega;
    const double rp = model_rate_d1(lp, model, p);
    return std::log(c * beta * rp) + x - 2.0 * log_expm1(x);
}

// Per-loop stationarity root: the p in [p_th, p_cap] with -L'(p) = lambda,
// clamped at both ends. -L' decreases monotonically on the stability
// domain (the cost is convex), so bisection applies.
double power_at_log_dual(const PreparedLoop& lp, RateModel model, double log_lambda,
                         double p_cap) {
    if (lp.ctl->nm_det_root == 0.0) return lp.p_th;
    const auto f = [&](double p) { return log_neg_cost_slope(lp, model, p) - log_lambda; };
    if (f(p_cap) >= 0.0) return p_cap;
    return bisect(f, lp.p_th, p_cap, 0.0, 200);
}

control::LqrCost total_cost_of(const std::vector<PreparedLoop>& loops,
                               const std::vector<double>& powers) {
    double sum = 0.0;
    for (std::size_t k = 0; k < loops.size(); ++k) {
        const auto c =
            control::rate_cost(model_rate(loops[k], RateModel::Fbl, powers[k]), *loops[k].ctl);
        if (!c.stable) return control::LqrCost::unstable();
        sum += c.value;
    }
    return control::LqrCost::of(sum);
}

void rescale_to_budget(std::vector<double>& powers, double p_max) {
    double s = 0.0;
    for (double p : powers) s += p;
    if (s <= 0.0) return;
    const double scale = p_max / s;
    for (double& p : powers) p *= scale;
}

Allocation finish(const Scenario& scenario, std::vector<double> powers, std::string scheme,
                  std::optional<double> log_dual, int iterations) {
    Allocation a = evaluate_allocation(scenario, powers, log_dual);
    a.scheme = std::move(scheme);
    a.iterations = iterations;
    return a;
}

// ------------------------------------------------------------------
// Budget-constrained cost minimization: outer bisection on ln(lambda),
// inner per-loop stationarity roots.
// ------------------------------------------------------------------

struct DualSolve {
    std::vector<double> powers;
    double log_lambda = 0.0;
    int iterations = 0;
};

DualSolve solve_budget_dual(const Scenario& scenario, const std::vector<PreparedLoop>& loops,
                            RateModel model, const SolverOptions& options) {
    const std::size_t K = loops.size();
    const double p_max = scenario.p_max;
    require_scenario_feasible(loops, p_max);

    DualSolve out;
    out.powers.assign(K, 0.0);

    const double slack = p_max - sum_thresholds(loops);
    bool any_curved = false;
    for (const auto& lp : loops) any_curved |= lp.ctl->nm_det_root > 0.0;
    if (!any_curved || slack <= p_max * 1e-15) {
        // Flat objective or no slack: thresholds plus an even split of the
        // remainder is optimal.
        for (std::size_t k = 0; k < K; ++k)
            out.powers[k] = loops[k].p_th + slack / static_cast<double>(K);
        rescale_to_budget(out.powers, p_max);
        return out;
    }

    double lo = kInf, hi = -kInf;
    for (const auto& lp : loops) {
        if (lp.ctl->nm_det_root == 0.0) continue;
        lo = std::min(lo, log_neg_cost_slope(lp, model, p_max));
        hi = std::max(hi, log_neg_cost_slope(lp, model, lp.p_th + slack * 1e-12));
    }

    const auto budget_gap = [&](double log_lambda) {
        double s = 0.0;
        for (const auto& lp : loops) s += power_at_log_dual(lp, model, log_lambda, p_max);
        return s - p_max;
    };
    // budget_gap(lo) >= 0 (some loop takes the whole budget), budget_gap(hi)
    // <= 0 (everyone hugs its threshold); the gap is decreasing in lambda.
    const double lam_tol = std::min(options.power_tol, 1e-12);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (budget_gap(mid) >= 0.0)
            lo = mid;
        else
            hi = mid;
        out.iterations = it + 1;
        if (hi - lo <= lam_tol * std::max(1.0, std::abs(mid))) break;
    }
    out.log_lambda = 0.5 * (lo + hi);
    for (std::size_t k = 0; k < K; ++k)
        out.powers[k] = power_at_log_dual(loops[k], model, out.log_lambda, p_max);
    rescale_to_budget(out.powers, p_max);
    return out;
}

// ------------------------------------------------------------------
// Successive linearization of the dispersion penalty.
// ------------------------------------------------------------------

// Rate with sqrt(V) replaced by its tangent at the anchor:
//   R~(p) = A log2(1 + a p) - coef (sqrtV(anchor) + dslope (p - anchor)).
struct LinearizedRate {
    double big_a = 0.0;   // (1-eps) n
    double coef = 0.0;    // (1-eps) sqrt(n) Q^-1(eps)
    double a = 0.0;       // gain / noise
    double const_term = 0.0;
    double slope = 0.0;   // coef * d sqrtV/dp at the anchor

    double value(double p) const {
        return big_a * std::log2(1.0 + a * p) - const_term - slope * p;
    }
};

LinearizedRate make_linearized(const PreparedLoop& lp, double anchor_power) {
    LinearizedRate lin;
    lin.a = lp.gain / lp.noise;
    const double n = static_cast<double>(lp.n);
    const double one_m_eps = 1.0 - lp.params.error_prob;
    const double qinv = lp.params.eta * std::sqrt(n);
    lin.big_a = one_m_eps * n;
    lin.coef = one_m_eps * std::sqrt(n) * qinv;
    // The dispersion slope diverges at zero power; anchor at least at
    // snr = 1e-12 so threshold-zero loops still produce a finite tangent.
    const double snr = std::max(lin.a * anchor_power, 1e-12);
    const double s = std::sqrt(snr * (snr + 2.0));
    const double sqv = fbl::kLog2E * s / (1.0 + snr);
    const double dslope = fbl::kLog2E * lin.a / ((1.0 + snr) * (1.0 + snr) * s);
    lin.slope = lin.coef * dslope;
    lin.const_term = lin.coef * (sqv - dslope * (snr / lin.a));
    return lin;
}

struct ScaResult {
    std::vector<double> powers;
    int iterations = 0;
};

// Water-filling on the linearized sum rate, thresholds as floors.
std::vector<double> max_sum_subproblem(const std::vector<PreparedLoop>& loops,
                                       const std::vector<LinearizedRate>& lins, double p_max) {
    const std::size_t K = loops.size();
    const auto power_at = [&](std::size_t k, double mu) {
        const double p =
            lins[k].big_a * fbl::kLog2E / (mu + lins[k].slope) - 1.0 / lins[k].a;
        return std::max(p, loops[k].p_th);
    };
    const auto total = [&](double mu) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += power_at(k, mu);
        return s;
    };
    double mu = 0.0;
    if (total(0.0) > p_max) {
        double hi = 1.0;
        for (std::size_t k = 0; k < K; ++k)
            hi = std::max(hi, lins[k].big_a * fbl::kLog2E / (loops[k].p_th + 1.0 / lins[k].a) -
                                  lins[k].slope);
        hi = 2.0 * hi + 1.0;
        mu = bisect([&](double m) { return total(m) - p_max; }, 0.0, hi, 0.0, 200);
    }
    std::vector<double> p(K);
    for (std::size_t k = 0; k < K; ++k) p[k] = power_at(k, mu);
    return p;
}

ScaResult sca_max_sum(const Scenario& scenario, const std::vector<PreparedLoop>& loops,
                      const SolverOptions& options) {
    const std::size_t K = loops.size();
    require_scenario_feasible(loops, scenario.p_max);

    ScaResult out;
    out.powers.resize(K);
    for (std::size_t k = 0; k < K; ++k) out.powers[k] = loops[k].p_th;

    double obj_prev = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        obj_prev += model_rate(loops[k], RateModel::Fbl, out.powers[k]);

    for (int it = 1; it <= options.max_iters; ++it) {
        std::vector<LinearizedRate> lins;
        lins.reserve(K);
        for (std::size_t k = 0; k < K; ++k)
            lins.push_back(make_linearized(loops[k], out.powers[k]));
        out.powers = max_sum_subproblem(loops, lins, scenario.p_max);
        out.iterations = it;

        double obj = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            obj += model_rate(loops[k], RateModel::Fbl, out.powers[k]);
        const bool done =
            std::abs(obj - obj_prev) <= options.sca_tol * std::max(std::abs(obj_prev), 1e-30);
        obj_prev = obj;
        if (done) {
            rescale_to_budget(out.powers, scenario.p_max);
            return out;
        }
    }
    throw convergence_error("max-sum linearization did not settle within the iteration cap");
}

// Smallest power with R~(p) >= target, or +inf when the tangent model
// cannot reach it; used by the epigraph bisection.
double linearized_inverse(const PreparedLoop& lp, const LinearizedRate& lin, double target) {
    if (lin.value(lp.p_th) >= target) return lp.p_th;
    const double p_peak = lin.big_a * fbl::kLog2E / lin.slope - 1.0 / lin.a;
    if (!(p_peak > lp.p_th) || lin.value(p_peak) < target) return kInf;
    return bisect([&](double p) { return lin.value(p) - target; }, lp.p_th, p_peak, 0.0, 200);
}

ScaResult sca_max_min(const Scenario& scenario, const std::vector<PreparedLoop>& loops,
                      const SolverOptions& options, const std::vector<double>& offsets) {
    const std::size_t K = loops.size();
    require_scenario_feasible(loops, scenario.p_max);

    ScaResult out;
    out.powers.resize(K);
    for (std::size_t k = 0; k < K; ++k) out.powers[k] = loops[k].p_th;

    const auto true_metric = [&](const std::vector<double>& p) {
        double m = kInf;
        for (std::size_t k = 0; k < K; ++k)
            m = std::min(m, model_rate(loops[k], RateModel::Fbl, p[k]) - offsets[k]);
        return m;
    };
    double metric_prev = true_metric(out.powers);

    for (int it = 1; it <= options.max_iters; ++it) {
        std::vector<LinearizedRate> lins;
        lins.reserve(K);
        for (std::size_t k = 0; k < K; ++k)
            lins.push_back(make_linearized(loops[k], out.powers[k]));

        const auto total_at = [&](double t) {
            double s = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double p = linearized_inverse(loops[k], lins[k], t + offsets[k]);
                if (p == kInf) return kInf;
                s += p;
            }
            return s;
        };

        double t_lo = kInf;
        for (std::size_t k = 0; k < K; ++k)
            t_lo = std::min(t_lo, lins[k].value(loops[k].p_th) - offsets[k]);
        double step = std::max(1.0, 1e-3 * std::abs(t_lo));
        double t_hi = t_lo + step;
        int guard = 0;
        while (total_at(t_hi) <= scenario.p_max) {
            step *= 2.0;
            t_hi = t_lo + step;
            if (++guard > 600)
                throw convergence_error("max-min epigraph bracket expansion failed");
        }
        double lo = t_lo, hi = t_hi;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (total_at(mid) <= scenario.p_max)
                lo = mid;
            else
                hi = mid;
        }
        const double t_star = lo;
        for (std::size_t k = 0; k < K; ++k) {
            const double p = linearized_inverse(loops[k], lins[k], t_star + offsets[k]);
            out.powers[k] = (p == kInf) ? loops[k].p_th : p;
        }
        out.iterations = it;

        const double metric = true_metric(out.powers);
        const bool done = std::abs(metric - metric_prev) <=
                          options.sca_tol * std::max(std::abs(metric_prev), 1e-30);
        metric_prev = metric;
        if (done) {
            rescale_to_budget(out.powers, scenario.p_max);
            return out;
        }
    }
    throw convergence_error("max-min linearization did not settle within the iteration cap");
}

}  // namespace

std::pair<double, std::int64_t> transmission_window_and_blocklength(double cycle_time_s,
                                                                    double overhead_s,
                                                                    double bandwidth_hz,
                                                                    double prop_delay_s,
                                                                    bool include_prop_delay) {
    if (!(bandwidth_hz > 0.0)) throw std::domain_error("bandwidth must be positive");
    const double window = cycle_time_s - overhead_s - (include_prop_delay ? prop_delay_s : 0.0);
    if (!(window > 0.0))
        throw infeasible_error("transmission window is non-positive (" +
                               std::to_string(window) + " s)");
    const double symbols = bandwidth_hz * window;
    const double n = floor_snapped(symbols);
    if (n < 1.0)
        throw infeasible_error("transmission window holds no full symbol (B*T = " +
                               std::to_string(symbols) + ")");
    return {window, static_cast<std::int64_t>(n)};
}

double stability_threshold(const Scenario& scenario, std::size_t loop_index, RateModel model) {
    if (loop_index >= scenario.loops.size()) throw std::domain_error("loop index out of range");
    const PreparedLoop lp = prepare_loop(scenario, loop_index, model, false);
    return threshold_for(lp, scenario.p_max, model, loop_index);
}

Allocation solve_proposed(const Scenario& scenario, const SolverOptions& options) {
    const auto loops = prepare(scenario, RateModel::Fbl, true);
    const DualSolve d = solve_budget_dual(scenario, loops, RateModel::Fbl, options);
    Allocation a = finish(scenario, d.powers, "proposed", d.log_lambda, d.iterations);
    a.dual_value = std::exp(d.log_lambda);
    a.log_dual = d.log_lambda;
    return a;
}

Allocation shannon_baseline(const Scenario& scenario, const SolverOptions& options) {
    const auto loops = prepare(scenario, RateModel::Shannon, true);
    const DualSolve d = solve_budget_dual(scenario, loops, RateModel::Shannon, options);
    // Reported rates and costs come from the exact short-blocklength model,
    // which is what the Shannon-driven split actually delivers.
    Allocation a = finish(scenario, d.powers, "shannon", std::nullopt, d.iterations);
    a.dual_value = std::exp(d.log_lambda);
    a.log_dual = d.log_lambda;
    return a;
}

Allocation closed_form_proposed(const Scenario& scenario) {
    const auto loops = prepare(scenario, RateModel::Fbl, false);
    const std::size_t K = loops.size();

    double inv_gain_sum = 0.0;
    std::vector<double> log_w(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double inv_gain = loops[k].noise / loops[k].gain;
        inv_gain_sum += inv_gain;
        const double n = static_cast<double>(loops[k].n);
        const double m = static_cast<double>(loops[k].ctl->dim);
        const double qinv = loops[k].params.eta * std::sqrt(n);
        const double denom = 2.0 * n + m;
        const double g_const = loops[k].ctl->g_const;
        log_w[k] = (2.0 * n / denom) * std::log(inv_gain) + 2.0 * std::sqrt(n) * qinv / denom +
                   (g_const > 0.0 ? (m / denom) * std::log(g_const) : -kInf);
    }
    const double shift = *std::max_element(log_w.begin(), log_w.end());
    double w_sum = 0.0;
    std::vector<double> w(K);
    for (std::size_t k = 0; k < K; ++k) {
        // all-flat degenerate case (every |det NM| = 0): even weights
        w[k] = std::isfinite(shift) ? std::exp(log_w[k] - shift) : 1.0;
        w_sum += w[k];
    }

    std::vector<double> p(K);
    const double budget_plus = scenario.p_max + inv_gain_sum;
    for (std::size_t k = 0; k < K; ++k)
        p[k] = budget_plus * (w[k] / w_sum) - loops[k].noise / loops[k].gain;

    bool clamped = false;
    double negative = 0.0, positive = 0.0;
    for (double& v : p) {
        if (v < 0.0) {
            negative += -v;
            v = 0.0;
            clamped = true;
        } else {
            positive += v;
        }
    }
    if (clamped && positive > 0.0) {
        const double scale = 1.0 - negative / positive;
        for (double& v : p)
            if (v > 0.0) v *= scale;
    }

    Allocation a = finish(scenario, p, "proposed_cf", std::nullopt, 0);
    a.clamped = clamped;
    return a;
}

Allocation solve_max_sum(const Scenario& scenario, const SolverOptions& options) {
    const auto loops = prepare(scenario, RateModel::Fbl, true);
    const ScaResult r = sca_max_sum(scenario, loops, options);
    return finish(scenario, r.powers, "max_sum", std::nullopt, r.iterations);
}

Allocation closed_form_max_sum(const Scenario& scenario) {
    const auto loops = prepare(scenario, RateModel::Fbl, true);
    require_scenario_feasible(loops, scenario.p_max);
    const std::size_t K = loops.size();

    const auto power_at = [&](std::size_t k, double level) {
        return std::max(level - loops[k].noise / loops[k].gain, loops[k].p_th);
    };
    const auto total = [&](double level) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += power_at(k, level);
        return s - scenario.p_max;
    };
    double hi = scenario.p_max;
    for (std::size_t k = 0; k < K; ++k)
        hi = std::max(hi, loops[k].noise / loops[k].gain + loops[k].p_th);
    const double level = bisect(total, 0.0, 2.0 * hi + scenario.p_max, 0.0, 200);

    std::vector<double> p(K);
    for (std::size_t k = 0; k < K; ++k) p[k] = power_at(k, level);
    rescale_to_budget(p, scenario.p_max);
    return finish(scenario, p, "max_sum_cf", std::nullopt, 0);
}

Allocation solve_max_min(const Scenario& scenario, const SolverOptions& options) {
    const auto loops = prepare(scenario, RateModel::Fbl, true);
    const std::vector<double> offsets(loops.size(), 0.0);
    const ScaResult r = sca_max_min(scenario, loops, options, offsets);
    return finish(scenario, r.powers, "max_min", std::nullopt, r.iterations);
}

Allocation closed_form_max_min(const Scenario& scenario) {
    const auto loops = prepare(scenario, RateModel::Fbl, true);
    require_scenario_feasible(loops, scenario.p_max);
    const std::size_t K = loops.size();

    const auto power_at = [&](std::size_t k, double lambda) {
        const double n = static_cast<double>(loops[k].n);
        const double qinv = loops[k].params.eta * std::sqrt(n);
        const double inv_gain = loops[k].noise / loops[k].gain;
        const double p = inv_gain * (std::exp2(lambda / n) * std::exp(qinv / std::sqrt(n)) - 1.0);
        return std::max(p, loops[k].p_th);
    };
    const auto total = [&](double lambda) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += power_at(k, lambda);
        return s - scenario.p_max;
    };
    double lo = -1.0, hi = 1.0;
    int guard = 0;
    while (total(lo) > 0.0) {
        lo *= 2.0;
        if (++guard > 600) throw convergence_error("max-min closed form: bracket failed");
    }
    guard = 0;
    while (total(hi) < 0.0) {
        hi *= 2.0;
        if (++guard > 600) throw convergence_error("max-min closed form: bracket failed");
    }
    const double lambda = bisect(total, lo, hi, 0.0, 200);

    std::vector<double> p(K);
    for (std::size_t k = 0; k < K; ++k) p[k] = power_at(k, lambda);
    rescale_to_budget(p, scenario.p_max);
    return finish(scenario, p, "max_min_cf", std::nullopt, 0);
}

Allocation solve_modified_max_min(const Scenario& scenario, const SolverOptions& options) {
    const auto loops = prepare(scenario, RateModel::Fbl, true);
    std::vector<double> offsets(loops.size());
    for (std::size_t k = 0; k < loops.size(); ++k) {
        const double g = loops[k].ctl->g_const;
        offsets[k] =
            0.5 * static_cast<double>(loops[k].ctl->dim) * (g > 0.0 ? std::log2(g) : 0.0);
    }
    const ScaResult r = sca_max_min(scenario, loops, options, offsets);
    return finish(scenario, r.powers, "modified_max_min", std::nullopt, r.iterations);
}

Allocation equal_power(const Scenario& scenario) {
    const std::size_t K = scenario.loops.size();
    if (K == 0) throw std::domain_error("scenario has no loops");
    const std::vector<double> p(K, scenario.p_max / static_cast<double>(K));
    return finish(scenario, p, "equal", std::nullopt, 0);
}

namespace {

struct OracleBest {
    double key = kInf;  // total cost; +inf when unstable
    std::int64_t index = -1;

    bool better_than(const OracleBest& o) const {
        if (key != o.key) return key < o.key;
        return index < o.index;
    }
};

// Enumerates the search simplex for K in {1,2,3}; idx is the flattened grid
// coordinate. Returns false for points outside the simplex.
bool oracle_point(const std::vector<PreparedLoop>& loops, double p_max, int grid,
                  std::int64_t idx, std::vector<double>& p) {
    const std::size_t K = loops.size();
    const double step = 1.0 / static_cast<double>(grid - 1);
    if (K == 2) {
        const double slack = p_max - loops[0].p_th - loops[1].p_th;
        p[0] = loops[0].p_th + slack * static_cast<double>(idx) * step;
        p[1] = p_max - p[0];
        return true;
    }
    const std::int64_t i = idx / grid;
    const std::int64_t j = idx % grid;
    const double slack0 = p_max - loops[0].p_th - loops[1].p_th - loops[2].p_th;
    p[0] = loops[0].p_th + slack0 * static_cast<double>(i) * step;
    const double slack1 = p_max - p[0] - loops[1].p_th - loops[2].p_th;
    if (slack1 < 0.0) return false;
    p[1] = loops[1].p_th + slack1 * static_cast<double>(j) * step;
    p[2] = p_max - p[0] - p[1];
    return p[2] >= 0.0;
}

Allocation oracle_common(const Scenario& scenario, int grid, bool parallel) {
    const std::size_t K = scenario.loops.size();
    if (K > 3) throw std::domain_error("brute-force oracle supports at most 3 loops");
    if (grid < 2) throw std::domain_error("oracle grid must have at least 2 points");
    const auto loops = prepare(scenario, RateModel::Fbl, true);
    require_scenario_feasible(loops, scenario.p_max);

    if (K == 1) {
        Allocation a = finish(scenario, {scenario.p_max}, "oracle", std::nullopt, 1);
        return a;
    }

    const std::int64_t points =
        (K == 2) ? grid : static_cast<std::int64_t>(grid) * static_cast<std::int64_t>(grid);

    OracleBest best;
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel
        {
            OracleBest local;
            std::vector<double> p(K);
#pragma omp for schedule(static) nowait
            for (std::int64_t idx = 0; idx < points; ++idx) {
                if (!oracle_point(loops, scenario.p_max, grid, idx, p)) continue;
                const auto c = total_cost_of(loops, p);
                const OracleBest cand{c.stable ? c.value : kInf, idx};
                if (cand.better_than(local)) local = cand;
            }
#pragma omp critical
            {
                if (local.better_than(best)) best = local;
            }
        }
#else
        parallel = false;
#endif
    }
    if (!parallel) {
        std::vector<double> p(K);
        for (std::int64_t idx = 0; idx < points; ++idx) {
            if (!oracle_point(loops, scenario.p_max, grid, idx, p)) continue;
            const auto c = total_cost_of(loops, p);
            const OracleBest cand{c.stable ? c.value : kInf, idx};
            if (cand.better_than(best)) best = cand;
        }
    }

    std::vector<double> p(K);
    if (best.index < 0 || !oracle_point(loops, scenario.p_max, grid, best.index, p))
        oracle_point(loops, scenario.p_max, grid, 0, p);
    Allocation a = finish(scenario, p, "oracle", std::nullopt, static_cast<int>(points));
    return a;
}

}  // namespace

Allocation brute_force_oracle(const Scenario& scenario, int grid) {
    return oracle_common(scenario, grid, true);
}

Allocation brute_force_oracle_serial(const Scenario& scenario, int grid) {
    return oracle_common(scenario, grid, false);
}

Allocation evaluate_allocation(const Scenario& scenario, const std::vector<double>& powers,
                               std::optional<double> log_dual) {
    const std::size_t K = scenario.loops.size();
    if (powers.size() != K) throw std::domain_error("power vector length mismatch");
    for (double p : powers)
        if (!(p >= 0.0)) throw std::domain_error("powers must be nonnegative");
    const auto loops = prepare(scenario, RateModel::Fbl, log_dual.has_value());

    Allocation a;
    a.power = powers;
    a.blocklength.resize(K);
    a.cycle_rate.resize(K);
    a.lqr_cost.resize(K);

    double total = 0.0;
    bool all_stable = true;
    for (std::size_t k = 0; k < K; ++k) {
        a.blocklength[k] = loops[k].n;
        a.cycle_rate[k] = model_rate(loops[k], RateModel::Fbl, powers[k]);
        a.lqr_cost[k] = control::rate_cost(a.cycle_rate[k], *loops[k].ctl);
        if (a.lqr_cost[k].stable)
            total += a.lqr_cost[k].value;
        else
            all_stable = false;
    }
    a.total_cost = all_stable ? control::LqrCost::of(total) : control::LqrCost::unstable();

    if (log_dual) {
        double worst = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            if (loops[k].ctl->nm_det_root == 0.0) continue;
            if (powers[k] <= loops[k].p_th * (1.0 + 1e-8)) continue;  // clamped at threshold
            if (!a.lqr_cost[k].stable) {
                worst = kInf;
                break;
            }
            const double h = log_neg_cost_slope(loops[k], RateModel::Fbl, powers[k]);
            worst = std::max(worst, std::abs(std::expm1(h - *log_dual)));
        }
        a.kkt_residual = worst;
        a.log_dual = log_dual;
    }
    return a;
}

}  // namespace loopalloc::alloc
