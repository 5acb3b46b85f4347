#include "loopalloc/fbl.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "loopalloc/errors.hpp"
#include "loopalloc/rootfind.hpp"

namespace loopalloc::fbl {

double q_func(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double q_inv(double error_prob) {
    if (!(error_prob > 0.0 && error_prob < 1.0))
        throw std::domain_error("q_inv: error probability must lie in (0,1)");
    // Q is strictly decreasing; [-40, 40] covers the full double range of
    // representable tail probabilities.
    return bisect([&](double x) { return q_func(x) - error_prob; }, -40.0, 40.0,
                  /*rel_tol=*/0.0, /*max_iter=*/200);
}

FblParams::FblParams(std::int64_t n, double eps) : blocklength(n), error_prob(eps) {
    if (n < 1) throw std::domain_error("blocklength must be >= 1");
    if (!(eps > 0.0 && eps < 0.5)) throw std::domain_error("error probability must lie in (0, 0.5)");
    eta = q_inv(eps) / std::sqrt(static_cast<double>(n));
}

double dispersion(double snr) {
    if (!(snr >= 0.0)) throw std::domain_error("dispersion: snr must be nonnegative");
    const double s = 1.0 + snr;
    return kLog2E * kLog2E * (1.0 - 1.0 / (s * s));
}

namespace {

// sqrt(V(gamma)) = log2(e) sqrt(gamma^2 + 2 gamma) / (1 + gamma); this form
// avoids the cancellation in 1 - 1/(1+gamma)^2 near zero.
double sqrt_dispersion(double snr) {
    return kLog2E * std::sqrt(snr * (snr + 2.0)) / (1.0 + snr);
}

void check_snr(double snr, const char* who) {
    if (!(snr >= 0.0)) throw std::domain_error(std::string(who) + ": snr must be nonnegative");
}

}  // namespace

double rate(double snr, const FblParams& params) {
    check_snr(snr, "rate");
    return std::log2(1.0 + snr) - params.eta * sqrt_dispersion(snr);
}

double rate_d1(double snr, const FblParams& params) {
    check_snr(snr, "rate_d1");
    const double g1 = snr + 1.0;
    if (params.eta == 0.0) return kLog2E / g1;
    const double s = std::sqrt(snr * (snr + 2.0));
    return (kLog2E / g1) * (1.0 - params.eta / (g1 * s));
}

double rate_d2(double snr, const FblParams& params) {
    check_snr(snr, "rate_d2");
    const double g1 = snr + 1.0;
    if (params.eta == 0.0) return -kLog2E / (g1 * g1);
    const double s = std::sqrt(snr * (snr + 2.0));
    return (kLog2E / (g1 * g1)) *
           (2.0 * params.eta / (g1 * s) + params.eta * g1 / (s * s * s) - 1.0);
}

double cycle_rate(double power, double gain, const FblParams& params, double noise) {
    if (!(power >= 0.0)) throw std::domain_error("cycle_rate: power must be nonnegative");
    const double snr = gain * power / noise;
    const double n = static_cast<double>(params.blocklength);
    return (1.0 - params.error_prob) * n * rate(snr, params);
}

double high_snr_cycle_rate(double power, double gain, const FblParams& params, double noise) {
    if (!(power >= 0.0)) throw std::domain_error("cycle_rate: power must be nonnegative");
    const double snr = gain * power / noise;
    const double n = static_cast<double>(params.blocklength);
    const double qinv = params.eta * std::sqrt(n);
    return n * std::log2(1.0 + snr) - std::sqrt(n) * kLog2E * qinv;
}

double gamma_zero(const FblParams& params) {
    const double eta = params.eta;
    if (eta == 0.0) return 0.0;
    // r < 0 on (0, gamma_0); for small eta the crossing sits near 2 eta^2,
    // so the lower end of the bracket scales with it.
    const double lo = std::min(1e-12, 0.01 * eta * eta);
    double hi = std::max(1.0, 8.0 * eta * eta);
    int guard = 0;
    while (rate(hi, params) <= 0.0) {
        hi *= 4.0;
        if (++guard > 600) throw convergence_error("gamma_zero: bracket expansion failed");
    }
    return bisect([&](double g) { return rate(g, params); }, lo, hi, 1e-14, 200);
}

namespace {

// f2(gamma) = (1+g)(g^2+2g)^(3/2) / (3g^2+6g+1): the eta value at which a
// given gamma is the inflection of r. Strictly increasing from 0.
double inflection_coefficient(double g) {
    const double s2 = g * (g + 2.0);
    return (1.0 + g) * s2 * std::sqrt(s2) / (3.0 * g * g + 6.0 * g + 1.0);
}

double gamma_inflection(double eta) {
    double hi = 1.0;
    int guard = 0;
    while (inflection_coefficient(hi) < eta) {
        hi *= 4.0;
        if (++guard > 600) throw convergence_error("gamma_inflection: bracket expansion failed");
    }
    const double lo = std::min(1e-12, eta * eta * 0.01);
    return bisect([&](double g) { return inflection_coefficient(g) - eta; }, lo, hi, 1e-14, 200);
}

}  // namespace

double inflection_point(double eta) {
    if (!(eta > 0.0)) throw std::domain_error("inflection_point: eta must be positive");
    return gamma_inflection(eta);
}

const CurvatureThreshold& curvature_threshold() {
    static const CurvatureThreshold t = [] {
        const auto mismatch = [](double g) {
            const double s2 = g * (g + 2.0);
            return std::log1p(g) - s2 * s2 / (3.0 * g * g + 6.0 * g + 1.0);
        };
        const double gamma_hat = bisect(mismatch, 1e-9, 2.0, 1e-14, 200);
        const double eta_hat =
            (1.0 + gamma_hat) * std::log1p(gamma_hat) / std::sqrt(gamma_hat * (gamma_hat + 2.0));
        return CurvatureThreshold{gamma_hat, eta_hat};
    }();
    return t;
}

ConcavityClass classify_concavity(const FblParams& params,
                                  std::optional<CurvatureThreshold> threshold) {
    const CurvatureThreshold& th = threshold ? *threshold : curvature_threshold();

    ConcavityClass out;
    out.gamma_zero = gamma_zero(params);
    const double g_infl = gamma_inflection(params.eta);

    const bool concave_by_threshold = params.eta >= th.eta_hat;
    const bool concave_by_comparison = out.gamma_zero >= g_infl;
    if (concave_by_threshold != concave_by_comparison) {
        // Disagreement is tolerated only in the razor-edge band where the
        // two roots coincide to rounding.
        const double gap = std::abs(out.gamma_zero - g_infl);
        if (gap > 1e-8 * std::max(out.gamma_zero, g_infl))
            throw internal_error("classify_concavity: threshold test and root comparison disagree");
    }

    if (concave_by_threshold) {
        out.kind = Curvature::Concave;
    } else {
        out.kind = Curvature::ConvexConcave;
        out.inflection = g_infl;
    }
    return out;
}

}  // namespace loopalloc::fbl
