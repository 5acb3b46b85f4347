#pragma once

#include <cstdint>
#include <optional>

namespace loopalloc::fbl {

inline constexpr double kLog2E = 1.4426950408889634074;

// Standard normal tail Q(x) and its inverse.
double q_func(double x);
double q_inv(double error_prob);

// Short-blocklength coding parameters of one link. eta = Q^-1(eps)/sqrt(n)
// is the penalty coefficient the rate shape depends on.
struct FblParams {
    std::int64_t blocklength = 1;
    double error_prob = 1e-6;
    double eta = 0.0;

    FblParams() = default;
    FblParams(std::int64_t n, double eps);  // throws std::domain_error on bad inputs
};

// Channel dispersion V(gamma) = (log2 e)^2 (1 - 1/(1+gamma)^2).
double dispersion(double snr);

// Per-symbol achievable rate r(gamma) = log2(1+gamma) - eta sqrt(V(gamma)),
// with closed-form first and second derivatives in gamma.
double rate(double snr, const FblParams& params);
double rate_d1(double snr, const FblParams& params);
double rate_d2(double snr, const FblParams& params);

// Bits deliverable per cycle:
//   R = (1-eps)(n log2(1+gamma) - sqrt(n V(gamma)) Q^-1(eps)),
// gamma = gain * power / noise.
double cycle_rate(double power, double gain, const FblParams& params, double noise);

// High-SNR form: n log2(1+gamma) - sqrt(n) log2(e) Q^-1(eps); drops the
// (1-eps) factor and the SNR dependence of the dispersion. Good to ~1%
// above 5 dB received SNR.
double high_snr_cycle_rate(double power, double gain, const FblParams& params, double noise);

// Unique positive zero crossing of r(gamma); 0 when eta = 0.
double gamma_zero(const FblParams& params);

// Unique positive root of r''(gamma) for a given eta; the candidate
// inflection point the curvature classification compares against.
double inflection_point(double eta);

enum class Curvature { Concave, ConvexConcave };

struct ConcavityClass {
    Curvature kind = Curvature::Concave;
    double gamma_zero = 0.0;
    std::optional<double> inflection;  // root of r'' when convex-concave
};

// Universal constants of the curvature threshold: gamma_hat is the root of
// ln(1+g) = (g^2+2g)^2 / (3g^2+6g+1), eta_hat the rate-zero coefficient at
// gamma_hat. Computed once on first use.
struct CurvatureThreshold {
    double gamma_hat;
    double eta_hat;
};
const CurvatureThreshold& curvature_threshold();

// Classifies r(gamma) on [gamma_0, inf): concave when eta >= eta_hat, else
// convex-concave with the inflection at the root of r''. The threshold test
// is cross-checked against the direct comparison of gamma_0 with the r''
// root; disagreement raises internal_error. The threshold argument exists
// for that negative-control path; production callers leave it empty.
ConcavityClass classify_concavity(const FblParams& params,
                                  std::optional<CurvatureThreshold> threshold = std::nullopt);

}  // namespace loopalloc::fbl
