#include "loopalloc/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace loopalloc::channel {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }
double dbw_to_watt(double dbw) { return std::pow(10.0, dbw / 10.0); }
double watt_to_dbw(double watt) { return 10.0 * std::log10(watt); }
double deg_to_rad(double deg) { return deg * (M_PI / 180.0); }
double rad_to_deg(double rad) { return rad * (180.0 / M_PI); }

void ChannelParams::validate() const {
    if (!(carrier_freq_mhz > 0.0)) throw std::domain_error("carrier frequency must be positive");
    if (!(p_los >= 0.0 && p_los <= 1.0)) throw std::domain_error("p_los must be in [0,1]");
    if (!(theta_3db_rad > 0.0 && theta_3db_rad < M_PI / 2))
        throw std::domain_error("theta_3db must be in (0, pi/2)");
    if (!(noise_power_watt > 0.0)) throw std::domain_error("noise power must be positive");
    if (!(g_max_linear > 0.0)) throw std::domain_error("g_max must be positive");
}

double fspl(double distance_m, double carrier_freq_mhz) {
    if (!(distance_m > 0.0)) throw std::domain_error("fspl: distance must be positive");
    if (!(carrier_freq_mhz > 0.0)) throw std::domain_error("fspl: carrier frequency must be positive");
    return 32.45 + 20.0 * std::log10(carrier_freq_mhz) + 20.0 * std::log10(distance_m);
}

double path_loss(const LinkGeometry& geom, const ChannelParams& params) {
    params.validate();
    const double f = fspl(geom.distance_m, params.carrier_freq_mhz);
    return params.p_los * (f + params.sf1_db) +
           (1.0 - params.p_los) * (f + params.sf2_db + params.cl_db);
}

namespace {

// J_n(x) = sum_j (-1)^j / (j! (j+n)!) (x/2)^(2j+n)
double bessel_series(int order, double x) {
    double term = 1.0;
    for (int k = 1; k <= order; ++k) term *= (x / 2.0) / k;
    double sum = 0.0;
    const double q = -(x / 2.0) * (x / 2.0);
    for (int j = 0; j < 80; ++j) {
        sum += term;
        term *= q / ((j + 1.0) * (j + 1.0 + order));
        if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
    }
    return sum;
}

// J1(u)/(2u) as its own series; value 1/4 at u = 0.
double j1_over_2u(double u) {
    double term = 0.25;
    double sum = 0.0;
    const double q = -(u / 2.0) * (u / 2.0);
    for (int j = 0; j < 80; ++j) {
        sum += term;
        term *= q / ((j + 1.0) * (j + 2.0));
        if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
    }
    return sum;
}

// J3(u)/u^3 as its own series; value 1/48 at u = 0.
double j3_over_u3(double u) {
    double term = 1.0 / 48.0;
    double sum = 0.0;
    const double q = -(u / 2.0) * (u / 2.0);
    for (int j = 0; j < 80; ++j) {
        sum += term;
        term *= q / ((j + 1.0) * (j + 4.0));
        if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
    }
    return sum;
}

}  // namespace

double bessel_j1(double x) { return bessel_series(1, x); }
double bessel_j3(double x) { return bessel_series(3, x); }

double antenna_gain(double off_axis_angle_rad, const ChannelParams& params) {
    if (!(std::abs(off_axis_angle_rad) < M_PI / 2))
        throw std::domain_error("antenna_gain: off-axis angle must lie in (-pi/2, pi/2)");
    const double u = 2.07123 * std::sin(off_axis_angle_rad) / std::sin(params.theta_3db_rad);
    const double bracket = j1_over_2u(u) + 36.0 * j3_over_u3(u);
    return params.g_max_linear * bracket * bracket;
}

LinkBudget link_budget(const LinkGeometry& geom, const ChannelParams& params) {
    LinkBudget b;
    const double pl_db = path_loss(geom, params);
    b.channel_gain = antenna_gain(geom.off_axis_angle_rad, params) * db_to_linear(-pl_db);
    b.prop_delay_s = geom.distance_m / kSpeedOfLight;
    return b;
}

LinkGeometry geometry_from_layout(double height_m, double offset_m) {
    if (!(height_m > 0.0)) throw std::domain_error("geometry: height must be positive");
    LinkGeometry g;
    g.height_m = height_m;
    g.offset_m = std::abs(offset_m);
    g.distance_m = std::hypot(g.height_m, g.offset_m);
    g.off_axis_angle_rad = std::atan(g.offset_m / g.height_m);
    return g;
}

}  // namespace loopalloc::channel
