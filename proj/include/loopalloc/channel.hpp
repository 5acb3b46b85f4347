#pragma once

#include <cstddef>

namespace loopalloc::channel {

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

// dB/dBm/dBi/degrees live at the configuration boundary only; everything
// below works in watts, meters, Hz and radians.
double db_to_linear(double db);
double linear_to_db(double lin);
double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);
double dbw_to_watt(double dbw);
double watt_to_dbw(double watt);
double deg_to_rad(double deg);
double rad_to_deg(double rad);

struct ChannelParams {
    double carrier_freq_mhz = 0.0;
    double p_los = 1.0;            // line-of-sight probability in [0,1]
    double sf1_db = 0.0;           // shadow-fading margin, LoS branch
    double sf2_db = 0.0;           // shadow-fading margin, NLoS branch
    double cl_db = 0.0;            // clutter loss, NLoS branch
    double g_max_linear = 1.0;     // peak antenna gain (linear)
    double theta_3db_rad = 0.5;    // one-sided half-power beam width
    double noise_power_watt = 1.0; // per-subchannel noise power

    void validate() const;  // throws std::domain_error on a bad field
};

struct LinkGeometry {
    double height_m = 0.0;          // spacecraft altitude above the surface point
    double offset_m = 0.0;          // horizontal offset of the probe
    double distance_m = 0.0;        // slant range, sqrt(h^2 + x^2)
    double off_axis_angle_rad = 0.0;  // beam assumed nadir-pointing: atan(x/h)
};

struct LinkBudget {
    double channel_gain = 0.0;   // linear power ratio
    double prop_delay_s = 0.0;   // distance / c
};

// Free-space path loss, 32.45 + 20 log10(f_MHz) + 20 log10(d_m).
double fspl(double distance_m, double carrier_freq_mhz);

// LoS/NLoS mixture: P_los (FSPL + SF1) + (1 - P_los)(FSPL + SF2 + CL).
double path_loss(const LinkGeometry& geom, const ChannelParams& params);

// First-kind Bessel functions by ascending power series, accurate to
// ~1e-12 relative for |x| <= 12.
double bessel_j1(double x);
double bessel_j3(double x);

// Pencil-beam pattern (J1(u)/2u + 36 J3(u)/u^3)^2 scaled by g_max, with
// u = 2.07123 sin(theta)/sin(theta_3dB). The u -> 0 limit (1/4 + 3/4 = 1)
// is built into the series, not recovered by small-u division.
double antenna_gain(double off_axis_angle_rad, const ChannelParams& params);

LinkBudget link_budget(const LinkGeometry& geom, const ChannelParams& params);

// Slant geometry from altitude + horizontal offset; the offset sign is
// ignored.
LinkGeometry geometry_from_layout(double height_m, double offset_m);

}  // namespace loopalloc::channel
