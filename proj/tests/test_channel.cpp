#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "loopalloc/channel.hpp"

using namespace loopalloc::channel;

namespace {

// Independent Bessel oracle: J_n(x) = (1/pi) \int_0^pi cos(n t - x sin t) dt,
// composite Simpson. Deliberately not the ascending series the library uses.
double bessel_quadrature(int order, double x) {
    const int segments = 4000;  // even
    const double h = M_PI / segments;
    auto f = [&](double t) { return std::cos(order * t - x * std::sin(t)); };
    double acc = f(0.0) + f(M_PI);
    for (int i = 1; i < segments; ++i) acc += f(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / (3.0 * M_PI);
}

ChannelParams rural_params() {
    ChannelParams p;
    p.carrier_freq_mhz = 2000.0;
    p.p_los = 0.919;
    p.sf1_db = 1.14;
    p.sf2_db = 8.78;
    p.cl_db = 18.42;
    p.g_max_linear = db_to_linear(23.0);
    p.theta_3db_rad = deg_to_rad(30.0);
    p.noise_power_watt = dbm_to_watt(-110.0);
    return p;
}

}  // namespace

TEST_CASE("fspl at reference points") {
    CHECK(fspl(1.0, 1.0) == doctest::Approx(32.45).epsilon(1e-12));
    CHECK(fspl(1000.0, 2000.0) == doctest::Approx(158.4706).epsilon(1e-6));
    // doubling distance adds 20 log10(2) regardless of frequency
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 1e8);
    for (int i = 0; i < 50; ++i) {
        const double d = u(rng), f = u(rng);
        CHECK(fspl(2 * d, f) - fspl(d, f) == doctest::Approx(6.0205999133).epsilon(1e-10));
    }
}

TEST_CASE("fspl rejects non-positive inputs") {
    CHECK_THROWS_AS(fspl(0.0, 100.0), std::domain_error);
    CHECK_THROWS_AS(fspl(-5.0, 100.0), std::domain_error);
    CHECK_THROWS_AS(fspl(100.0, 0.0), std::domain_error);
}

TEST_CASE("path loss mixes the LoS and NLoS branches") {
    auto geom = geometry_from_layout(1000.0, 0.0);
    ChannelParams p = rural_params();

    p.p_los = 1.0;
    p.sf1_db = 0.0;
    CHECK(path_loss(geom, p) == doctest::Approx(fspl(geom.distance_m, p.carrier_freq_mhz))
                                    .epsilon(1e-12));

    p.p_los = 0.0;
    p.sf2_db = 8.78;
    p.cl_db = 18.42;
    CHECK(path_loss(geom, p) - fspl(geom.distance_m, p.carrier_freq_mhz) ==
          doctest::Approx(27.20).epsilon(1e-12));
}

TEST_CASE("path loss margin over fspl is distance independent") {
    ChannelParams p = rural_params();
    for (double d : {1e3, 50e3, 3162.278e3, 5e6, 1e7}) {
        LinkGeometry g;
        g.height_m = d;
        g.distance_m = d;
        g.off_axis_angle_rad = 0.0;
        CHECK(path_loss(g, p) - fspl(d, p.carrier_freq_mhz) ==
              doctest::Approx(3.25086).epsilon(1e-9));
    }
}

TEST_CASE("bessel series agrees with the quadrature oracle") {
    for (double x : {1e-6, 0.1, 0.5, 1.31, 2.07123, 3.3, 4.5, 8.0, 11.5}) {
        CHECK(bessel_j1(x) == doctest::Approx(bessel_quadrature(1, x)).epsilon(1e-10));
        CHECK(bessel_j3(x) == doctest::Approx(bessel_quadrature(3, x)).epsilon(1e-10));
    }
}

TEST_CASE("antenna gain boresight equals the peak gain exactly") {
    ChannelParams p = rural_params();
    CHECK(antenna_gain(0.0, p) == p.g_max_linear);
}

TEST_CASE("antenna gain is 3 dB down at the half-power angle") {
    ChannelParams p = rural_params();
    // evaluate the pattern bracket with the quadrature oracle at u = 2.07123
    const double u = 2.07123;
    const double bracket =
        bessel_quadrature(1, u) / (2 * u) + 36.0 * bessel_quadrature(3, u) / (u * u * u);
    const double oracle_db = 10.0 * std::log10(bracket * bracket);
    CHECK(oracle_db == doctest::Approx(-3.0).epsilon(0.04));  // within +-0.1 dB

    const double g = antenna_gain(p.theta_3db_rad, p);
    CHECK(10.0 * std::log10(g / p.g_max_linear) == doctest::Approx(-3.0).epsilon(0.04));
}

TEST_CASE("antenna pattern is even in the off-axis angle") {
    ChannelParams p = rural_params();
    for (double th : {0.05, 0.3, 0.7, 1.2}) CHECK(antenna_gain(-th, p) == antenna_gain(th, p));
    CHECK_THROWS_AS(antenna_gain(M_PI / 2, p), std::domain_error);
}

TEST_CASE("mainlobe gain peaks at boresight") {
    ChannelParams p = rural_params();
    for (int i = 1; i <= 40; ++i) {
        const double th = p.theta_3db_rad * i / 40.0;
        CHECK(antenna_gain(th, p) < p.g_max_linear);
    }
}

TEST_CASE("link budget identity case and propagation delay") {
    ChannelParams p = rural_params();
    p.p_los = 1.0;
    p.sf1_db = 0.0;
    p.g_max_linear = 1.0;
    // distance with FSPL = 0 dB: 20log10(d) = -32.45 - 20log10(f)
    const double d = std::pow(10.0, (-32.45 - 20.0 * std::log10(p.carrier_freq_mhz)) / 20.0);
    LinkGeometry g;
    g.height_m = d;
    g.distance_m = d;
    g.off_axis_angle_rad = 0.0;
    const auto b = link_budget(g, p);
    CHECK(b.channel_gain == doctest::Approx(1.0).epsilon(1e-12));

    LinkGeometry far = geometry_from_layout(kSpeedOfLight, 0.0);
    CHECK(link_budget(far, p).prop_delay_s == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("link budget composes its three factors") {
    ChannelParams p = rural_params();
    const auto geom = geometry_from_layout(3000e3, 1000e3);
    CHECK(geom.distance_m == doctest::Approx(3162.278e3).epsilon(1e-6));
    CHECK(rad_to_deg(geom.off_axis_angle_rad) == doctest::Approx(18.435).epsilon(1e-4));
    const auto b = link_budget(geom, p);
    const double expected = antenna_gain(geom.off_axis_angle_rad, p) *
                            std::pow(10.0, -path_loss(geom, p) / 10.0);
    CHECK(b.channel_gain == doctest::Approx(expected).epsilon(1e-12));
    CHECK(b.prop_delay_s == doctest::Approx(geom.distance_m / kSpeedOfLight).epsilon(1e-15));
}

TEST_CASE("geometry from layout") {
    const auto g = geometry_from_layout(3000e3, 4000e3);
    CHECK(g.distance_m == doctest::Approx(5000e3).epsilon(1e-12));
    CHECK(rad_to_deg(g.off_axis_angle_rad) == doctest::Approx(53.130102).epsilon(1e-6));

    const auto gz = geometry_from_layout(3000e3, 0.0);
    CHECK(gz.distance_m == 3000e3);
    CHECK(gz.off_axis_angle_rad == 0.0);

    const auto gp = geometry_from_layout(1000.0, 250.0);
    const auto gn = geometry_from_layout(1000.0, -250.0);
    CHECK(gp.distance_m == gn.distance_m);
    CHECK(gp.off_axis_angle_rad == gn.off_axis_angle_rad);

    CHECK_THROWS_AS(geometry_from_layout(0.0, 10.0), std::domain_error);
    CHECK_THROWS_AS(geometry_from_layout(-5.0, 10.0), std::domain_error);
}

TEST_CASE("geometry invariants hold to 1e-12") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1.0, 1e7);
    for (int i = 0; i < 100; ++i) {
        const auto g = geometry_from_layout(u(rng), u(rng));
        const double lhs = g.distance_m * g.distance_m;
        const double rhs = g.height_m * g.height_m + g.offset_m * g.offset_m;
        CHECK(std::abs(lhs - rhs) <= 1e-12 * lhs);
        CHECK(g.off_axis_angle_rad >= 0.0);
        CHECK(g.off_axis_angle_rad < M_PI / 2);
    }
}

TEST_CASE("channel gain decreases with distance at fixed off-axis angle") {
    ChannelParams p = rural_params();
    double prev = 1e300;
    for (double d = 100e3; d < 1e7; d *= 1.5) {
        LinkGeometry g;
        g.height_m = d;
        g.distance_m = d;
        g.off_axis_angle_rad = 0.2;
        const double gain = link_budget(g, p).channel_gain;
        CHECK(gain < prev);
        prev = gain;
    }
}

TEST_CASE("decibel conversions round-trip") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-150.0, 150.0);
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng);
        CHECK(linear_to_db(db_to_linear(x)) == doctest::Approx(x).epsilon(1e-12));
        CHECK(watt_to_dbm(dbm_to_watt(x)) == doctest::Approx(x).epsilon(1e-12));
        CHECK(watt_to_dbw(dbw_to_watt(x)) == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("channel params validation") {
    ChannelParams p = rural_params();
    p.p_los = 1.3;
    CHECK_THROWS_AS(p.validate(), std::domain_error);
    p = rural_params();
    p.theta_3db_rad = M_PI;
    CHECK_THROWS_AS(p.validate(), std::domain_error);
    p = rural_params();
    p.noise_power_watt = 0.0;
    CHECK_THROWS_AS(p.validate(), std::domain_error);
}
