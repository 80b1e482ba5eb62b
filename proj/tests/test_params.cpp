#include <catch2/catch_amalgamated.hpp>

#include "beamscan/params.hpp"

using namespace beamscan;

TEST_CASE("decibel and milliwatt conversions", "[params][units]") {
    CHECK(db_to_linear(0.0) == 1.0);
    CHECK(db_to_linear(10.0) == Catch::Approx(10.0).epsilon(1e-14));
    CHECK(db_to_linear(-3.0) == Catch::Approx(0.5011872336272722).epsilon(1e-14));
    CHECK(linear_to_db(100.0) == Catch::Approx(20.0).epsilon(1e-14));
    CHECK(dbm_to_watt(30.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(dbm_to_watt(0.0) == Catch::Approx(1e-3).epsilon(1e-14));
    CHECK(watt_to_dbm(1.0) == Catch::Approx(30.0).epsilon(1e-14));
}

TEST_CASE("thermal noise power at the receiver", "[params][noise]") {
    // -174 dBm/Hz floor plus noise figure, scaled by bandwidth
    const double w_control = noise_power_watts(28e6, 7.0);
    CHECK(w_control == Catch::Approx(5.586734481912875e-13).epsilon(1e-12));
    const double w_data = noise_power_watts(1e8, 7.0);
    CHECK(w_data == Catch::Approx(1.9952623149688828e-12).epsilon(1e-12));
    // proportional in bandwidth
    CHECK(w_data / w_control == Catch::Approx(1e8 / 28e6).epsilon(1e-12));

    system_params p;
    CHECK(p.noise_control_w() == w_control);
    CHECK(p.noise_data_w() == w_data);
}

TEST_CASE("path gain constants at the carrier", "[params][pathloss]") {
    system_params p;
    CHECK(speed_of_light == 3e8);
    CHECK(p.k_los() == Catch::Approx(2.1226744789483603e-8).epsilon(1e-13));
    CHECK(p.k_nlos() == Catch::Approx(5.284616025502421e-13).epsilon(1e-13));
}

TEST_CASE("default system parameters", "[params]") {
    system_params p;
    CHECK(p.lambda_bs == 1e-4);
    CHECK(p.beta == 0.02);
    CHECK(p.alpha_los == 2.5);
    CHECK(p.alpha_nlos == 4.0);
    CHECK(p.f_c == 28e9);
    CHECK(p.sinr_threshold == 1.0);
    CHECK(p.n_bs == 12);
    CHECK(p.n_ue == 4);
    CHECK(p.m_bs == 12);
    CHECK(p.m_ue == 4);
    CHECK(p.n_c == 12);
    CHECK(p.theta_bs() == Catch::Approx(2.0 * pi / 12.0).epsilon(1e-15));
    CHECK(p.theta_ue() == Catch::Approx(2.0 * pi / 4.0).epsilon(1e-15));
    CHECK_NOTHROW(validate(p));
}

TEST_CASE("sector mainlobe gain conserves radiated power", "[params][antenna]") {
    // g_main * theta + eps * (2 pi - theta) = 2 pi
    for (double theta : {2.0 * pi / 12.0, 2.0 * pi / 4.0, pi, 2.0 * pi}) {
        for (double eps : {0.0, 0.05, 0.3, 0.9}) {
            const double g = sector_mainlobe_gain(theta, eps);
            CHECK(g * theta + eps * (2.0 * pi - theta) ==
                  Catch::Approx(2.0 * pi).epsilon(1e-12));
        }
    }
    CHECK(sector_mainlobe_gain(2.0 * pi / 12.0, 0.0) == Catch::Approx(12.0).epsilon(1e-14));
    CHECK(sector_mainlobe_gain(2.0 * pi, 0.5) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("system parameter validation rejects bad inputs", "[params][validation]") {
    system_params p;
    SECTION("density must be positive") {
        p.lambda_bs = 0.0;
        CHECK_THROWS_AS(validate(p), std::invalid_argument);
    }
    SECTION("beam counts must be positive integers") {
        p.n_bs = 0;
        CHECK_THROWS_WITH(validate(p), Catch::Matchers::ContainsSubstring("n_bs"));
    }
    SECTION("nlos exponent cannot undercut the los exponent") {
        p.alpha_nlos = 2.2;
        CHECK_THROWS_AS(validate(p), std::invalid_argument);
    }
    SECTION("sidelobe level bounded by one and by the mainlobe gain") {
        p.epsilon = 1.2;
        CHECK_THROWS_AS(validate(p), std::invalid_argument);
        p.epsilon = -0.1;
        CHECK_THROWS_AS(validate(p), std::invalid_argument);
    }
    SECTION("infinite nlos exponent is allowed") {
        p.alpha_nlos = std::numeric_limits<double>::infinity();
        CHECK_NOTHROW(validate(p));
    }
}

TEST_CASE("frame timing defaults and derived slot length", "[params][frame]") {
    frame_timing f;
    CHECK(f.t_frame == 20.0);
    CHECK(f.t_cs == 1.25);
    CHECK(f.t_ra == 1.25);
    CHECK(f.n_ss_blocks == 16);
    CHECK(f.t_ss_block() == Catch::Approx(0.078125).epsilon(1e-15));
    CHECK_NOTHROW(validate(f));
}

TEST_CASE("frame scan phase scales with the block count", "[params][frame]") {
    const frame_timing f64 = frame_for_blocks(64);
    CHECK(f64.n_ss_blocks == 64);
    CHECK(f64.t_cs == Catch::Approx(5.0).epsilon(1e-15));
    CHECK(f64.t_ra == 1.25);
    const frame_timing f32 = frame_for_blocks(32);
    CHECK(f32.t_cs == Catch::Approx(2.5).epsilon(1e-15));
    // per-block duration is invariant
    CHECK(f64.t_ss_block() == Catch::Approx(f32.t_ss_block()).epsilon(1e-15));
}

TEST_CASE("frame validation requires room for payload", "[params][frame][validation]") {
    frame_timing f;
    f.t_cs = 30.0;
    CHECK_THROWS_AS(validate(f), std::invalid_argument);
    f = frame_timing{};
    f.t_frame = 0.0;
    CHECK_THROWS_AS(validate(f), std::invalid_argument);
}
