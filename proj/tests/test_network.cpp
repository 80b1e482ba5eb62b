#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "beamscan/network.hpp"

using namespace beamscan;

TEST_CASE("path loss is one at the reference distance", "[network][pathloss]") {
    system_params p;
    const double r_ref = speed_of_light / (4.0 * pi * p.f_c);
    CHECK(path_loss(r_ref, true, p) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(path_loss(r_ref, false, p) == Catch::Approx(1.0).epsilon(1e-12));
    // beyond the reference point the nlos exponent decays faster
    CHECK(path_loss(100.0, false, p) < path_loss(100.0, true, p));
    CHECK_THROWS_AS(path_loss(0.0, true, p), std::invalid_argument);
}

TEST_CASE("path loss decreases monotonically with distance", "[network][pathloss]") {
    system_params p;
    double prev = path_loss(1.0, true, p);
    for (double r = 2.0; r < 3000.0; r *= 1.7) {
        const double cur = path_loss(r, true, p);
        CHECK(cur < prev);
        prev = cur;
    }
    // closed form at a round distance: (c / (4 pi r f_c))^alpha
    const double expect = std::pow(3e8 / (4.0 * pi * 100.0 * 28e9), 2.5);
    CHECK(path_loss(100.0, true, p) == Catch::Approx(expect).epsilon(1e-13));
}

TEST_CASE("blocked links vanish under an infinite nlos exponent", "[network][pathloss]") {
    system_params p;
    p.alpha_nlos = std::numeric_limits<double>::infinity();
    CHECK(path_loss(50.0, false, p) == 0.0);
    CHECK(path_loss(50.0, true, p) > 0.0);
}

TEST_CASE("line-of-sight probability decays exponentially", "[network][blockage]") {
    CHECK(los_probability(0.0, 0.02) == 1.0);
    CHECK(los_probability(100.0, 0.0) == 1.0);
    CHECK(los_probability(50.0, 0.02) == Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("normalized noise matches the closed-form engines", "[network][noise]") {
    system_params p;
    const double w = p.noise_control_w();
    CHECK(w == Catch::Approx(5.586734481912875e-13).epsilon(1e-12));
    // around -92.5 dBm for a 28 MHz, 7 dB figure receiver
    CHECK(watt_to_dbm(w) == Catch::Approx(-92.5283).margin(0.01));
    CHECK(noise_power_normalized(p, false, true) ==
          Catch::Approx(w / (p.p_bs_control * p.n_bs * p.n_ue * p.k_los())).epsilon(1e-13));
    CHECK(noise_power_normalized(p, false, false) ==
          Catch::Approx(w / (p.p_bs_control * p.n_ue * p.k_los())).epsilon(1e-13));
    CHECK(noise_power_normalized(p, true, true) ==
          Catch::Approx(p.noise_data_w() / (p.p_bs_data * p.n_bs * p.n_ue * p.k_los()))
              .epsilon(1e-13));
}

TEST_CASE("network realizations are deterministic in the seed", "[network][sampling]") {
    system_params p;
    const network_realization a = sample_network(p, 12, 99);
    const network_realization b = sample_network(p, 12, 99);
    REQUIRE(a.n_bs_points() == b.n_bs_points());
    for (int i = 0; i < a.n_bs_points(); ++i) {
        CHECK(a.radius[static_cast<std::size_t>(i)] == b.radius[static_cast<std::size_t>(i)]);
        CHECK(a.azimuth[static_cast<std::size_t>(i)] == b.azimuth[static_cast<std::size_t>(i)]);
    }
    const network_realization c = sample_network(p, 12, 100);
    // different seeds give a different realization (counts may tie; positions cannot)
    CHECK((a.n_bs_points() != c.n_bs_points() || a.radius[0] != c.radius[0]));
}

TEST_CASE("point counts follow the density and stay in the disc", "[network][sampling]") {
    system_params p;
    const double mean_expected = p.lambda_bs * pi * p.region_radius * p.region_radius;
    double total = 0.0;
    const int reps = 200;
    for (int s = 0; s < reps; ++s) {
        const network_realization net = sample_network(p, 1, 1000 + static_cast<std::uint64_t>(s));
        total += net.n_bs_points();
        for (double r : net.radius) {
            REQUIRE(r >= 0.0);
            REQUIRE(r <= p.region_radius);
        }
        for (double a : net.azimuth) {
            REQUIRE(a >= 0.0);
            REQUIRE(a < 2.0 * pi);
        }
    }
    const double mean_measured = total / reps;
    // 6 sigma band for the Poisson mean over reps draws
    CHECK(mean_measured ==
          Catch::Approx(mean_expected).margin(6.0 * std::sqrt(mean_expected / reps)));
}

TEST_CASE("beam marks cover every direction once per cycle", "[network][sampling]") {
    system_params p;
    const network_realization net = sample_network(p, 24, 4242); // two cycles
    REQUIRE(net.n_cycles == 2);
    for (int i = 0; i < net.n_bs_points(); ++i) {
        for (int c = 0; c < 2; ++c) {
            std::vector<int> seen(static_cast<std::size_t>(p.n_bs), 0);
            for (int s = c * p.n_bs; s < (c + 1) * p.n_bs; ++s)
                ++seen[static_cast<std::size_t>(net.beam_at(i, s))];
            for (int b = 0; b < p.n_bs; ++b) CHECK(seen[static_cast<std::size_t>(b)] == 1);
        }
    }
    for (int c = 0; c < net.n_cycles; ++c) {
        REQUIRE(net.ue_beam[static_cast<std::size_t>(c)] >= 0);
        REQUIRE(net.ue_beam[static_cast<std::size_t>(c)] < p.n_ue);
    }
}

TEST_CASE("oversized realizations hit the memory cap", "[network][sampling]") {
    system_params p;
    p.lambda_bs = 1e-2; // ~1.3e5 points
    CHECK_THROWS_AS(sample_network(p, 1000, 7, 1'000'000), std::length_error);
    CHECK_THROWS_AS(sample_network(p, 0, 7), std::invalid_argument);
}

TEST_CASE("slot sinr isolates the strongest sector contributor", "[network][sinr]") {
    system_params p;
    p.lambda_bs = 3e-4;
    const network_realization net = sample_network(p, 12, 31415);
    const std::vector<double> sinr = slot_sinr_sbp(net, 0, p);
    REQUIRE(static_cast<int>(sinr.size()) == net.n_bs_points());

    // reconstruct by hand from the realization marks
    const sector_pattern bs_pat = make_sector(p.theta_bs(), p.epsilon);
    const int ue_sector = net.ue_beam[0];
    std::vector<double> rx(sinr.size(), 0.0);
    double total = 0.0;
    for (int i = 0; i < net.n_bs_points(); ++i) {
        const double ue_off =
            wrap_angle(net.azimuth[static_cast<std::size_t>(i)] - (ue_sector + 0.5) * p.theta_ue());
        if (std::fabs(ue_off) > 0.5 * p.theta_ue()) continue;
        const double bs_off = wrap_angle(net.orientation[static_cast<std::size_t>(i)] -
                                         (net.beam_at(i, 0) + 0.5) * p.theta_bs());
        rx[static_cast<std::size_t>(i)] = p.p_bs_control * sbp_gain(bs_pat, bs_off) * p.n_ue *
                                          net.fading_at(i, 0) *
                                          path_loss(net.radius[static_cast<std::size_t>(i)],
                                                    net.los_at(i, 0), p);
        total += rx[static_cast<std::size_t>(i)];
    }
    for (std::size_t i = 0; i < sinr.size(); ++i) {
        if (rx[i] <= 0.0) {
            CHECK(sinr[i] == 0.0);
        } else {
            CHECK(sinr[i] ==
                  Catch::Approx(rx[i] / (total - rx[i] + p.noise_control_w())).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(slot_sinr_sbp(net, 12, p), std::out_of_range);
}
