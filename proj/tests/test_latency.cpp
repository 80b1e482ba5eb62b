#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "beamscan/latency.hpp"

using namespace beamscan;

TEST_CASE("initial-access latency matches the geometric-retry formula", "[latency][ia]") {
    CHECK(expected_ia_latency(0.56825, frame_timing{}) ==
          Catch::Approx(28.8231036479444).margin(1e-9));
    CHECK(expected_ia_latency(0.0, frame_timing{}) == 2.5);
    CHECK(expected_ia_latency(0.0, frame_for_blocks(64)) == 6.25);
    CHECK(std::isinf(expected_ia_latency(1.0, frame_timing{})));
    CHECK_THROWS_AS(expected_ia_latency(-0.1, frame_timing{}), std::invalid_argument);
    CHECK_THROWS_AS(expected_ia_latency(1.1, frame_timing{}), std::invalid_argument);
}

TEST_CASE("initial-access latency is increasing and convex in the failure rate", "[latency][ia]") {
    const frame_timing f;
    double prev = -1.0;
    for (int i = 0; i <= 18; ++i) {
        const double pf = 0.05 * i;
        const double cur = expected_ia_latency(pf, f);
        CHECK(cur > prev);
        prev = cur;
    }
    for (double a : {0.0, 0.2, 0.4}) {
        const double b = a + 0.4;
        const double mid = expected_ia_latency(0.5 * (a + b), f);
        CHECK(mid <= 0.5 * (expected_ia_latency(a, f) + expected_ia_latency(b, f)) + 1e-12);
    }
}

TEST_CASE("total latency matches the epoch accounting", "[latency][total]") {
    CHECK(expected_total_latency(0.1, 4.27e8, 1e3, frame_for_blocks(64)) ==
          Catch::Approx(8.47456414259693).margin(1e-9));
    CHECK_THROWS_AS(expected_total_latency(0.1, 0.0, 1e3, frame_timing{}), std::invalid_argument);
    CHECK_THROWS_AS(expected_total_latency(0.1, 1e8, 0.0, frame_timing{}), std::invalid_argument);
    CHECK(std::isinf(expected_total_latency(1.0, 1e8, 1e3, frame_timing{})));
}

TEST_CASE("total latency steps by exactly one overhead at epoch boundaries", "[latency][total]") {
    const frame_timing f; // usable span 17.5 ms, 1e8 bps -> 1.75e6 bits per epoch
    const double rate = 1e8;
    const double boundary = 1.75e6;
    const double before = expected_total_latency(0.0, rate, boundary, f);
    const double after = expected_total_latency(0.0, rate, boundary + 1.0, f);
    const double bit_time = 1.0 / (rate / 1000.0);
    CHECK(after - before == Catch::Approx(f.t_cs + f.t_ra + bit_time).margin(1e-12));
    // away from a boundary the increment is just transmission time
    const double mid1 = expected_total_latency(0.0, rate, 0.5e6, f);
    const double mid2 = expected_total_latency(0.0, rate, 0.6e6, f);
    CHECK(mid2 - mid1 == Catch::Approx(0.1e6 / (rate / 1000.0)).margin(1e-12));
    // nondecreasing in the packet size
    double prev = 0.0;
    for (double bits = 1e5; bits < 6e6; bits += 1e5) {
        const double cur = expected_total_latency(0.0, rate, bits, f);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("shannon rate conversions are exact at round numbers", "[latency][rate]") {
    CHECK(achievable_rate(1.0, 1e8) == 1e8);
    CHECK(achievable_rate(3.0, 1e8) == Catch::Approx(2e8).epsilon(1e-12));
    CHECK(achievable_rate(0.0, 1e8) == 0.0);
    CHECK_THROWS_AS(achievable_rate(-0.5, 1e8), std::invalid_argument);
    CHECK_THROWS_AS(achievable_rate(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("beam refinement finds the aligned pair", "[latency][refine]") {
    channel_state ch;
    ch.path_gain = 3.2e-13;
    ch.fading = 1.7;
    ch.aoa_ue = 0.3;
    ch.aod_bs = -0.7;
    // codebooks that contain an exactly aligned beam on each side
    codebook ue_cb = make_codebook_sin(4, 4, 4);
    ue_cb.beams[1] = make_beam_sine(4, 4, std::sin(ch.aoa_ue));
    codebook bs_cb = make_codebook_sin(12, 12, 12);
    bs_cb.beams[2] = make_beam_sine(12, 12, std::sin(ch.aod_bs));
    const refined_beams r = refine_beams(ch, bs_cb, ue_cb);
    CHECK(r.ue_index == 1);
    CHECK(r.bs_index == 2);
    CHECK(r.gain == Catch::Approx(ch.path_gain * ch.fading).epsilon(1e-12));
}

TEST_CASE("beam refinement matches a brute-force pair scan", "[latency][refine]") {
    const codebook bs_cb = make_codebook_sin(12, 12, 12);
    const codebook ue_cb = make_codebook_sin(4, 4, 4);
    rng g(2024);
    for (int rep = 0; rep < 25; ++rep) {
        channel_state ch;
        ch.path_gain = g.uniform(1e-14, 1e-11);
        ch.fading = g.exponential();
        ch.aoa_ue = g.uniform(-pi, pi);
        ch.aod_bs = g.uniform(-pi, pi);
        const refined_beams r = refine_beams(ch, bs_cb, ue_cb);
        double best = -1.0;
        for (const beam_vector& v : bs_cb.beams)
            for (const beam_vector& w : ue_cb.beams) {
                const double gain = effective_gain(w, ch, v);
                best = std::max(best, gain);
                CHECK(r.gain >= gain - 1e-15 * std::max(1.0, gain));
            }
        CHECK(r.gain == Catch::Approx(best).epsilon(1e-12));
    }
    // single-entry codebooks leave no choice
    codebook one_bs, one_ue;
    one_bs.beams.push_back(make_beam_sine(12, 12, 0.25));
    one_ue.beams.push_back(make_beam_sine(4, 4, -0.5));
    channel_state ch;
    const refined_beams r = refine_beams(ch, one_bs, one_ue);
    CHECK(r.bs_index == 0);
    CHECK(r.ue_index == 0);
    CHECK(r.gain == effective_gain(one_ue.beams[0], ch, one_bs.beams[0]));
    CHECK_THROWS_AS(refine_beams(ch, codebook{}, one_ue), std::invalid_argument);
}

TEST_CASE("data-plane sinr follows the physical array convention", "[latency][sinr]") {
    system_params p;
    channel_state serving;
    serving.path_gain = 2e-13;
    serving.fading = 1.7;
    serving.aoa_ue = 0.3;
    serving.aod_bs = -0.7;
    codebook ue_cb, bs_cb;
    ue_cb.beams.push_back(make_beam_sine(4, 4, std::sin(serving.aoa_ue)));
    bs_cb.beams.push_back(make_beam_sine(12, 12, std::sin(serving.aod_bs)));
    refined_beams beams;
    beams.ue_index = 0;
    beams.bs_index = 0;
    const double got = data_sinr(serving, beams, bs_cb, ue_cb, {}, {}, p);
    // aligned full arrays: signal = M_UE M_BS ell h against data-plane noise
    const double expect =
        4.0 * 12.0 * serving.path_gain * serving.fading / (p.noise_data_w() / p.p_bs_data);
    CHECK(got == Catch::Approx(expect).epsilon(1e-12));
    channel_state dead = serving;
    dead.fading = 0.0;
    CHECK(data_sinr(dead, beams, bs_cb, ue_cb, {}, {}, p) == 0.0);
    // interferers push the ratio down
    std::vector<channel_state> ints = {serving};
    std::vector<int> ibeams = {0};
    CHECK(data_sinr(serving, beams, bs_cb, ue_cb, ints, ibeams, p) < got);
    CHECK_THROWS_AS(data_sinr(serving, beams, bs_cb, ue_cb, ints, {}, p), std::invalid_argument);
    std::vector<int> bad = {5};
    CHECK_THROWS_AS(data_sinr(serving, beams, bs_cb, ue_cb, ints, bad, p), std::invalid_argument);
}

TEST_CASE("data rate estimation is seed-deterministic", "[latency][rate]") {
    system_params p;
    p.lambda_bs = 1e-4;
    scheme_config c;
    c.scheme = search_scheme::exhaustive;
    c.model = antenna_model::ula;
    const rate_estimate a = estimate_data_rate(p, c, 400, 777);
    const rate_estimate b = estimate_data_rate(p, c, 400, 777);
    CHECK(a.mean_rate_bps == b.mean_rate_bps);
    CHECK(a.successes == b.successes);
    CHECK(a.rate_samples_bps.size() == static_cast<std::size_t>(a.successes));
    CHECK(a.p_f == Catch::Approx(1.0 - static_cast<double>(a.successes) / 400.0).margin(1e-15));
    CHECK_THROWS_AS(estimate_data_rate(p, c, 0, 1), std::invalid_argument);
}

TEST_CASE("post-detection rates land in the expected band", "[latency][rate]") {
    system_params p;
    p.lambda_bs = 1e-4;
    scheme_config c;
    c.scheme = search_scheme::exhaustive;
    c.model = antenna_model::ula;
    const rate_estimate r = estimate_data_rate(p, c, 2000, 777);
    CHECK(r.successes > 1500);
    // microseconds per kilobit at the mean rate
    const double slope = 1e9 / r.mean_rate_bps;
    CHECK(slope > 1.2);
    CHECK(slope < 4.8);
}

TEST_CASE("latency conventions obey the averaging inequality", "[latency][total]") {
    const std::vector<double> rates = {1e8, 2e8, 4e8};
    const frame_timing f;
    const double via_mean_rate =
        total_latency_from_samples(0.1, rates, 1e6, f, rate_convention::mean_rate);
    const double via_mean_latency =
        total_latency_from_samples(0.1, rates, 1e6, f, rate_convention::mean_latency);
    CHECK(via_mean_latency >= via_mean_rate - 1e-12);
    CHECK_THROWS_AS(total_latency_from_samples(0.1, {}, 1e6, f, rate_convention::mean_rate),
                    std::invalid_argument);
}

TEST_CASE("adapted frames scale the burst with the beam count", "[latency][frame]") {
    const frame_timing one = adapted_frame_for_beams(1);
    CHECK(one.t_cs == 0.078125);
    CHECK(one.t_ra == 0.078125);
    CHECK(one.n_ss_blocks == 1);
    CHECK(one.t_frame == 20.0);
    const frame_timing twelve = adapted_frame_for_beams(12);
    CHECK(twelve.t_cs == 0.9375);
    CHECK(twelve.t_ss_block() == Catch::Approx(0.078125).epsilon(1e-15));
}

TEST_CASE("beamwidth optimizer agrees with a direct grid scan", "[latency][optimize]") {
    system_params p;
    p.lambda_bs = 1e-3;
    const auto eval = analytic_failure_evaluator();
    const beam_count_report rep = optimize_beamwidth(p, 1, 0.1, {1, 16}, eval);
    REQUIRE(rep.grid.size() == 16);
    CHECK(rep.feasible);
    CHECK(rep.best_n_bs == 5);
    CHECK(rep.best_e_ia_ms == Catch::Approx(1.709465).margin(1e-5));
    CHECK(rep.grid[0].p_f == Catch::Approx(0.289693).margin(1e-5));
    CHECK(rep.grid[0].e_ia_ms == Catch::Approx(8.313091).margin(1e-5));
    CHECK_FALSE(rep.grid[0].feasible);
    // direct recomputation of every grid point
    int best_n = -1;
    double best_e = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= 16; ++n) {
        system_params q = p;
        q.n_bs = n;
        q.n_c = n;
        const double pf = failure_prob_los(q).value;
        const double e = expected_ia_latency(pf, adapted_frame_for_beams(n));
        const beam_count_point& pt = rep.grid[static_cast<std::size_t>(n - 1)];
        CHECK(pt.n_bs == n);
        CHECK(pt.p_f == pf);
        CHECK(pt.e_ia_ms == e);
        if (pf <= 0.1 && e < best_e) {
            best_e = e;
            best_n = n;
        }
    }
    CHECK(rep.best_n_bs == best_n);
    CHECK(rep.best_e_ia_ms == best_e);
}

TEST_CASE("beamwidth optimizer reports infeasibility honestly", "[latency][optimize]") {
    system_params p;
    p.lambda_bs = 1e-3;
    const beam_count_report rep = optimize_beamwidth(p, 1, 1e-6, {1, 16},
                                                     analytic_failure_evaluator());
    CHECK_FALSE(rep.feasible);
    CHECK(rep.best_n_bs == -1);
    CHECK(std::isinf(rep.best_e_ia_ms));
    CHECK(rep.min_p_f > 1e-6);
    // the diagnostics point at the true grid minimum
    double min_pf = 1.0;
    int min_n = -1;
    for (const beam_count_point& pt : rep.grid)
        if (pt.p_f < min_pf) {
            min_pf = pt.p_f;
            min_n = pt.n_bs;
        }
    CHECK(rep.min_p_f == min_pf);
    CHECK(rep.min_p_f_n_bs == min_n);
    CHECK_THROWS_AS(optimize_beamwidth(p, 0, 0.1, {1, 4}, analytic_failure_evaluator()),
                    std::invalid_argument);
    CHECK_THROWS_AS(optimize_beamwidth(p, 1, 0.1, {0, 4}, analytic_failure_evaluator()),
                    std::invalid_argument);
    CHECK_THROWS_AS(optimize_beamwidth(p, 1, 0.1, {5, 3}, analytic_failure_evaluator()),
                    std::invalid_argument);
}

TEST_CASE("sampled failure evaluator is deterministic and counts cycles", "[latency][optimize]") {
    system_params p;
    p.lambda_bs = 1e-4;
    scheme_config c;
    c.scheme = search_scheme::random_beamforming;
    c.model = antenna_model::ula;
    const auto eval = mc_failure_evaluator(c, 500, 3);
    system_params q = p;
    q.n_bs = 12;
    q.n_c = 24;
    CHECK(eval(q) == eval(q));
    scheme_config two = c;
    two.n_cycles = 2;
    CHECK(eval(q) == estimate_failure(two, q, 500, 3, 1).value);
}
