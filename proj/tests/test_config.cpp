#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "beamscan/config.hpp"

using namespace beamscan;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

TEST_CASE("empty text parses to the default experiment", "[config][parse]") {
    const experiment_spec s = parse_config("");
    CHECK(s == experiment_spec{});
    CHECK(s.preset == "custom");
    CHECK(s.trials == 20000);
    CHECK(s.system.sinr_threshold == 1.0); // 0 dB resolves to exactly 1
    CHECK(s.search.stage1_beamwidth == pi / 2.0);
}

TEST_CASE("values land in their sections with range checks", "[config][parse]") {
    const experiment_spec s = parse_config("[experiment]\n"
                                           "trials = 500\n"
                                           "seed = 9\n"
                                           "engines = analytic, monte_carlo\n"
                                           "[system]\n"
                                           "lambda_bs = 2e-4\n"
                                           "sinr_threshold_db = 0\n"
                                           "alpha_nlos = inf\n"
                                           "[frame]\n"
                                           "t_cs_ms = 2.5\n");
    CHECK(s.trials == 500);
    CHECK(s.seed == 9);
    REQUIRE(s.engines.size() == 2);
    CHECK(s.engines[1] == engine_kind::monte_carlo); // monte_carlo aliases mc
    CHECK(s.system.lambda_bs == 2e-4);
    CHECK(s.system.sinr_threshold == 1.0);
    CHECK(std::isinf(s.system.alpha_nlos));
    CHECK(s.frame.t_cs == 2.5);
}

TEST_CASE("errors carry the line number and key name", "[config][errors]") {
    CHECK_THROWS_MATCHES(parse_config("[system]\nbeta = 0.02\nn_bs = 0\n"), config_error,
                         MessageMatches(ContainsSubstring("line 3") && ContainsSubstring("n_bs")));
    CHECK_THROWS_MATCHES(parse_config("[experiment]\nbogus_key = 1\n"), config_error,
                         MessageMatches(ContainsSubstring("line 2") && ContainsSubstring("bogus_key")));
    CHECK_THROWS_MATCHES(parse_config("[warp]\n"), config_error,
                         MessageMatches(ContainsSubstring("unknown section")));
    CHECK_THROWS_MATCHES(parse_config("[system\nbeta = 0\n"), config_error,
                         MessageMatches(ContainsSubstring("malformed section")));
    CHECK_THROWS_MATCHES(parse_config("trials = 5\n"), config_error,
                         MessageMatches(ContainsSubstring("before any [section]")));
    CHECK_THROWS_MATCHES(parse_config("[system]\nlambda_bs = banana\n"), config_error,
                         MessageMatches(ContainsSubstring("not a number")));
    CHECK_THROWS_MATCHES(parse_config("[experiment]\ntrials = 12x\n"), config_error,
                         MessageMatches(ContainsSubstring("trailing characters")));
    CHECK_THROWS_MATCHES(parse_config("[experiment]\npreset = fig99\n"), config_error,
                         MessageMatches(ContainsSubstring("unknown preset")));
    CHECK_THROWS_MATCHES(parse_config("[experiment]\nsweep_parameter = voltage\n"), config_error,
                         MessageMatches(ContainsSubstring("lambda_bs")));
    CHECK_THROWS_MATCHES(parse_config("[experiment]\nengines = gpu\n"), config_error,
                         MessageMatches(ContainsSubstring("analytic or mc")));
}

TEST_CASE("cross-field violations surface as config errors", "[config][errors]") {
    // per-key checks pass but the assembled frame is impossible
    CHECK_THROWS_MATCHES(parse_config("[frame]\nt_cs_ms = 30\n"), config_error,
                         MessageMatches(ContainsSubstring("config: frame_timing")));
    CHECK_THROWS_MATCHES(parse_config("[system]\nalpha_los = 5\n"), config_error,
                         MessageMatches(ContainsSubstring("config: system_params")));
}

TEST_CASE("preset applies first regardless of position", "[config][preset]") {
    const experiment_spec a = parse_config("[experiment]\ntrials = 777\npreset = fig2\n");
    const experiment_spec b = parse_config("[experiment]\npreset = fig2\ntrials = 777\n");
    CHECK(a == b);
    CHECK(a.preset == "fig2");
    CHECK(a.trials == 777); // file override survives the preset defaults
    CHECK(a.sweep_parameter == "lambda_bs");
    CHECK(a.sweep_values.size() == 21);
    CHECK(a.calibrate);
    REQUIRE(a.calibration_anchors.size() == 2);
    CHECK(a.calibration_anchors[0].first == 1e-4);
}

TEST_CASE("calibration anchors parse and validate", "[config][calibration]") {
    const experiment_spec s =
        parse_config("[calibration]\nanchors = 1e-4:0.6058, 1e-3:0.0056\ncalibrate = true\n");
    REQUIRE(s.calibration_anchors.size() == 2);
    CHECK(s.calibration_anchors[1].second == 0.0056);
    CHECK(s.calibrate);
    CHECK_THROWS_MATCHES(parse_config("[calibration]\nanchors = 1e-4;0.5\n"), config_error,
                         MessageMatches(ContainsSubstring("density:failure")));
    CHECK_THROWS_MATCHES(parse_config("[calibration]\nanchors = 1e-4:1.5\n"), config_error,
                         MessageMatches(ContainsSubstring("[0, 1]")));
}

TEST_CASE("emitted text reparses to the identical spec", "[config][roundtrip]") {
    // default spec
    experiment_spec d;
    CHECK(parse_config(emit_config(d)) == d);
    // every built-in preset
    for (const char* name : {"custom", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7"}) {
        const experiment_spec p = preset_spec(name);
        const std::string text = emit_config(p);
        CHECK(parse_config(text) == p);
        CHECK(emit_config(parse_config(text)) == text); // emission is a fixpoint
    }
    CHECK_THROWS_AS(preset_spec("fig1"), config_error);
}

TEST_CASE("awkward values survive the round trip", "[config][roundtrip]") {
    const experiment_spec s = parse_config("[experiment]\n"
                                           "sweep_parameter = packet_bits\n"
                                           "sweep_values = 1e3, 31622.776601683792, 1e9\n"
                                           "engines = mc\n"
                                           "trials = 1234\n"
                                           "threads = 3\n"
                                           "output_path = runs/odd name.csv\n"
                                           "rate_convention = mean_latency\n"
                                           "[system]\n"
                                           "alpha_nlos = inf\n"
                                           "sinr_threshold_db = 3.7\n"
                                           "lambda_bs = 7.25e-4\n"
                                           "epsilon = 0.1234567890123456\n"
                                           "[search]\n"
                                           "scheme = is\n"
                                           "beam_pattern = ula\n"
                                           "n_cycles = 4\n"
                                           "stage1_beamwidth_deg = 23.456\n"
                                           "stage1_model = dirichlet\n"
                                           "fading_redraw = slot\n"
                                           "nlos_links = true\n"
                                           "[calibration]\n"
                                           "anchors = 1e-4:0.605845579065449, 1e-3:0.0055885814813564\n"
                                           "residual_threshold = 0.002\n"
                                           "calibrate = true\n");
    CHECK(s.search.scheme == search_scheme::iterative);
    CHECK(s.search.stage1_dirichlet);
    CHECK(s.search.fading_per_slot);
    CHECK(s.search.nlos_links);
    CHECK(s.system.sinr_threshold == db_to_linear(3.7));
    CHECK(s.search.stage1_beamwidth == 23.456 * pi / 180.0);
    const experiment_spec back = parse_config(emit_config(s));
    CHECK(back == s);
    CHECK(emit_config(back) == emit_config(s));
}

TEST_CASE("comments and blank lines are ignored", "[config][parse]") {
    const experiment_spec s = parse_config("# leading comment\n"
                                           "\n"
                                           "[experiment]\n"
                                           "# trials = 99\n"
                                           "trials = 321   # trailing note\n"
                                           "\n");
    CHECK(s.trials == 321);
}
