#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "beamscan/latency.hpp"
#include "beamscan/params.hpp"
#include "beamscan/simulate.hpp"

namespace beamscan {

enum class engine_kind { analytic, monte_carlo };

struct experiment_spec {
    std::string preset = "custom";
    std::string sweep_parameter = "lambda_bs";
    std::vector<double> sweep_values;
    std::vector<engine_kind> engines = {engine_kind::analytic, engine_kind::monte_carlo};
    long trials = 20000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string output_path = "results.csv";
    rate_convention convention = rate_convention::mean_rate;

    // Authoritative config-unit values. The derived fields system.sinr_threshold
    // and search.stage1_beamwidth are recomputed from these at parse time; the
    // unit conversions are not bit-invertible, so the config units are stored.
    double sinr_threshold_db = 0.0;
    double stage1_beamwidth_deg = 90.0;

    system_params system;
    frame_timing frame;
    scheme_config search;

    std::vector<std::pair<double, double>> calibration_anchors;
    double calibration_residual_threshold = 5e-3;
    bool calibrate = false; // fit the sidelobe level from the anchors before running

    bool operator==(const experiment_spec&) const = default;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] inline void bad_key(int line, const std::string& key, const std::string& what) {
    throw config_error("config line " + std::to_string(line) + ": " + key + " " + what);
}

inline double parse_double(int line, const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) bad_key(line, key, "has trailing characters: '" + value + "'");
        return v;
    } catch (const config_error&) {
        throw;
    } catch (const std::exception&) {
        bad_key(line, key, "is not a number: '" + value + "'");
    }
}

inline long parse_long(int line, const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) bad_key(line, key, "has trailing characters: '" + value + "'");
        return v;
    } catch (const config_error&) {
        throw;
    } catch (const std::exception&) {
        bad_key(line, key, "is not an integer: '" + value + "'");
    }
}

inline bool parse_bool(int line, const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_key(line, key, "must be true or false, got '" + value + "'");
}

inline std::vector<std::string> split_csv(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(trim(value.substr(start)));
            break;
        }
        out.push_back(trim(value.substr(start, comma - start)));
        start = comma + 1;
    }
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// Canonical starting points for the named sweeps. Values land in one CSV row
// per (sweep value, curve, engine); the runner interprets the preset token.
inline experiment_spec preset_spec(const std::string& name) {
    experiment_spec s;
    s.preset = name;
    auto log_grid = [] {
        std::vector<double> g;
        for (int i = 0; i <= 20; ++i) g.push_back(std::pow(10.0, -5.0 + 0.1 * i));
        return g;
    };
    if (name == "custom") {
        return s;
    }
    // Reference detection-failure measurements at two densities; presets that
    // draw sidelobe curves fit the sidelobe level to these at run time.
    const std::vector<std::pair<double, double>> sidelobe_anchors = {
        {1e-4, 0.605845579065449}, {1e-3, 0.0055885814813564}};
    if (name == "fig2") { // detection failure vs density: three analytic models + three scan schemes
        s.sweep_parameter = "lambda_bs";
        s.sweep_values = log_grid();
        s.calibrate = true;
        s.calibration_anchors = sidelobe_anchors;
    } else if (name == "fig3") { // expected access latency vs density, per scheme
        s.sweep_parameter = "lambda_bs";
        s.sweep_values = log_grid();
        s.engines = {engine_kind::monte_carlo};
    } else if (name == "fig4") { // sidelobe model vs blockage exponent, three array settings
        s.sweep_parameter = "beta";
        s.sweep_values.clear();
        for (int i = 0; i <= 20; ++i) s.sweep_values.push_back(0.005 * i);
        s.search.model = antenna_model::sbp;
        s.calibrate = true;
        s.calibration_anchors = sidelobe_anchors;
    } else if (name == "fig5") { // detection failure vs slot budget at the default density
        s.sweep_parameter = "n_c";
        s.sweep_values = {1, 12, 14, 24, 27, 28, 36, 42, 47, 48, 55, 56, 60};
        s.engines = {engine_kind::monte_carlo};
    } else if (name == "fig6") { // failure and access latency vs beam count, four densities
        s.sweep_parameter = "n_bs";
        s.sweep_values.clear();
        for (int n = 1; n <= 50; ++n) s.sweep_values.push_back(n);
        s.engines = {engine_kind::analytic};
    } else if (name == "fig7") { // total transmission latency vs packet size, per scheme
        s.sweep_parameter = "packet_bits";
        s.sweep_values = {1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9};
        s.engines = {engine_kind::monte_carlo};
        s.trials = 4000;
    } else {
        throw config_error("unknown preset '" + name + "'");
    }
    return s;
}

// Plain-text key=value configuration with [section] headers. Unknown sections
// and keys are rejected with their line number; omitted keys keep defaults.
inline experiment_spec parse_config(const std::string& text) {
    using detail::bad_key;
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_long;
    using detail::trim;

    // First pass: find the preset so its plan forms the base the remaining
    // keys override, wherever the preset line sits in the file.
    std::vector<std::tuple<int, std::string, std::string, std::string>> entries;
    {
        std::string section;
        int line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            const std::size_t nl = text.find('\n', start);
            std::string line = nl == std::string::npos ? text.substr(start)
                                                       : text.substr(start, nl - start);
            start = nl == std::string::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw config_error("config line " + std::to_string(line_no) +
                                       ": malformed section header '" + line + "'");
                section = trim(line.substr(1, line.size() - 2));
                if (section != "experiment" && section != "system" && section != "frame" &&
                    section != "search" && section != "calibration")
                    throw config_error("config line " + std::to_string(line_no) +
                                       ": unknown section [" + section + "]");
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(line_no) +
                                   ": expected key = value, got '" + line + "'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw config_error("config line " + std::to_string(line_no) + ": empty key");
            if (section.empty())
                throw config_error("config line " + std::to_string(line_no) + ": key '" + key +
                                   "' appears before any [section] header");
            entries.emplace_back(line_no, section, key, value);
        }
    }

    experiment_spec spec;
    for (const auto& [line, section, key, value] : entries) {
        if (section == "experiment" && key == "preset") {
            try {
                spec = preset_spec(value);
            } catch (const config_error& e) {
                throw config_error("config line " + std::to_string(line) + ": " + e.what());
            }
        }
    }

    for (const auto& [line, section, key, value] : entries) {
        if (section == "experiment") {
            if (key == "preset") continue; // applied above
            if (key == "sweep_parameter") {
                if (value != "lambda_bs" && value != "beta" && value != "n_c" &&
                    value != "n_bs" && value != "packet_bits")
                    bad_key(line, key,
                            "must be one of lambda_bs, beta, n_c, n_bs, packet_bits");
                spec.sweep_parameter = value;
            } else if (key == "sweep_values") {
                spec.sweep_values.clear();
                for (const std::string& tok : detail::split_csv(value)) {
                    if (tok.empty()) bad_key(line, key, "contains an empty entry");
                    spec.sweep_values.push_back(parse_double(line, key, tok));
                }
                if (spec.sweep_values.empty()) bad_key(line, key, "must list at least one value");
            } else if (key == "engines") {
                spec.engines.clear();
                for (const std::string& tok : detail::split_csv(value)) {
                    if (tok == "analytic") spec.engines.push_back(engine_kind::analytic);
                    else if (tok == "mc" || tok == "monte_carlo")
                        spec.engines.push_back(engine_kind::monte_carlo);
                    else bad_key(line, key, "entries must be analytic or mc, got '" + tok + "'");
                }
                if (spec.engines.empty()) bad_key(line, key, "must list at least one engine");
            } else if (key == "trials") {
                spec.trials = parse_long(line, key, value);
                if (spec.trials < 1) bad_key(line, key, "must be >= 1");
            } else if (key == "seed") {
                const long v = parse_long(line, key, value);
                if (v < 0) bad_key(line, key, "must be >= 0");
                spec.seed = static_cast<std::uint64_t>(v);
            } else if (key == "threads") {
                const long v = parse_long(line, key, value);
                if (v < 0) bad_key(line, key, "must be >= 0 (0 = all hardware threads)");
                spec.threads = static_cast<int>(v);
            } else if (key == "output_path") {
                if (value.empty()) bad_key(line, key, "must not be empty");
                spec.output_path = value;
            } else if (key == "rate_convention") {
                if (value == "mean_rate") spec.convention = rate_convention::mean_rate;
                else if (value == "mean_latency") spec.convention = rate_convention::mean_latency;
                else bad_key(line, key, "must be mean_rate or mean_latency");
            } else {
                bad_key(line, key, "is not a key of [experiment]");
            }
        } else if (section == "system") {
            system_params& p = spec.system;
            if (key == "lambda_bs") {
                p.lambda_bs = parse_double(line, key, value);
                if (!(p.lambda_bs > 0.0)) bad_key(line, key, "must be > 0");
            } else if (key == "beta") {
                p.beta = parse_double(line, key, value);
                if (!(p.beta >= 0.0)) bad_key(line, key, "must be >= 0");
            } else if (key == "alpha_los") {
                p.alpha_los = parse_double(line, key, value);
                if (!(p.alpha_los >= 2.0)) bad_key(line, key, "must be >= 2");
            } else if (key == "alpha_nlos") {
                if (value == "inf" || value == "infinity")
                    p.alpha_nlos = std::numeric_limits<double>::infinity();
                else p.alpha_nlos = parse_double(line, key, value);
                if (!(p.alpha_nlos >= 2.0)) bad_key(line, key, "must be >= 2 (or inf)");
            } else if (key == "f_c_hz") {
                p.f_c = parse_double(line, key, value);
                if (!(p.f_c > 0.0)) bad_key(line, key, "must be > 0");
            } else if (key == "p_bs_control_w") {
                p.p_bs_control = parse_double(line, key, value);
                if (!(p.p_bs_control > 0.0)) bad_key(line, key, "must be > 0");
            } else if (key == "p_bs_data_w") {
                p.p_bs_data = parse_double(line, key, value);
                if (!(p.p_bs_data > 0.0)) bad_key(line, key, "must be > 0");
            } else if (key == "bw_control_hz") {
                p.bw_control = parse_double(line, key, value);
                if (!(p.bw_control > 0.0)) bad_key(line, key, "must be > 0");
            } else if (key == "bw_data_hz") {
                p.bw_data = parse_double(line, key, value);
                if (!(p.bw_data > 0.0)) bad_key(line, key, "must be > 0");
            } else if (key == "noise_figure_db") {
                p.noise_figure_db = parse_double(line, key, value);
            } else if (key == "sinr_threshold_db") {
                spec.sinr_threshold_db = parse_double(line, key, value);
            } else if (key == "n_bs") {
                p.n_bs = static_cast<int>(parse_long(line, key, value));
                if (p.n_bs < 1) bad_key(line, key, "must be a positive integer");
            } else if (key == "n_ue") {
                p.n_ue = static_cast<int>(parse_long(line, key, value));
                if (p.n_ue < 1) bad_key(line, key, "must be a positive integer");
            } else if (key == "m_bs") {
                p.m_bs = static_cast<int>(parse_long(line, key, value));
                if (p.m_bs < 1) bad_key(line, key, "must be a positive integer");
            } else if (key == "m_ue") {
                p.m_ue = static_cast<int>(parse_long(line, key, value));
                if (p.m_ue < 1) bad_key(line, key, "must be a positive integer");
            } else if (key == "epsilon") {
                p.epsilon = parse_double(line, key, value);
                if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0))
                    bad_key(line, key, "must lie in [0, 1]");
            } else if (key == "n_c") {
                p.n_c = static_cast<int>(parse_long(line, key, value));
                if (p.n_c < 1) bad_key(line, key, "must be a positive integer");
            } else if (key == "region_radius_m") {
                p.region_radius = parse_double(line, key, value);
                if (!(p.region_radius > 0.0)) bad_key(line, key, "must be > 0");
            } else {
                bad_key(line, key, "is not a key of [system]");
            }
        } else if (section == "frame") {
            frame_timing& f = spec.frame;
            if (key == "t_frame_ms") {
                f.t_frame = parse_double(line, key, value);
                if (!(f.t_frame > 0.0)) bad_key(line, key, "must be > 0");
            } else if (key == "t_cs_ms") {
                f.t_cs = parse_double(line, key, value);
                if (!(f.t_cs > 0.0)) bad_key(line, key, "must be > 0");
            } else if (key == "t_ra_ms") {
                f.t_ra = parse_double(line, key, value);
                if (!(f.t_ra >= 0.0)) bad_key(line, key, "must be >= 0");
            } else if (key == "n_ss_blocks") {
                f.n_ss_blocks = static_cast<int>(parse_long(line, key, value));
                if (f.n_ss_blocks < 1) bad_key(line, key, "must be a positive integer");
            } else {
                bad_key(line, key, "is not a key of [frame]");
            }
        } else if (section == "search") {
            scheme_config& c = spec.search;
            if (key == "scheme") {
                if (value == "rb") c.scheme = search_scheme::random_beamforming;
                else if (value == "es") c.scheme = search_scheme::exhaustive;
                else if (value == "is") c.scheme = search_scheme::iterative;
                else bad_key(line, key, "must be rb, es, or is");
            } else if (key == "beam_pattern") {
                if (value == "sbp") c.model = antenna_model::sbp;
                else if (value == "ula") c.model = antenna_model::ula;
                else bad_key(line, key, "must be sbp or ula");
            } else if (key == "n_cycles") {
                c.n_cycles = static_cast<int>(parse_long(line, key, value));
                if (c.n_cycles < 1) bad_key(line, key, "must be a positive integer");
            } else if (key == "stage1_beamwidth_deg") {
                const double deg = parse_double(line, key, value);
                if (!(deg > 0.0 && deg <= 360.0)) bad_key(line, key, "must lie in (0, 360]");
                spec.stage1_beamwidth_deg = deg;
            } else if (key == "stage1_model") {
                if (value == "sector") c.stage1_dirichlet = false;
                else if (value == "dirichlet") c.stage1_dirichlet = true;
                else bad_key(line, key, "must be sector or dirichlet");
            } else if (key == "fading_redraw") {
                if (value == "sweep") c.fading_per_slot = false;
                else if (value == "slot") c.fading_per_slot = true;
                else bad_key(line, key, "must be sweep or slot");
            } else if (key == "nlos_links") {
                c.nlos_links = parse_bool(line, key, value);
            } else {
                bad_key(line, key, "is not a key of [search]");
            }
        } else { // calibration
            if (key == "anchors") {
                spec.calibration_anchors.clear();
                for (const std::string& tok : detail::split_csv(value)) {
                    const std::size_t colon = tok.find(':');
                    if (colon == std::string::npos)
                        bad_key(line, key, "entries must look like density:failure, got '" + tok +
                                               "'");
                    const double lam = parse_double(line, key, trim(tok.substr(0, colon)));
                    const double pf = parse_double(line, key, trim(tok.substr(colon + 1)));
                    if (!(lam > 0.0)) bad_key(line, key, "anchor densities must be > 0");
                    if (!(pf >= 0.0 && pf <= 1.0))
                        bad_key(line, key, "anchor failures must lie in [0, 1]");
                    spec.calibration_anchors.emplace_back(lam, pf);
                }
            } else if (key == "residual_threshold") {
                spec.calibration_residual_threshold = parse_double(line, key, value);
                if (!(spec.calibration_residual_threshold > 0.0))
                    bad_key(line, key, "must be > 0");
            } else if (key == "calibrate") {
                spec.calibrate = parse_bool(line, key, value);
            } else {
                bad_key(line, key, "is not a key of [calibration]");
            }
        }
    }

    spec.system.sinr_threshold = db_to_linear(spec.sinr_threshold_db);
    spec.search.stage1_beamwidth = spec.stage1_beamwidth_deg * pi / 180.0;
    try {
        validate(spec.system);
        validate(spec.frame);
        detail::validate_config(spec.system, spec.search);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return spec;
}

// Canonical text for a spec; parse_config(emit_config(s)) == s.
inline std::string emit_config(const experiment_spec& s) {
    using detail::format_double;
    std::string out;
    auto kv = [&out](const std::string& k, const std::string& v) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    };
    out += "[experiment]\n";
    kv("preset", s.preset);
    kv("sweep_parameter", s.sweep_parameter);
    if (!s.sweep_values.empty()) {
        std::string vals;
        for (std::size_t i = 0; i < s.sweep_values.size(); ++i) {
            if (i) vals += ",";
            vals += format_double(s.sweep_values[i]);
        }
        kv("sweep_values", vals);
    }
    {
        std::string engines;
        for (std::size_t i = 0; i < s.engines.size(); ++i) {
            if (i) engines += ",";
            engines += s.engines[i] == engine_kind::analytic ? "analytic" : "mc";
        }
        kv("engines", engines);
    }
    kv("trials", std::to_string(s.trials));
    kv("seed", std::to_string(s.seed));
    kv("threads", std::to_string(s.threads));
    kv("output_path", s.output_path);
    kv("rate_convention",
       s.convention == rate_convention::mean_rate ? "mean_rate" : "mean_latency");
    out += "\n[system]\n";
    const system_params& p = s.system;
    kv("lambda_bs", format_double(p.lambda_bs));
    kv("beta", format_double(p.beta));
    kv("alpha_los", format_double(p.alpha_los));
    kv("alpha_nlos", std::isinf(p.alpha_nlos) ? "inf" : format_double(p.alpha_nlos));
    kv("f_c_hz", format_double(p.f_c));
    kv("p_bs_control_w", format_double(p.p_bs_control));
    kv("p_bs_data_w", format_double(p.p_bs_data));
    kv("bw_control_hz", format_double(p.bw_control));
    kv("bw_data_hz", format_double(p.bw_data));
    kv("noise_figure_db", format_double(p.noise_figure_db));
    kv("sinr_threshold_db", format_double(s.sinr_threshold_db));
    kv("n_bs", std::to_string(p.n_bs));
    kv("n_ue", std::to_string(p.n_ue));
    kv("m_bs", std::to_string(p.m_bs));
    kv("m_ue", std::to_string(p.m_ue));
    kv("epsilon", format_double(p.epsilon));
    kv("n_c", std::to_string(p.n_c));
    kv("region_radius_m", format_double(p.region_radius));
    out += "\n[frame]\n";
    kv("t_frame_ms", format_double(s.frame.t_frame));
    kv("t_cs_ms", format_double(s.frame.t_cs));
    kv("t_ra_ms", format_double(s.frame.t_ra));
    kv("n_ss_blocks", std::to_string(s.frame.n_ss_blocks));
    out += "\n[search]\n";
    const scheme_config& c = s.search;
    kv("scheme", c.scheme == search_scheme::random_beamforming
                     ? "rb"
                     : (c.scheme == search_scheme::exhaustive ? "es" : "is"));
    kv("beam_pattern", c.model == antenna_model::sbp ? "sbp" : "ula");
    kv("n_cycles", std::to_string(c.n_cycles));
    kv("stage1_beamwidth_deg", format_double(s.stage1_beamwidth_deg));
    kv("stage1_model", c.stage1_dirichlet ? "dirichlet" : "sector");
    kv("fading_redraw", c.fading_per_slot ? "slot" : "sweep");
    kv("nlos_links", c.nlos_links ? "true" : "false");
    out += "\n[calibration]\n";
    if (!s.calibration_anchors.empty()) {
        std::string anchors;
        for (std::size_t i = 0; i < s.calibration_anchors.size(); ++i) {
            if (i) anchors += ",";
            anchors += format_double(s.calibration_anchors[i].first);
            anchors += ":";
            anchors += format_double(s.calibration_anchors[i].second);
        }
        kv("anchors", anchors);
    }
    kv("residual_threshold", format_double(s.calibration_residual_threshold));
    kv("calibrate", s.calibrate ? "true" : "false");
    return out;
}

} // namespace beamscan
