#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "beamscan/analytic.hpp"
#include "beamscan/config.hpp"
#include "beamscan/csv.hpp"
#include "beamscan/latency.hpp"
#include "beamscan/params.hpp"
#include "beamscan/simulate.hpp"

#include "json.hpp"

namespace beamscan {

// One output record: a point estimate for one (sweep value, curve, engine)
// cell. uncertainty is a 95% CI half-width for Monte Carlo rows and the
// quadrature error estimate for analytic rows; samples counts trials or
// integrand evaluations accordingly. A non-empty error marks a task that
// was attempted and failed; the run continues past it.
struct experiment_row {
    double sweep_value = 0.0;
    std::string scheme;
    std::string engine;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double uncertainty = 0.0;
    long samples = 0;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
    std::string error;
};

struct calibration_summary {
    std::string status = "not-requested"; // not-requested | ok | calibration-failed
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    double residual_rms = std::numeric_limits<double>::quiet_NaN();
    std::string message;
};

struct experiment_result {
    experiment_spec spec; // resolved: sidelobe level updated when calibrated
    std::vector<experiment_row> rows;
    calibration_summary calibration;
    double total_wall_time_s = 0.0;
};

namespace detail {

inline const char* engine_name(engine_kind k) {
    return k == engine_kind::analytic ? "analytic" : "mc";
}

inline std::string density_label(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "l%g", lambda);
    return buf;
}

// Sequences row tasks: every row gets a deterministic seed derived from its
// position, independent of what earlier tasks computed, so reruns and cache
// hits cannot shift the random streams of later rows.
class row_runner {
  public:
    row_runner(const experiment_spec& spec, std::vector<experiment_row>& rows,
               std::function<void(const experiment_row&)> on_row)
        : spec_(spec), rows_(rows), on_row_(std::move(on_row)) {}

    template <typename Compute>
    const experiment_row& add(double sweep_value, const std::string& scheme,
                              const std::string& engine, Compute&& compute) {
        experiment_row r;
        r.sweep_value = sweep_value;
        r.scheme = scheme;
        r.engine = engine;
        r.seed = spec_.seed + 1000003ull * static_cast<std::uint64_t>(task_index_++);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            compute(r);
        } catch (const std::exception& e) {
            r.estimate = std::numeric_limits<double>::quiet_NaN();
            r.error = e.what();
        }
        r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows_.push_back(r);
        if (on_row_) on_row_(rows_.back());
        return rows_.back();
    }

    const experiment_spec& spec() const { return spec_; }

  private:
    const experiment_spec& spec_;
    std::vector<experiment_row>& rows_;
    std::function<void(const experiment_row&)> on_row_;
    long task_index_ = 0;
};

inline bool wants(const experiment_spec& s, engine_kind k) {
    return std::find(s.engines.begin(), s.engines.end(), k) != s.engines.end();
}

// Half-width of the access-latency interval induced by a failure-probability
// interval of half-width ci around p_f.
inline double ia_latency_halfwidth(double p_f, double ci, const frame_timing& f) {
    if (!(ci > 0.0)) return 0.0;
    const double lo = std::max(0.0, p_f - ci);
    const double hi = std::min(1.0, p_f + ci);
    const double d = (expected_ia_latency(hi, f) - expected_ia_latency(lo, f)) / 2.0;
    return std::isnan(d) ? std::numeric_limits<double>::infinity() : d;
}

inline void fill_analytic(experiment_row& r, const analytic_result& a) {
    r.estimate = a.value;
    r.uncertainty = a.error_estimate;
    r.samples = a.evaluations;
}

inline void fill_mc(experiment_row& r, const failure_estimate& e) {
    r.estimate = e.value;
    r.uncertainty = e.ci_halfwidth;
    r.samples = e.trials;
}

inline const char* scheme_label(search_scheme s) {
    switch (s) {
        case search_scheme::random_beamforming: return "rb";
        case search_scheme::exhaustive: return "es";
        case search_scheme::iterative: return "is";
    }
    return "rb";
}

inline search_scheme scheme_from_label(const std::string& label) {
    if (label == "rb") return search_scheme::random_beamforming;
    if (label == "es") return search_scheme::exhaustive;
    return search_scheme::iterative;
}

// Detection failure vs density: the three closed-form models and the three
// scan schemes under the array pattern.
inline void run_density_sweep(row_runner& run, const experiment_spec& s) {
    for (double lambda : s.sweep_values) {
        system_params p = s.system;
        p.lambda_bs = lambda;
        if (wants(s, engine_kind::analytic)) {
            run.add(lambda, "rb_los", "analytic",
                    [&](experiment_row& r) { fill_analytic(r, failure_prob_los(p)); });
            run.add(lambda, "rb_nlos", "analytic",
                    [&](experiment_row& r) { fill_analytic(r, failure_prob_nlos(p)); });
            run.add(lambda, "rb_sidelobe", "analytic",
                    [&](experiment_row& r) { fill_analytic(r, failure_prob_sidelobe(p)); });
        }
        if (wants(s, engine_kind::monte_carlo)) {
            for (const char* label : {"rb", "es", "is"}) {
                run.add(lambda, label, "mc", [&](experiment_row& r) {
                    scheme_config c = s.search;
                    c.scheme = scheme_from_label(label);
                    fill_mc(r, estimate_failure(c, p, s.trials, r.seed, s.threads));
                });
            }
        }
    }
}

// Expected access latency vs density: scheme failure probabilities pushed
// through the frame model, with the scan-phase length each scheme needs.
inline void run_latency_sweep(row_runner& run, const experiment_spec& s) {
    for (double lambda : s.sweep_values) {
        system_params p = s.system;
        p.lambda_bs = lambda;
        for (const char* label : {"rb", "es", "is"}) {
            scheme_config c = s.search;
            c.scheme = scheme_from_label(label);
            const frame_timing frame = frame_for_blocks(c.default_ss_blocks());
            if (wants(s, engine_kind::analytic) && c.scheme == search_scheme::random_beamforming) {
                run.add(lambda, label, "analytic", [&](experiment_row& r) {
                    const analytic_result a = failure_prob_los(p);
                    r.estimate = expected_ia_latency(a.value, frame);
                    r.uncertainty = ia_latency_halfwidth(a.value, a.error_estimate, frame);
                    r.samples = a.evaluations;
                });
            }
            if (wants(s, engine_kind::monte_carlo)) {
                run.add(lambda, label, "mc", [&](experiment_row& r) {
                    const failure_estimate e = estimate_failure(c, p, s.trials, r.seed, s.threads);
                    r.estimate = expected_ia_latency(e.value, frame);
                    r.uncertainty = ia_latency_halfwidth(e.value, e.ci_halfwidth, frame);
                    r.samples = e.trials;
                });
            }
        }
    }
}

// Sidelobe model vs blockage exponent for three array settings.
inline void run_blockage_sweep(row_runner& run, const experiment_spec& s) {
    struct setting {
        int n_bs, n_ue, n_c;
        const char* label;
    };
    const setting settings[] = {{12, 4, 12, "bs12_ue4"}, {3, 4, 3, "bs3_ue4"}, {1, 1, 1, "bs1_ue1"}};
    for (double beta : s.sweep_values) {
        for (const setting& cfg : settings) {
            system_params p = s.system;
            p.beta = beta;
            p.n_bs = cfg.n_bs;
            p.n_ue = cfg.n_ue;
            p.n_c = cfg.n_c;
            if (wants(s, engine_kind::analytic)) {
                run.add(beta, cfg.label, "analytic",
                        [&](experiment_row& r) { fill_analytic(r, failure_prob_sidelobe(p)); });
            }
            if (wants(s, engine_kind::monte_carlo)) {
                run.add(beta, cfg.label, "mc", [&](experiment_row& r) {
                    scheme_config c = s.search;
                    c.scheme = search_scheme::random_beamforming;
                    c.n_cycles = 1;
                    fill_mc(r, estimate_failure(c, p, s.trials, r.seed, s.threads));
                });
            }
        }
    }
}

// Detection failure vs total slot budget. Budgets are spent in whole scan
// cycles; a budget below one cycle cannot finish a scan, so it fails surely.
inline void run_budget_sweep(row_runner& run, const experiment_spec& s) {
    std::map<std::pair<std::string, int>, experiment_row> cache;
    for (double budget : s.sweep_values) {
        for (const char* label : {"rb", "es", "is"}) {
            if (!wants(s, engine_kind::monte_carlo)) continue;
            scheme_config c = s.search;
            c.scheme = scheme_from_label(label);
            const int per_cycle = c.cycle_slots(s.system);
            const int cycles = static_cast<int>(budget) / per_cycle;
            run.add(budget, label, "mc", [&](experiment_row& r) {
                if (cycles < 1) {
                    r.estimate = 1.0;
                    r.uncertainty = 0.0;
                    r.samples = 0;
                    return;
                }
                const auto key = std::make_pair(std::string(label), cycles);
                auto hit = cache.find(key);
                if (hit != cache.end()) {
                    r.estimate = hit->second.estimate;
                    r.uncertainty = hit->second.uncertainty;
                    r.samples = hit->second.samples;
                    r.seed = hit->second.seed;
                    return;
                }
                c.n_cycles = cycles;
                fill_mc(r, estimate_failure(c, s.system, s.trials, r.seed, s.threads));
                cache.emplace(key, r);
            });
        }
    }
}

// Failure and access latency vs beam count at several densities; the frame's
// scan phase scales with the beam count, trading alignment gain against
// overhead.
inline void run_beam_count_sweep(row_runner& run, const experiment_spec& s) {
    const double densities[] = {1e-4, 2e-4, 5e-4, 1e-3};
    for (double nv : s.sweep_values) {
        const int n = static_cast<int>(nv);
        for (double lambda : densities) {
            system_params p = s.system;
            p.lambda_bs = lambda;
            p.n_bs = n;
            p.n_c = n;
            const std::string lbl = density_label(lambda);
            const frame_timing frame = adapted_frame_for_beams(n);
            if (wants(s, engine_kind::analytic)) {
                analytic_result a;
                const experiment_row row_f =
                    run.add(nv, "failure_" + lbl, "analytic", [&](experiment_row& r) {
                        a = failure_prob_los(p);
                        fill_analytic(r, a);
                    });
                run.add(nv, "latency_" + lbl, "analytic", [&](experiment_row& r) {
                    if (!row_f.error.empty()) throw std::runtime_error(row_f.error);
                    r.estimate = expected_ia_latency(a.value, frame);
                    r.uncertainty = ia_latency_halfwidth(a.value, a.error_estimate, frame);
                    r.samples = a.evaluations;
                });
            }
            if (wants(s, engine_kind::monte_carlo)) {
                failure_estimate e;
                const experiment_row row_f =
                    run.add(nv, "failure_" + lbl, "mc", [&](experiment_row& r) {
                        scheme_config c = s.search;
                        c.scheme = search_scheme::random_beamforming;
                        c.n_cycles = 1;
                        e = estimate_failure(c, p, s.trials, r.seed, s.threads);
                        fill_mc(r, e);
                    });
                run.add(nv, "latency_" + lbl, "mc", [&](experiment_row& r) {
                    if (!row_f.error.empty()) throw std::runtime_error(row_f.error);
                    r.estimate = expected_ia_latency(e.value, frame);
                    r.uncertainty = ia_latency_halfwidth(e.value, e.ci_halfwidth, frame);
                    r.samples = e.trials;
                    r.seed = row_f.seed;
                });
            }
        }
    }
}

struct rate_cache_entry {
    rate_estimate rate;
    std::uint64_t seed = 0;
};

// Total transfer latency vs packet size: per scheme and density, the data
// rate is estimated once over successful accesses and reused for every
// packet size on the curve.
inline void run_packet_sweep(row_runner& run, const experiment_spec& s,
                             const std::vector<double>& densities,
                             const std::vector<const char*>& schemes) {
    std::map<std::string, rate_cache_entry> cache;
    for (double bits : s.sweep_values) {
        for (double lambda : densities) {
            for (const char* label : schemes) {
                if (!wants(s, engine_kind::monte_carlo)) continue;
                const std::string curve =
                    densities.size() > 1 ? std::string(label) + "_" + density_label(lambda)
                                         : std::string(label);
                run.add(bits, curve, "mc", [&](experiment_row& r) {
                    auto hit = cache.find(curve);
                    if (hit == cache.end()) {
                        system_params p = s.system;
                        p.lambda_bs = lambda;
                        scheme_config c = s.search;
                        c.scheme = scheme_from_label(label);
                        rate_cache_entry entry;
                        entry.rate = estimate_data_rate(p, c, s.trials, r.seed);
                        entry.seed = r.seed;
                        hit = cache.emplace(curve, std::move(entry)).first;
                    }
                    const rate_cache_entry& entry = hit->second;
                    r.seed = entry.seed;
                    scheme_config c = s.search;
                    c.scheme = scheme_from_label(label);
                    const frame_timing frame = frame_for_blocks(c.default_ss_blocks());
                    const rate_estimate& rate = entry.rate;
                    r.samples = rate.successes;
                    r.estimate = total_latency_from_samples(rate.p_f, rate.rate_samples_bps, bits,
                                                            frame, s.convention);
                    if (rate.rate_samples_bps.size() > 1) {
                        const double z = 1.959963984540054;
                        if (s.convention == rate_convention::mean_rate) {
                            const double sd = std::sqrt(sample_variance(rate.rate_samples_bps));
                            const double se =
                                z * sd / std::sqrt(static_cast<double>(rate.rate_samples_bps.size()));
                            const double lo = rate.mean_rate_bps - se;
                            if (lo <= 0.0) {
                                r.uncertainty = std::numeric_limits<double>::infinity();
                            } else {
                                const double d_hi =
                                    expected_total_latency(rate.p_f, lo, bits, frame);
                                const double d_lo = expected_total_latency(
                                    rate.p_f, rate.mean_rate_bps + se, bits, frame);
                                r.uncertainty = (d_hi - d_lo) / 2.0;
                            }
                        } else {
                            std::vector<double> lat;
                            lat.reserve(rate.rate_samples_bps.size());
                            for (double rb : rate.rate_samples_bps)
                                lat.push_back(expected_total_latency(rate.p_f, rb, bits, frame));
                            const double sd = std::sqrt(sample_variance(lat));
                            r.uncertainty =
                                z * sd / std::sqrt(static_cast<double>(lat.size()));
                        }
                    }
                });
            }
        }
    }
}

// Free-form sweep over the configured parameter with the configured scheme.
inline void run_custom_sweep(row_runner& run, const experiment_spec& s) {
    std::vector<double> values = s.sweep_values;
    if (values.empty()) {
        if (s.sweep_parameter == "lambda_bs") values = {s.system.lambda_bs};
        else if (s.sweep_parameter == "beta") values = {s.system.beta};
        else if (s.sweep_parameter == "n_c") values = {static_cast<double>(s.system.n_c)};
        else if (s.sweep_parameter == "n_bs") values = {static_cast<double>(s.system.n_bs)};
        else values = {1e6};
    }
    if (s.sweep_parameter == "packet_bits") {
        experiment_spec sub = s;
        sub.sweep_values = values;
        run_packet_sweep(run, sub, {s.system.lambda_bs}, {scheme_label(s.search.scheme)});
        return;
    }
    for (double v : values) {
        system_params p = s.system;
        scheme_config c = s.search;
        if (s.sweep_parameter == "lambda_bs") p.lambda_bs = v;
        else if (s.sweep_parameter == "beta") p.beta = v;
        else if (s.sweep_parameter == "n_c") p.n_c = std::max(1, static_cast<int>(v));
        else if (s.sweep_parameter == "n_bs") p.n_bs = std::max(1, static_cast<int>(v));
        if (wants(s, engine_kind::analytic)) {
            const char* label = s.search.model == antenna_model::sbp ? "rb_sidelobe" : "rb_los";
            run.add(v, label, "analytic", [&](experiment_row& r) {
                if (s.search.model == antenna_model::sbp)
                    fill_analytic(r, failure_prob_sidelobe(p));
                else fill_analytic(r, failure_prob_los(p));
            });
        }
        if (wants(s, engine_kind::monte_carlo)) {
            run.add(v, scheme_label(c.scheme), "mc", [&](experiment_row& r) {
                scheme_config cc = c;
                if (s.sweep_parameter == "n_c") {
                    const int cycles = std::max(1, static_cast<int>(v)) / cc.cycle_slots(p);
                    if (cycles < 1) {
                        r.estimate = 1.0;
                        r.samples = 0;
                        return;
                    }
                    cc.n_cycles = cycles;
                }
                fill_mc(r, estimate_failure(cc, p, s.trials, r.seed, s.threads));
            });
        }
    }
}

} // namespace detail

// Execute the experiment described by spec: calibrate if requested, then run
// every (sweep value, curve, engine) task. Tasks that throw produce a row
// with the error column set; the run always completes.
inline experiment_result run_experiment(const experiment_spec& input,
                                        std::function<void(const experiment_row&)> on_row = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    experiment_result out;
    experiment_spec spec = input;

    if (spec.calibrate) {
        if (spec.calibration_anchors.size() < 2) {
            out.calibration.status = "calibration-failed";
            out.calibration.message = "calibration needs at least two anchors";
        } else {
            const calibration_result fit = calibrate_epsilon(
                spec.system, spec.calibration_anchors, spec.calibration_residual_threshold);
            out.calibration.epsilon = fit.epsilon;
            out.calibration.residual_rms = fit.residual_rms;
            out.calibration.status = fit.converged ? "ok" : "calibration-failed";
            if (!fit.converged)
                out.calibration.message = "residual above threshold; fitted value still applied";
            spec.system.epsilon = fit.epsilon;
        }
    }

    detail::row_runner run(spec, out.rows, std::move(on_row));
    if (spec.preset == "fig2") detail::run_density_sweep(run, spec);
    else if (spec.preset == "fig3") detail::run_latency_sweep(run, spec);
    else if (spec.preset == "fig4") detail::run_blockage_sweep(run, spec);
    else if (spec.preset == "fig5") detail::run_budget_sweep(run, spec);
    else if (spec.preset == "fig6") detail::run_beam_count_sweep(run, spec);
    else if (spec.preset == "fig7")
        detail::run_packet_sweep(run, spec, {1e-4, 1e-3}, {"rb", "es", "is"});
    else detail::run_custom_sweep(run, spec);

    out.spec = spec;
    out.total_wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline std::vector<std::string> csv_header(const experiment_result& res) {
    return {res.spec.sweep_parameter, "scheme", "engine", "estimate", "uncertainty",
            "samples",                "seed",   "wall_time_s", "error"};
}

inline std::vector<std::string> csv_fields(const experiment_row& r) {
    return {csv_number(r.sweep_value), r.scheme,
            r.engine,                  csv_number(r.estimate),
            csv_number(r.uncertainty), std::to_string(r.samples),
            std::to_string(r.seed),    csv_number(r.wall_time_s),
            r.error};
}

// Write the result table and its metadata sidecar. The sidecar records the
// fully resolved configuration (including any fitted sidelobe level), so a
// run can be reproduced from its outputs alone.
inline void write_results(const experiment_result& res) {
    csv_writer w(res.spec.output_path);
    w.header(csv_header(res));
    for (const experiment_row& r : res.rows) w.row(csv_fields(r));
    w.flush();

    nlohmann::json meta;
    meta["format"] = "beamscan-results-v1";
    meta["preset"] = res.spec.preset;
    meta["sweep_parameter"] = res.spec.sweep_parameter;
    meta["sweep_values"] = res.spec.sweep_values;
    {
        std::vector<std::string> engines;
        for (engine_kind k : res.spec.engines) engines.emplace_back(detail::engine_name(k));
        meta["engines"] = engines;
    }
    meta["trials"] = res.spec.trials;
    meta["seed"] = res.spec.seed;
    meta["threads"] = res.spec.threads;
    meta["rate_convention"] =
        res.spec.convention == rate_convention::mean_rate ? "mean_rate" : "mean_latency";
    meta["rows"] = res.rows.size();
    meta["total_wall_time_s"] = res.total_wall_time_s;
    meta["config"] = emit_config(res.spec);

    const system_params& p = res.spec.system;
    meta["system"] = {{"lambda_bs", p.lambda_bs},
                      {"beta", p.beta},
                      {"alpha_los", p.alpha_los},
                      {"alpha_nlos", p.alpha_nlos},
                      {"f_c_hz", p.f_c},
                      {"p_bs_control_w", p.p_bs_control},
                      {"p_bs_data_w", p.p_bs_data},
                      {"bw_control_hz", p.bw_control},
                      {"bw_data_hz", p.bw_data},
                      {"noise_figure_db", p.noise_figure_db},
                      {"sinr_threshold", p.sinr_threshold},
                      {"n_bs", p.n_bs},
                      {"n_ue", p.n_ue},
                      {"m_bs", p.m_bs},
                      {"m_ue", p.m_ue},
                      {"epsilon", p.epsilon},
                      {"n_c", p.n_c},
                      {"region_radius_m", p.region_radius}};
    meta["frame"] = {{"t_frame_ms", res.spec.frame.t_frame},
                     {"t_cs_ms", res.spec.frame.t_cs},
                     {"t_ra_ms", res.spec.frame.t_ra},
                     {"n_ss_blocks", res.spec.frame.n_ss_blocks}};
    const scheme_config& c = res.spec.search;
    meta["search"] = {{"scheme", detail::scheme_label(c.scheme)},
                      {"beam_pattern", c.model == antenna_model::sbp ? "sbp" : "ula"},
                      {"n_cycles", c.n_cycles},
                      {"stage1_beamwidth_deg", res.spec.stage1_beamwidth_deg},
                      {"stage1_model", c.stage1_dirichlet ? "dirichlet" : "sector"},
                      {"fading_redraw", c.fading_per_slot ? "slot" : "sweep"},
                      {"nlos_links", c.nlos_links}};
    nlohmann::json cal;
    cal["status"] = res.calibration.status;
    cal["epsilon"] = res.calibration.epsilon;
    cal["residual_rms"] = res.calibration.residual_rms;
    if (!res.calibration.message.empty()) cal["message"] = res.calibration.message;
    {
        nlohmann::json anchors = nlohmann::json::array();
        for (const auto& [lam, pf] : res.spec.calibration_anchors)
            anchors.push_back({{"lambda_bs", lam}, {"failure", pf}});
        cal["anchors"] = anchors;
        cal["residual_threshold"] = res.spec.calibration_residual_threshold;
    }
    meta["calibration"] = cal;

    std::ofstream side(res.spec.output_path + ".meta.json", std::ios::binary);
    if (!side) throw std::runtime_error("cannot open output file: " + res.spec.output_path +
                                        ".meta.json");
    side << meta.dump(2) << "\n";
    if (!side) throw std::runtime_error("write failed: " + res.spec.output_path + ".meta.json");
}

} // namespace beamscan
