#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "beamscan/analytic.hpp"
#include "beamscan/antenna.hpp"
#include "beamscan/math/stats.hpp"
#include "beamscan/params.hpp"
#include "beamscan/simulate.hpp"

namespace beamscan {

struct latency_report {
    double p_f = 0.0;
    double e_ia_ms = 0.0;
    std::optional<double> e_total_ms;
    std::optional<double> rate_bps;
    frame_timing frame;
    std::optional<double> packet_bits;
};

// Expected initial-access latency: failures repeat whole frames (geometric),
// then one cell-search burst plus one random-access window succeed.
inline double expected_ia_latency(double p_f, const frame_timing& frame) {
    validate(frame);
    if (p_f < 0.0 || p_f > 1.0)
        throw std::invalid_argument("expected_ia_latency: p_f must be in [0, 1]");
    if (p_f >= 1.0) return std::numeric_limits<double>::infinity();
    return (1.0 / (1.0 - p_f) - 1.0) * frame.t_frame + frame.t_cs + frame.t_ra;
}

// Expected latency to deliver packet_bits at rate_bps: the data phase spans
// ceil(L / (R (T_f - T_cs - T_ra))) frames, each repaying its overhead.
inline double expected_total_latency(double p_f, double rate_bps, double packet_bits,
                                     const frame_timing& frame) {
    validate(frame);
    if (p_f < 0.0 || p_f > 1.0)
        throw std::invalid_argument("expected_total_latency: p_f must be in [0, 1]");
    if (!(rate_bps > 0.0))
        throw std::invalid_argument("expected_total_latency: rate must be > 0");
    if (!(packet_bits > 0.0))
        throw std::invalid_argument("expected_total_latency: packet_bits must be > 0");
    if (p_f >= 1.0) return std::numeric_limits<double>::infinity();
    const double rate_per_ms = rate_bps / 1000.0;
    const double usable = frame.t_frame - frame.t_cs - frame.t_ra;
    const double epochs = std::ceil(packet_bits / (rate_per_ms * usable));
    return (1.0 / (1.0 - p_f) - 1.0) * frame.t_frame + epochs * (frame.t_cs + frame.t_ra) +
           packet_bits / rate_per_ms;
}

// Shannon rate in bits per second; base-2 log since packets are sized in bits.
inline double achievable_rate(double sinr, double bw_data_hz) {
    if (sinr < 0.0) throw std::invalid_argument("achievable_rate: sinr must be >= 0");
    if (!(bw_data_hz > 0.0)) throw std::invalid_argument("achievable_rate: bandwidth must be > 0");
    return bw_data_hz * std::log2(1.0 + sinr);
}

struct refined_beams {
    int bs_index = -1;
    int ue_index = -1;
    double gain = 0.0;
};

// Best beam pair for a rank-one channel. The product maximization separates
// into independent scans of each codebook; exact ties keep the lowest index.
inline refined_beams refine_beams(const channel_state& ch, const codebook& bs_cb,
                                  const codebook& ue_cb) {
    if (bs_cb.beams.empty() || ue_cb.beams.empty())
        throw std::invalid_argument("refine_beams: codebooks must be nonempty");
    const double sin_ue = std::sin(ch.aoa_ue);
    const double sin_bs = std::sin(ch.aod_bs);
    refined_beams out;
    double best_ue = -1.0, best_bs = -1.0;
    for (std::size_t i = 0; i < ue_cb.beams.size(); ++i) {
        const beam_vector& w = ue_cb.beams[i];
        const double g = dirichlet_gain(w.active_elements, sin_ue, w.boresight_sine);
        if (g > best_ue) {
            best_ue = g;
            out.ue_index = static_cast<int>(i);
        }
    }
    for (std::size_t i = 0; i < bs_cb.beams.size(); ++i) {
        const beam_vector& v = bs_cb.beams[i];
        const double g = dirichlet_gain(v.active_elements, sin_bs, v.boresight_sine);
        if (g > best_bs) {
            best_bs = g;
            out.bs_index = static_cast<int>(i);
        }
    }
    out.gain = effective_gain(ue_cb.beams[static_cast<std::size_t>(out.ue_index)], ch,
                              bs_cb.beams[static_cast<std::size_t>(out.bs_index)]);
    return out;
}

// Data-plane SINR with the serving link combined through the refined pair and
// every interferer precoding toward its own user (a fixed beam choice passed
// in, so the function itself stays deterministic). Link gains use the physical
// array convention - the per-side Dirichlet factor peaking at the active
// element count, the same normalization the scan simulator applies - so an
// aligned full-array pair contributes M_UE * M_BS * path_gain * fading.
inline double data_sinr(const channel_state& serving, const refined_beams& beams,
                        const codebook& bs_cb, const codebook& ue_cb,
                        const std::vector<channel_state>& interferers,
                        const std::vector<int>& interferer_beams, const system_params& p) {
    if (interferers.size() != interferer_beams.size())
        throw std::invalid_argument("data_sinr: one precoder index per interferer");
    const beam_vector& w = ue_cb.beams[static_cast<std::size_t>(beams.ue_index)];
    const beam_vector& v = bs_cb.beams[static_cast<std::size_t>(beams.bs_index)];
    const double scale = static_cast<double>(w.coefficients.size()) *
                         static_cast<double>(v.coefficients.size());
    const double signal = scale * effective_gain(w, serving, v);
    double interference = 0.0;
    for (std::size_t j = 0; j < interferers.size(); ++j) {
        const std::size_t b = static_cast<std::size_t>(interferer_beams[j]);
        if (b >= bs_cb.beams.size())
            throw std::invalid_argument("data_sinr: precoder index out of range");
        interference += scale * effective_gain(w, interferers[j], bs_cb.beams[b]);
    }
    return signal / (interference + p.noise_data_w() / p.p_bs_data);
}

enum class rate_convention { mean_rate, mean_latency };

struct rate_estimate {
    double mean_rate_bps = 0.0;
    double mean_sinr = 0.0;
    long successes = 0;
    long trials = 0;
    double p_f = 1.0;
    std::vector<double> rate_samples_bps; // one entry per successful trial
};

// Post-IA data rate: run seeded cell-search trials, and for each success
// refine beams against the detected BS, draw fresh data-phase fading and
// interferer precoders, and record the Shannon rate.
inline rate_estimate estimate_data_rate(const system_params& p, const scheme_config& c,
                                        long n_trials, std::uint64_t base_seed) {
    if (n_trials < 1) throw std::invalid_argument("estimate_data_rate: need trials >= 1");
    detail::validate_config(p, c);
    const codebook bs_cb = make_codebook_sin(p.m_bs, p.n_bs, std::min(p.n_bs, p.m_bs));
    const codebook ue_cb = make_codebook_sin(p.m_ue, p.n_ue, std::min(p.n_ue, p.m_ue));
    rate_estimate out;
    out.trials = n_trials;
    detail::trial_workspace w;
    std::vector<channel_state> interferers;
    std::vector<int> interferer_beams;
    kahan_sum rate_sum, sinr_sum;
    for (long trial = 0; trial < n_trials; ++trial) {
        rng g(base_seed + static_cast<std::uint64_t>(trial));
        detail::trial_context t{p, c, g, w, p.noise_control_w(), 0};
        detail::sample_positions(t);
        const detection_outcome ia = detail::run_scheme(t);
        if (!ia.success) continue;
        const int s = ia.winning_bs;
        // Data-phase channels: geometry carried over from the trial, fresh
        // fading, the detected serving link still line of sight.
        channel_state serving;
        serving.path_gain = detail::los_gain(t, s);
        serving.fading = g.exponential();
        serving.aoa_ue = w.azimuth[static_cast<std::size_t>(s)];
        serving.aod_bs = w.phi_local[static_cast<std::size_t>(s)];
        const refined_beams beams = refine_beams(serving, bs_cb, ue_cb);
        interferers.clear();
        interferer_beams.clear();
        for (int i = 0; i < t.n_points; ++i) {
            if (i == s) continue;
            // Fresh blockage per interferer; blocked links follow the same
            // convention as the scan phase (dropped unless nlos_links).
            const bool los = g.uniform01() < detail::p_los_of(t, static_cast<std::size_t>(i));
            double ell = 0.0;
            if (los) ell = detail::los_gain(t, i);
            else if (c.nlos_links) ell = detail::nlos_gain(t, i);
            const double fade = g.exponential();
            const std::size_t b =
                g.uniform_int(static_cast<std::uint64_t>(bs_cb.beams.size()));
            if (ell == 0.0) continue;
            channel_state ch;
            ch.path_gain = ell;
            ch.fading = fade;
            ch.aoa_ue = w.azimuth[static_cast<std::size_t>(i)];
            ch.aod_bs = w.phi_local[static_cast<std::size_t>(i)];
            interferers.push_back(ch);
            interferer_beams.push_back(static_cast<int>(b));
        }
        const double sinr = data_sinr(serving, beams, bs_cb, ue_cb, interferers,
                                      interferer_beams, p);
        const double rate = achievable_rate(sinr, p.bw_data);
        ++out.successes;
        sinr_sum.add(sinr);
        rate_sum.add(rate);
        out.rate_samples_bps.push_back(rate);
    }
    out.p_f = 1.0 - static_cast<double>(out.successes) / static_cast<double>(n_trials);
    if (out.successes > 0) {
        out.mean_rate_bps = rate_sum.value() / static_cast<double>(out.successes);
        out.mean_sinr = sinr_sum.value() / static_cast<double>(out.successes);
    }
    return out;
}

// Total latency under either convention: plug the mean rate into the formula,
// or average the formula over the per-trial rate realizations.
inline double total_latency_from_samples(double p_f, const std::vector<double>& rates_bps,
                                         double packet_bits, const frame_timing& frame,
                                         rate_convention convention) {
    if (rates_bps.empty())
        throw std::invalid_argument("total_latency_from_samples: no rate samples");
    if (convention == rate_convention::mean_rate) {
        kahan_sum s;
        for (double r : rates_bps) s.add(r);
        return expected_total_latency(p_f, s.value() / static_cast<double>(rates_bps.size()),
                                      packet_bits, frame);
    }
    kahan_sum s;
    for (double r : rates_bps) s.add(expected_total_latency(p_f, r, packet_bits, frame));
    return s.value() / static_cast<double>(rates_bps.size());
}

// Frame whose cell-search burst and random-access window both span exactly
// one synchronization block per configured beam.
inline frame_timing adapted_frame_for_beams(int n_bs) {
    frame_timing f;
    f.n_ss_blocks = n_bs;
    f.t_cs = n_bs * (1.25 / 16.0);
    f.t_ra = f.t_cs;
    validate(f);
    return f;
}

struct beam_count_point {
    int n_bs = 0;
    double p_f = 1.0;
    double e_ia_ms = std::numeric_limits<double>::infinity();
    bool feasible = false;
};

struct beam_count_report {
    bool feasible = false;
    int best_n_bs = -1;
    double best_e_ia_ms = std::numeric_limits<double>::infinity();
    double min_p_f = 1.0;    // smallest failure probability achieved on the grid
    int min_p_f_n_bs = -1;   // ... and where
    std::vector<beam_count_point> grid;
};

// Scan beam counts, evaluating detection failure over k scan cycles with the
// frame stretched to the burst length, and pick the feasible minimizer of the
// expected initial-access latency. Never throws on an empty feasible set; the
// report carries the infeasibility diagnostics instead.
template <typename FailureProb>
beam_count_report optimize_beamwidth(system_params p, int k_cycles, double p_f_max,
                                     std::pair<int, int> n_bs_range, FailureProb&& failure_prob) {
    if (k_cycles < 1) throw std::invalid_argument("optimize_beamwidth: k_cycles must be >= 1");
    if (n_bs_range.first < 1 || n_bs_range.second < n_bs_range.first)
        throw std::invalid_argument("optimize_beamwidth: bad n_bs range");
    beam_count_report report;
    for (int n = n_bs_range.first; n <= n_bs_range.second; ++n) {
        p.n_bs = n;
        p.n_c = k_cycles * n;
        beam_count_point pt;
        pt.n_bs = n;
        pt.p_f = failure_prob(p);
        pt.e_ia_ms = pt.p_f >= 1.0 ? std::numeric_limits<double>::infinity()
                                   : expected_ia_latency(pt.p_f, adapted_frame_for_beams(n));
        pt.feasible = pt.p_f <= p_f_max;
        if (pt.p_f < report.min_p_f) {
            report.min_p_f = pt.p_f;
            report.min_p_f_n_bs = n;
        }
        if (pt.feasible && pt.e_ia_ms < report.best_e_ia_ms) {
            report.feasible = true;
            report.best_e_ia_ms = pt.e_ia_ms;
            report.best_n_bs = n;
        }
        report.grid.push_back(pt);
    }
    return report;
}

// Detection-failure evaluators for the optimizer.
inline auto analytic_failure_evaluator(const quadrature_spec& spec = {}) {
    return [spec](const system_params& p) { return failure_prob_los(p, spec).value; };
}

inline auto mc_failure_evaluator(const scheme_config& c, long n_trials, std::uint64_t seed,
                                 int n_threads = 1) {
    return [c, n_trials, seed, n_threads](const system_params& p) {
        scheme_config cc = c;
        cc.n_cycles = std::max(1, p.n_c / std::max(1, p.n_bs));
        return estimate_failure(cc, p, n_trials, seed, n_threads).value;
    };
}

} // namespace beamscan
