#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "beamscan/antenna.hpp"
#include "beamscan/math/rng.hpp"
#include "beamscan/math/stats.hpp"
#include "beamscan/network.hpp"
#include "beamscan/params.hpp"

namespace beamscan {

enum class search_scheme { random_beamforming, exhaustive, iterative };
enum class antenna_model { sbp, ula };

struct scheme_config {
    search_scheme scheme = search_scheme::random_beamforming;
    antenna_model model = antenna_model::ula;
    int n_cycles = 1;                   // scan cycles in the search budget
    double stage1_beamwidth = pi / 2.0; // iterative search stage-1 beamwidth
    bool stage1_dirichlet = false;      // realize stage-1 beams with a thinned array instead of sectors
    bool fading_per_slot = false;       // redraw fading each mini-slot instead of each cycle/sweep
    bool nlos_links = false;            // blocked links propagate with the NLOS exponent instead of vanishing

    int stage1_beams() const {
        return static_cast<int>(std::lround(2.0 * pi / stage1_beamwidth));
    }
    // Mini-slots in one scan cycle of the configured scheme.
    int cycle_slots(const system_params& p) const {
        switch (scheme) {
            case search_scheme::random_beamforming: return p.n_bs;
            case search_scheme::exhaustive: return p.n_bs * p.n_ue;
            case search_scheme::iterative: return stage1_beams() * p.n_ue + p.n_bs;
        }
        return 0;
    }
    int budget_slots(const system_params& p) const { return n_cycles * cycle_slots(p); }
    int default_ss_blocks() const {
        switch (scheme) {
            case search_scheme::random_beamforming: return 16;
            case search_scheme::exhaustive: return 64;
            case search_scheme::iterative: return 32;
        }
        return 16;
    }

    bool operator==(const scheme_config&) const = default;
};

struct detection_outcome {
    bool success = false;
    double best_sinr = 0.0;
    int winning_slot = -1; // -1 when no slot met the threshold
    int winning_bs = -1;
};

namespace detail {

// Scratch buffers reused across trials within one worker thread.
struct trial_workspace {
    std::vector<double> radius, azimuth, sin_local, phi_local, fading;
    std::vector<int> sector_of;
    std::vector<double> slot_total, slot_best;
    std::vector<int> slot_best_bs;
    std::vector<int> hit_slots, perm, scratch;
    std::vector<double> beam_sines, wide_sines;
};

struct trial_context {
    const system_params& p;
    const scheme_config& c;
    rng& g;
    trial_workspace& w;
    double noise; // thermal noise for the control plane, watts
    int n_points = 0;
};

inline void sample_positions(trial_context& t) {
    const system_params& p = t.p;
    trial_workspace& w = t.w;
    const double mean = p.lambda_bs * pi * p.region_radius * p.region_radius;
    const int n = static_cast<int>(t.g.poisson(mean));
    t.n_points = n;
    const std::size_t un = static_cast<std::size_t>(n);
    w.radius.resize(un);
    w.azimuth.resize(un);
    w.phi_local.resize(un);
    const bool ula = t.c.model == antenna_model::ula;
    if (ula) w.sin_local.resize(un);
    if (ula) w.sin_local.assign(un, -2.0);
    for (std::size_t i = 0; i < un; ++i) {
        w.radius[i] = p.region_radius * std::sqrt(t.g.uniform01());
        w.azimuth[i] = t.g.uniform(0.0, 2.0 * pi);
        // Per-BS array/sector orientation: the UE azimuth in the BS local frame.
        w.phi_local[i] = t.g.uniform(0.0, 2.0 * pi);
    }
}

// LOS probability is a pure function of the radius; computed at use sites so
// out-of-sector BSs never pay for it.
inline double p_los_of(const trial_context& t, std::size_t i) {
    return std::exp(-t.p.beta * t.w.radius[i]);
}

// sin of the local angle, cached on first use (-2 marks "not yet computed").
inline double sin_local_of(const trial_context& t, int i) {
    double& s = t.w.sin_local[static_cast<std::size_t>(i)];
    if (s < -1.5) s = std::sin(t.w.phi_local[static_cast<std::size_t>(i)]);
    return s;
}

inline double los_gain(const trial_context& t, int i) {
    return path_loss(t.w.radius[static_cast<std::size_t>(i)], true, t.p);
}

inline double nlos_gain(const trial_context& t, int i) {
    return path_loss(t.w.radius[static_cast<std::size_t>(i)], false, t.p);
}

inline void reset_slots(trial_workspace& w, int n_slots) {
    w.slot_total.assign(static_cast<std::size_t>(n_slots), 0.0);
    w.slot_best.assign(static_cast<std::size_t>(n_slots), 0.0);
    w.slot_best_bs.assign(static_cast<std::size_t>(n_slots), -1);
}

inline void deposit(trial_workspace& w, int slot, double c, int bs) {
    const std::size_t s = static_cast<std::size_t>(slot);
    w.slot_total[s] += c;
    if (c > w.slot_best[s]) {
        w.slot_best[s] = c;
        w.slot_best_bs[s] = bs;
    }
}

// The max contributor has the max SINR in its slot, so one candidate per slot
// decides detection. Scans slots in time order; the first crossing wins.
// Returns the running best SINR across scanned slots.
inline double scan_slots(const trial_context& t, int n_slots, int slot_offset,
                         detection_outcome& out, double best_so_far) {
    for (int s = 0; s < n_slots; ++s) {
        const std::size_t i = static_cast<std::size_t>(s);
        if (t.w.slot_best_bs[i] < 0) continue;
        const double c = t.w.slot_best[i];
        const double sinr = c / (t.w.slot_total[i] - c + t.noise);
        if (sinr > best_so_far) best_so_far = sinr;
        if (sinr >= t.p.sinr_threshold) {
            out.success = true;
            out.best_sinr = sinr;
            out.winning_slot = slot_offset + s;
            out.winning_bs = t.w.slot_best_bs[i];
            return best_so_far;
        }
    }
    return best_so_far;
}

// Mini-slot gain of the scheduled BS beam toward the UE.
inline double bs_slot_gain(const trial_context& t, int i, int beam, int covered_beam,
                           double g_main) {
    if (t.c.model == antenna_model::sbp)
        return beam == covered_beam ? g_main : t.p.epsilon;
    return dirichlet_gain(std::min(t.p.n_bs, t.p.m_bs),
                          sin_local_of(t, i),
                          t.w.beam_sines[static_cast<std::size_t>(beam)]);
}

inline detection_outcome run_rb(trial_context& t) {
    const system_params& p = t.p;
    trial_workspace& w = t.w;
    const int ns = p.n_bs;
    const std::size_t uns = static_cast<std::size_t>(ns);
    const double th_ue = p.theta_ue();
    const bool sbp = t.c.model == antenna_model::sbp;
    const double g_main = sbp ? sector_mainlobe_gain(p.theta_bs(), p.epsilon) : 0.0;
    if (!sbp) w.beam_sines = codebook_sines(ns);
    w.hit_slots.resize(uns);
    w.perm.resize(uns);
    w.scratch.resize(uns);
    detection_outcome out;
    double best = 0.0;
    for (int cycle = 0; cycle < t.c.n_cycles && !out.success; ++cycle) {
        const double ue_bore =
            2.0 * pi *
            static_cast<double>(t.g.uniform_int(static_cast<std::uint64_t>(p.n_ue))) / p.n_ue;
        reset_slots(w, ns);
        for (int i = 0; i < t.n_points; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            const double d = wrap_angle(w.azimuth[ui] - ue_bore);
            if (d < -0.5 * th_ue || d >= 0.5 * th_ue) continue;
            const double pl = p_los_of(t, ui);
            if (t.c.nlos_links) {
                // Dense path: every slot carries power, with the exponent picked
                // by the per-slot blockage state.
                const int covered =
                    sbp ? static_cast<int>(t.g.uniform_int(static_cast<std::uint64_t>(ns))) : -1;
                if (!sbp) {
                    std::iota(w.perm.begin(), w.perm.end(), 0);
                    t.g.shuffle(w.perm);
                }
                const double h_cycle = t.c.fading_per_slot ? 0.0 : t.g.exponential();
                const double ell_l = los_gain(t, i), ell_n = nlos_gain(t, i);
                for (int s = 0; s < ns; ++s) {
                    const double g_bs =
                        bs_slot_gain(t, i, sbp ? s : w.perm[static_cast<std::size_t>(s)],
                                     covered, g_main);
                    const double ell = t.g.uniform01() < pl ? ell_l : ell_n;
                    if (g_bs == 0.0 || ell == 0.0) continue;
                    const double h = t.c.fading_per_slot ? t.g.exponential() : h_cycle;
                    deposit(w, s, p.p_bs_control * g_bs * p.n_ue * h * ell, i);
                }
                continue;
            }
            if (sbp && p.epsilon == 0.0) {
                // Only the covering beam's slot can carry power: one draw for its
                // position in the cycle, one for its blockage state.
                const int covered =
                    static_cast<int>(t.g.uniform_int(static_cast<std::uint64_t>(ns)));
                if (t.g.uniform01() >= pl) continue;
                deposit(w, covered,
                        p.p_bs_control * g_main * p.n_ue * t.g.exponential() * los_gain(t, i), i);
                continue;
            }
            const int k = static_cast<int>(t.g.binomial(ns, pl));
            if (k == 0) continue;
            const double h_cycle = t.c.fading_per_slot ? 0.0 : t.g.exponential();
            t.g.sample_distinct(ns, k, w.hit_slots.data(), w.scratch.data());
            int covered = -1;
            if (sbp) {
                covered = static_cast<int>(t.g.uniform_int(static_cast<std::uint64_t>(ns)));
            } else {
                // Under a per-cycle beam permutation, the beams landing on any k
                // distinct slots are a uniform ordered k-subset of the codebook.
                t.g.sample_distinct(ns, k, w.perm.data(), w.scratch.data());
            }
            const double ell = los_gain(t, i);
            for (int j = 0; j < k; ++j) {
                const int slot = w.hit_slots[static_cast<std::size_t>(j)];
                const double g_bs =
                    bs_slot_gain(t, i, sbp ? slot : w.perm[static_cast<std::size_t>(j)],
                                 covered, g_main);
                if (g_bs == 0.0) continue;
                const double h = t.c.fading_per_slot ? t.g.exponential() : h_cycle;
                deposit(w, slot, p.p_bs_control * g_bs * p.n_ue * h * ell, i);
            }
        }
        best = scan_slots(t, ns, cycle * ns, out, best);
    }
    if (!out.success) out.best_sinr = best;
    return out;
}

inline detection_outcome run_es(trial_context& t) {
    const system_params& p = t.p;
    trial_workspace& w = t.w;
    const int nb = p.n_bs;
    const int ns = nb * p.n_ue;
    const bool sbp = t.c.model == antenna_model::sbp;
    const double g_main = sbp ? sector_mainlobe_gain(p.theta_bs(), p.epsilon) : 0.0;
    if (!sbp) w.beam_sines = codebook_sines(nb);
    w.hit_slots.resize(static_cast<std::size_t>(nb));
    w.scratch.resize(static_cast<std::size_t>(nb));
    const double sector = 2.0 * pi / p.n_ue;
    detection_outcome out;
    double best = 0.0;
    for (int cycle = 0; cycle < t.c.n_cycles && !out.success; ++cycle) {
        reset_slots(w, ns);
        for (int i = 0; i < t.n_points; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            // Lockstep sweep: UE sector u owns slots [u nb, (u+1) nb) and every
            // BS transmits beam b in slot u nb + b.
            const int u = static_cast<int>(std::floor(w.azimuth[ui] / sector + 0.5)) % p.n_ue;
            const double pl = p_los_of(t, ui);
            const int covered =
                sbp ? static_cast<int>(std::floor(w.phi_local[ui] / p.theta_bs())) % nb : -1;
            if (t.c.nlos_links) {
                const double h_sweep = t.c.fading_per_slot ? 0.0 : t.g.exponential();
                const double ell_l = los_gain(t, i), ell_n = nlos_gain(t, i);
                for (int b = 0; b < nb; ++b) {
                    const double g_bs = bs_slot_gain(t, i, b, covered, g_main);
                    const double ell = t.g.uniform01() < pl ? ell_l : ell_n;
                    if (g_bs == 0.0 || ell == 0.0) continue;
                    const double h = t.c.fading_per_slot ? t.g.exponential() : h_sweep;
                    deposit(w, u * nb + b, p.p_bs_control * g_bs * p.n_ue * h * ell, i);
                }
                continue;
            }
            const int k = static_cast<int>(t.g.binomial(nb, pl));
            if (k == 0) continue;
            const double h_sweep = t.c.fading_per_slot ? 0.0 : t.g.exponential();
            t.g.sample_distinct(nb, k, w.hit_slots.data(), w.scratch.data());
            const double ell = los_gain(t, i);
            for (int j = 0; j < k; ++j) {
                const int b = w.hit_slots[static_cast<std::size_t>(j)];
                const double g_bs = bs_slot_gain(t, i, b, covered, g_main);
                if (g_bs == 0.0) continue;
                const double h = t.c.fading_per_slot ? t.g.exponential() : h_sweep;
                deposit(w, u * nb + b, p.p_bs_control * g_bs * p.n_ue * h * ell, i);
            }
        }
        best = scan_slots(t, ns, cycle * ns, out, best);
    }
    if (!out.success) out.best_sinr = best;
    return out;
}

inline detection_outcome run_is(trial_context& t) {
    const system_params& p = t.p;
    trial_workspace& w = t.w;
    const int n1_beams = t.c.stage1_beams();
    const int n1 = n1_beams * p.n_ue;
    const bool sbp = t.c.model == antenna_model::sbp;
    const double g_main = sbp ? sector_mainlobe_gain(p.theta_bs(), p.epsilon) : 0.0;
    const double g_wide = sector_mainlobe_gain(t.c.stage1_beamwidth, 0.0);
    if (!sbp) w.beam_sines = codebook_sines(p.n_bs);
    if (t.c.stage1_dirichlet) w.wide_sines = codebook_sines(n1_beams);
    const int k1_act = std::min(2, p.m_bs); // thinned array approximates a ~90 degree beam
    const double sector = 2.0 * pi / p.n_ue;
    const std::size_t un = static_cast<std::size_t>(t.n_points);
    w.hit_slots.resize(static_cast<std::size_t>(std::max(p.n_bs, n1_beams)));
    w.scratch.resize(static_cast<std::size_t>(std::max(p.n_bs, n1_beams)));
    w.sector_of.resize(un);
    for (std::size_t i = 0; i < un; ++i)
        w.sector_of[i] = static_cast<int>(std::floor(w.azimuth[i] / sector + 0.5)) % p.n_ue;
    // Frozen fading is drawn on first use and cached so both stages see the
    // same coefficient without paying for BSs that never transmit power.
    auto fade = [&](int i) {
        if (t.c.fading_per_slot) return t.g.exponential();
        double& h = w.fading[static_cast<std::size_t>(i)];
        if (h < 0.0) h = t.g.exponential();
        return h;
    };

    detection_outcome out;
    double report = 0.0;
    for (int cycle = 0; cycle < t.c.n_cycles && !out.success; ++cycle) {
        w.fading.assign(un, -1.0);
        const int slot0 = cycle * (n1 + p.n_bs);

        // Stage 1: UE sector u with wide BS beam b occupies slot u n1_beams + b.
        reset_slots(w, n1);
        for (int i = 0; i < t.n_points; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            const int u = w.sector_of[ui];
            const double pl = p_los_of(t, ui);
            if (!t.c.stage1_dirichlet) {
                // Sector stage-1: exactly one wide beam covers the UE, derived from
                // the BS orientation so stage-2 sees a consistent frame.
                const int bstar =
                    static_cast<int>(std::floor(w.phi_local[ui] / t.c.stage1_beamwidth)) % n1_beams;
                const bool los = t.g.uniform01() < pl;
                if (!los && !t.c.nlos_links) continue;
                const double ell = los ? los_gain(t, i) : nlos_gain(t, i);
                if (ell == 0.0) continue;
                deposit(w, u * n1_beams + bstar, p.p_bs_control * g_wide * p.n_ue * fade(i) * ell,
                        i);
            } else {
                const int k = static_cast<int>(t.g.binomial(n1_beams, pl));
                if (k == 0) continue;
                t.g.sample_distinct(n1_beams, k, w.hit_slots.data(), w.scratch.data());
                const double ell = los_gain(t, i);
                for (int j = 0; j < k; ++j) {
                    const int b = w.hit_slots[static_cast<std::size_t>(j)];
                    const double g_bs = dirichlet_gain(k1_act, sin_local_of(t, i),
                                                       w.wide_sines[static_cast<std::size_t>(b)]);
                    if (g_bs == 0.0) continue;
                    deposit(w, u * n1_beams + b, p.p_bs_control * g_bs * p.n_ue * fade(i) * ell, i);
                }
            }
        }
        double best = 0.0;
        double best1 = -1.0;
        int ustar = 0;
        for (int s = 0; s < n1; ++s) {
            const std::size_t si = static_cast<std::size_t>(s);
            if (w.slot_best_bs[si] < 0) continue;
            const double c = w.slot_best[si];
            const double sinr = c / (w.slot_total[si] - c + t.noise);
            best = std::max(best, sinr);
            if (sinr > best1) { // strict: the earliest slot wins ties
                best1 = sinr;
                ustar = s / n1_beams;
            }
        }
        if (best1 < p.sinr_threshold) {
            // The UE cannot pick a sector from stage 1, so stage 2 never runs.
            report = std::max(report, std::max(best, 0.0));
            continue;
        }

        // Stage 2: narrow lockstep sweep with the UE fixed on its stage-1 sector.
        reset_slots(w, p.n_bs);
        for (int i = 0; i < t.n_points; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            if (w.sector_of[ui] != ustar) continue;
            const double pl = p_los_of(t, ui);
            const int covered =
                sbp ? static_cast<int>(std::floor(w.phi_local[ui] / p.theta_bs())) % p.n_bs : -1;
            if (t.c.nlos_links) {
                const double ell_l = los_gain(t, i), ell_n = nlos_gain(t, i);
                for (int b = 0; b < p.n_bs; ++b) {
                    const double g_bs = bs_slot_gain(t, i, b, covered, g_main);
                    const double ell = t.g.uniform01() < pl ? ell_l : ell_n;
                    if (g_bs == 0.0 || ell == 0.0) continue;
                    deposit(w, b, p.p_bs_control * g_bs * p.n_ue * fade(i) * ell, i);
                }
                continue;
            }
            const int k = static_cast<int>(t.g.binomial(p.n_bs, pl));
            if (k == 0) continue;
            t.g.sample_distinct(p.n_bs, k, w.hit_slots.data(), w.scratch.data());
            const double ell = los_gain(t, i);
            for (int j = 0; j < k; ++j) {
                const int b = w.hit_slots[static_cast<std::size_t>(j)];
                const double g_bs = bs_slot_gain(t, i, b, covered, g_main);
                if (g_bs == 0.0) continue;
                deposit(w, b, p.p_bs_control * g_bs * p.n_ue * fade(i) * ell, i);
            }
        }
        scan_slots(t, p.n_bs, slot0 + n1, out, best);
        if (!out.success) {
            // Stage-1 alignment alone is not detection: report the stage-2 ceiling.
            double best2 = 0.0;
            for (int s = 0; s < p.n_bs; ++s) {
                const std::size_t si = static_cast<std::size_t>(s);
                if (w.slot_best_bs[si] < 0) continue;
                const double c = w.slot_best[si];
                best2 = std::max(best2, c / (w.slot_total[si] - c + t.noise));
            }
            report = std::max(report, best2);
        }
    }
    if (!out.success) out.best_sinr = report;
    return out;
}

inline detection_outcome run_scheme(trial_context& t) {
    switch (t.c.scheme) {
        case search_scheme::random_beamforming: return run_rb(t);
        case search_scheme::exhaustive: return run_es(t);
        case search_scheme::iterative: return run_is(t);
    }
    return {};
}

inline void validate_config(const system_params& p, const scheme_config& c) {
    validate(p);
    if (c.n_cycles < 1) throw std::invalid_argument("scheme_config: n_cycles must be >= 1");
    if (!(c.stage1_beamwidth > 0.0) || c.stage1_beamwidth > 2.0 * pi)
        throw std::invalid_argument("scheme_config: stage1_beamwidth must be in (0, 2*pi]");
}

} // namespace detail

// One seeded cell-search trial on a fresh network realization.
inline detection_outcome run_trial(const system_params& p, const scheme_config& c,
                                   std::uint64_t seed) {
    detail::validate_config(p, c);
    detail::trial_workspace w;
    rng g(seed);
    detail::trial_context t{p, c, g, w, p.noise_control_w(), 0};
    detail::sample_positions(t);
    return detail::run_scheme(t);
}

inline detection_outcome run_trial_rb(const system_params& p, antenna_model model,
                                      std::uint64_t seed, int n_cycles = 1) {
    scheme_config c;
    c.scheme = search_scheme::random_beamforming;
    c.model = model;
    c.n_cycles = n_cycles;
    return run_trial(p, c, seed);
}

inline detection_outcome run_trial_es(const system_params& p, antenna_model model,
                                      std::uint64_t seed) {
    scheme_config c;
    c.scheme = search_scheme::exhaustive;
    c.model = model;
    return run_trial(p, c, seed);
}

inline detection_outcome run_trial_is(const system_params& p, antenna_model model,
                                      std::uint64_t seed) {
    scheme_config c;
    c.scheme = search_scheme::iterative;
    c.model = model;
    return run_trial(p, c, seed);
}

struct failure_estimate {
    double value = 0.0;        // detection-failure fraction
    double ci_halfwidth = 0.0; // Wilson 95%
    long failures = 0;
    long trials = 0;
    double seconds = 0.0;
};

// Failure probability over i.i.d. seeded trials. Trial i always uses seed
// base_seed + i and failures reduce as exact integer counts, so the estimate
// is identical for every thread count.
inline failure_estimate estimate_failure(const scheme_config& c, const system_params& p,
                                         long n_trials, std::uint64_t base_seed,
                                         int n_threads = 1) {
    if (n_trials < 100)
        throw std::invalid_argument("estimate_failure: need at least 100 trials");
    detail::validate_config(p, c);
    const auto t0 = std::chrono::steady_clock::now();
    if (n_threads <= 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        n_threads = hc == 0 ? 1 : static_cast<int>(hc);
    }
    n_threads = static_cast<int>(std::min<long>(n_threads, n_trials));
    std::vector<long> fail_counts(static_cast<std::size_t>(n_threads), 0);
    auto worker = [&](int tid) {
        detail::trial_workspace w;
        long local = 0;
        for (long i = tid; i < n_trials; i += n_threads) {
            rng g(base_seed + static_cast<std::uint64_t>(i));
            detail::trial_context t{p, c, g, w, p.noise_control_w(), 0};
            detail::sample_positions(t);
            if (!detail::run_scheme(t).success) ++local;
        }
        fail_counts[static_cast<std::size_t>(tid)] = local;
    };
    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int tid = 0; tid < n_threads; ++tid) pool.emplace_back(worker, tid);
        for (auto& th : pool) th.join();
    }
    long failures = 0;
    for (long f : fail_counts) failures += f;
    proportion_estimate wilson = wilson_estimate(failures, n_trials);
    failure_estimate out;
    out.value = wilson.value;
    out.ci_halfwidth = wilson.ci_halfwidth;
    out.failures = failures;
    out.trials = n_trials;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace beamscan
