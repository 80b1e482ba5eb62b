#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "beamscan/antenna.hpp"
#include "beamscan/math/rng.hpp"
#include "beamscan/params.hpp"

namespace beamscan {

// ell(r) = (c / (4 pi r f_c))^alpha; blocked links vanish when alpha = inf.
inline double path_loss(double r, bool is_los, const system_params& p) {
    if (!(r > 0.0)) throw std::invalid_argument("path_loss: r must be > 0");
    const double alpha = is_los ? p.alpha_los : p.alpha_nlos;
    if (std::isinf(alpha)) return 0.0;
    return std::pow(speed_of_light / (4.0 * pi * r * p.f_c), alpha);
}

inline double los_probability(double r, double beta) { return std::exp(-beta * r); }

// Noise normalized the way the closed-form engines consume it:
// W / (p_BS * G_UE * k_los), optionally also / G_BS. The BS-gain switch
// exists because the serving gain can be kept explicit per slot instead.
inline double noise_power_normalized(const system_params& p, bool data_plane = false,
                                     bool include_bs_gain = true) {
    const double w = data_plane ? p.noise_data_w() : p.noise_control_w();
    const double power = data_plane ? p.p_bs_data : p.p_bs_control;
    double denom = power * p.n_ue * p.k_los();
    if (include_bs_gain) denom *= p.n_bs;
    return w / denom;
}

struct network_realization {
    std::uint64_t seed = 0;
    int n_slots = 0;
    int n_cycles = 0;
    std::vector<double> radius;         // per BS, m
    std::vector<double> azimuth;        // per BS, UE-frame angle in [0, 2pi)
    std::vector<double> orientation;    // per BS, UE azimuth in the BS local frame
    std::vector<std::uint8_t> los;      // per BS x slot
    std::vector<double> fading;         // per BS x slot, unit-mean exponential
    std::vector<int> bs_beam;           // per BS x slot, local beam index in [0, n_bs)
    std::vector<int> ue_beam;           // per cycle, UE sector index in [0, n_ue)

    int n_bs_points() const { return static_cast<int>(radius.size()); }
    bool los_at(int bs, int slot) const { return los[static_cast<std::size_t>(bs) * n_slots + slot] != 0; }
    double fading_at(int bs, int slot) const { return fading[static_cast<std::size_t>(bs) * n_slots + slot]; }
    int beam_at(int bs, int slot) const { return bs_beam[static_cast<std::size_t>(bs) * n_slots + slot]; }
};

// PPP disc topology with per-slot blockage and fading marks; BS beam indices
// form a fresh random permutation of the n_bs directions each scan cycle and
// the UE sector is redrawn uniformly each cycle. Deterministic given seed.
inline network_realization sample_network(const system_params& p, int n_slots, std::uint64_t seed,
                                          std::size_t memory_cap_entries = 100'000'000) {
    validate(p);
    if (n_slots < 1) throw std::invalid_argument("sample_network: n_slots must be >= 1");
    rng g(seed);
    network_realization net;
    net.seed = seed;
    net.n_slots = n_slots;
    net.n_cycles = (n_slots + p.n_bs - 1) / p.n_bs;
    const double mean_count = p.lambda_bs * pi * p.region_radius * p.region_radius;
    if (mean_count * n_slots > static_cast<double>(memory_cap_entries))
        throw std::length_error("sample_network: expected realization exceeds the memory cap");
    const long n = g.poisson(mean_count);
    if (static_cast<double>(n) * n_slots > static_cast<double>(memory_cap_entries))
        throw std::length_error("sample_network: sampled realization exceeds the memory cap");
    net.radius.resize(n);
    net.azimuth.resize(n);
    net.orientation.resize(n);
    net.los.resize(static_cast<std::size_t>(n) * n_slots);
    net.fading.resize(static_cast<std::size_t>(n) * n_slots);
    net.bs_beam.resize(static_cast<std::size_t>(n) * n_slots);
    net.ue_beam.resize(net.n_cycles);
    for (long i = 0; i < n; ++i) {
        net.radius[i] = p.region_radius * std::sqrt(g.uniform01());
        net.azimuth[i] = 2.0 * pi * g.uniform01();
        net.orientation[i] = 2.0 * pi * g.uniform01();
    }
    for (int c = 0; c < net.n_cycles; ++c)
        net.ue_beam[c] = static_cast<int>(g.uniform_int(static_cast<std::uint64_t>(p.n_ue)));
    std::vector<int> perm(static_cast<std::size_t>(p.n_bs));
    for (long i = 0; i < n; ++i) {
        const double p_los = los_probability(net.radius[i], p.beta);
        for (int s = 0; s < n_slots; ++s) {
            const std::size_t idx = static_cast<std::size_t>(i) * n_slots + s;
            net.los[idx] = g.uniform01() < p_los ? 1 : 0;
            net.fading[idx] = g.exponential();
        }
        for (int c = 0; c < net.n_cycles; ++c) {
            for (int b = 0; b < p.n_bs; ++b) perm[static_cast<std::size_t>(b)] = b;
            g.shuffle(perm);
            for (int s = c * p.n_bs; s < std::min((c + 1) * p.n_bs, n_slots); ++s) {
                net.bs_beam[static_cast<std::size_t>(i) * n_slots + s] =
                    perm[static_cast<std::size_t>(s - c * p.n_bs)];
            }
        }
    }
    return net;
}

// Sector-pattern SINR of every BS in one mini-slot. UE sidelobes are zero,
// so BSs outside the UE sector receive nothing and inject nothing: they
// drop out of both the signal and the interference sums.
inline std::vector<double> slot_sinr_sbp(const network_realization& net, int slot,
                                         const system_params& p) {
    const int n = net.n_bs_points();
    std::vector<double> sinr(static_cast<std::size_t>(n), 0.0);
    if (n == 0) return sinr;
    if (slot < 0 || slot >= net.n_slots)
        throw std::out_of_range("slot_sinr_sbp: slot outside the realization");
    const sector_pattern bs_pat = make_sector(p.theta_bs(), p.epsilon);
    const double w_noise = p.noise_control_w();
    const int cycle = slot / p.n_bs;
    const int ue_sector = net.ue_beam[std::min(cycle, net.n_cycles - 1)];
    std::vector<double> rx(static_cast<std::size_t>(n), 0.0);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        // UE sector u covers azimuths [u, u+1) * theta_ue
        const double ue_off = wrap_angle(net.azimuth[i] - (ue_sector + 0.5) * p.theta_ue());
        if (std::fabs(ue_off) > 0.5 * p.theta_ue()) continue;
        const int beam = net.beam_at(i, slot);
        const double bs_off = wrap_angle(net.orientation[i] - (beam + 0.5) * p.theta_bs());
        const double g_bs = sbp_gain(bs_pat, bs_off);
        // blockage selects the exponent; alpha_nlos = inf removes the link
        const double ell = path_loss(net.radius[i], net.los_at(i, slot), p);
        rx[i] = p.p_bs_control * g_bs * p.n_ue * net.fading_at(i, slot) * ell;
        total += rx[i];
    }
    for (int i = 0; i < n; ++i) {
        if (rx[i] <= 0.0) continue;
        sinr[i] = rx[i] / (total - rx[i] + w_noise);
    }
    return sinr;
}

} // namespace beamscan
