#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace beamscan {

inline constexpr double pi = 3.14159265358979323846;

// Propagation constant used by every curve in the validation set. The
// reference data was generated with the rounded value, not 299792458.
inline constexpr double speed_of_light = 3.0e8;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w * 1000.0); }

// Thermal noise floor in watts: -174 dBm/Hz + 10 log10(bandwidth) + NF.
inline double noise_power_watts(double bandwidth_hz, double noise_figure_db) {
    if (bandwidth_hz <= 0.0) throw std::invalid_argument("noise_power_watts: bandwidth_hz must be > 0");
    return dbm_to_watt(-174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
}

struct system_params {
    double lambda_bs = 1e-4;       // BS density, per m^2
    double beta = 0.02;            // blockage rate, 1/m
    double alpha_los = 2.5;        // LOS path-loss exponent
    double alpha_nlos = 4.0;       // NLOS exponent; +infinity removes blocked links
    double f_c = 28e9;             // carrier, Hz
    double p_bs_control = 1.0;     // control-plane TX power, W
    double p_bs_data = 1.0;        // data-plane TX power, W
    double bw_control = 28e6;      // control bandwidth, Hz (reference curves use 28 MHz)
    double bw_data = 1e8;          // data bandwidth, Hz
    double noise_figure_db = 7.0;
    double sinr_threshold = 1.0;   // detection threshold T, linear
    int n_bs = 12;                 // BS beam directions per sweep
    int n_ue = 4;                  // UE beam directions
    int m_bs = 12;                 // BS array elements
    int m_ue = 4;                  // UE array elements
    double epsilon = 0.1;          // sector-pattern sidelobe gain
    int n_c = 12;                  // scan budget in mini-slots
    double region_radius = 2000.0; // simulation disc radius, m

    double theta_bs() const { return 2.0 * pi / n_bs; }
    double theta_ue() const { return 2.0 * pi / n_ue; }

    // Path-gain constants at the LOS/NLOS exponents: (c / 4 pi f_c)^alpha.
    double k_los() const { return std::pow(speed_of_light / (4.0 * pi * f_c), alpha_los); }
    double k_nlos() const { return std::pow(speed_of_light / (4.0 * pi * f_c), alpha_nlos); }

    double noise_control_w() const { return noise_power_watts(bw_control, noise_figure_db); }
    double noise_data_w() const { return noise_power_watts(bw_data, noise_figure_db); }

    bool operator==(const system_params&) const = default;
};

// Mainlobe gain of a sector pattern with beamwidth theta and sidelobe eps;
// conserves radiated power: gain*theta + eps*(2pi - theta) = 2pi.
inline double sector_mainlobe_gain(double beamwidth, double eps) {
    if (beamwidth <= 0.0 || beamwidth > 2.0 * pi)
        throw std::invalid_argument("sector_mainlobe_gain: beamwidth must lie in (0, 2pi]");
    return (2.0 * pi - (2.0 * pi - beamwidth) * eps) / beamwidth;
}

inline void validate(const system_params& p) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("system_params: " + what); };
    if (!(p.lambda_bs > 0.0)) fail("lambda_bs must be > 0");
    if (!(p.beta >= 0.0)) fail("beta must be >= 0");
    if (!(p.alpha_los >= 2.0)) fail("alpha_los must be >= 2");
    if (!(p.alpha_nlos >= p.alpha_los)) fail("alpha_nlos must be >= alpha_los");
    if (!(p.f_c > 0.0)) fail("f_c must be > 0");
    if (!(p.p_bs_control > 0.0)) fail("p_bs_control must be > 0");
    if (!(p.p_bs_data > 0.0)) fail("p_bs_data must be > 0");
    if (!(p.bw_control > 0.0)) fail("bw_control must be > 0");
    if (!(p.bw_data > 0.0)) fail("bw_data must be > 0");
    if (!(p.sinr_threshold > 0.0)) fail("sinr_threshold must be > 0");
    if (p.n_bs < 1) fail("n_bs must be a positive integer");
    if (p.n_ue < 1) fail("n_ue must be a positive integer");
    if (p.m_bs < 1) fail("m_bs must be a positive integer");
    if (p.m_ue < 1) fail("m_ue must be a positive integer");
    if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0)) fail("epsilon must lie in [0,1]");
    if (!(p.epsilon < sector_mainlobe_gain(p.theta_bs(), p.epsilon)))
        fail("epsilon must be strictly below the mainlobe gain");
    if (p.n_c < 1) fail("n_c must be a positive integer");
    if (!(p.region_radius > 0.0)) fail("region_radius must be > 0");
}

struct frame_timing {
    double t_frame = 20.0; // ms
    double t_cs = 1.25;    // cell-search burst, ms
    double t_ra = 1.25;    // random-access window, ms
    int n_ss_blocks = 16;

    double t_ss_block() const { return t_cs / n_ss_blocks; }

    bool operator==(const frame_timing&) const = default;
};

inline void validate(const frame_timing& f) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("frame_timing: " + what); };
    if (!(f.t_frame > 0.0)) fail("t_frame must be > 0");
    if (!(f.t_cs > 0.0)) fail("t_cs must be > 0");
    if (!(f.t_ra >= 0.0)) fail("t_ra must be >= 0");
    if (f.n_ss_blocks < 1) fail("n_ss_blocks must be a positive integer");
    if (!(f.t_cs + f.t_ra < f.t_frame)) fail("t_cs + t_ra must be < t_frame");
}

// Standard burst layouts: 16, 32, 64 synchronization blocks of 0.078125 ms.
inline frame_timing frame_for_blocks(int n_ss_blocks) {
    frame_timing f;
    f.n_ss_blocks = n_ss_blocks;
    f.t_cs = n_ss_blocks * (1.25 / 16.0);
    validate(f);
    return f;
}

} // namespace beamscan
