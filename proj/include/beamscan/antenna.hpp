#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "beamscan/params.hpp"

namespace beamscan {

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double x) {
    double w = std::remainder(x, 2.0 * pi);
    if (w <= -pi) w += 2.0 * pi;
    return w;
}

struct sector_pattern {
    double beamwidth = 2.0 * pi;
    double epsilon = 0.0;
    double mainlobe_gain = 1.0;
};

inline sector_pattern make_sector(double beamwidth, double eps) {
    if (!(eps >= 0.0)) throw std::invalid_argument("make_sector: epsilon must be >= 0");
    sector_pattern s;
    s.beamwidth = beamwidth;
    s.epsilon = eps;
    s.mainlobe_gain = sector_mainlobe_gain(beamwidth, eps);
    return s;
}

inline double sbp_gain(const sector_pattern& s, double angle_offset) {
    return std::fabs(wrap_angle(angle_offset)) <= 0.5 * s.beamwidth ? s.mainlobe_gain : s.epsilon;
}

using cplx = std::complex<double>;

// Steering vector entries (1/sqrt(k)) e^{-j m pi sin(theta)}, m = 0..k-1.
inline std::vector<cplx> ula_response(int k, double theta) {
    if (k < 1) throw std::invalid_argument("ula_response: k must be >= 1");
    std::vector<cplx> a(static_cast<std::size_t>(k));
    const double s = std::sin(theta);
    const double norm = 1.0 / std::sqrt(static_cast<double>(k));
    for (int m = 0; m < k; ++m) a[static_cast<std::size_t>(m)] = std::polar(norm, -m * pi * s);
    return a;
}

struct beam_vector {
    std::vector<cplx> coefficients; // length K, first k entries modulus 1/sqrt(k)
    int active_elements = 0;
    double boresight_sine = 0.0;
};

inline beam_vector make_beam_sine(int k, int K, double boresight_sine) {
    if (k < 1 || k > K) throw std::invalid_argument("make_beam_sine: need 0 < k <= K");
    beam_vector b;
    b.active_elements = k;
    b.boresight_sine = boresight_sine;
    b.coefficients.assign(static_cast<std::size_t>(K), cplx{0.0, 0.0});
    const double norm = 1.0 / std::sqrt(static_cast<double>(k));
    for (int m = 0; m < k; ++m)
        b.coefficients[static_cast<std::size_t>(m)] = std::polar(norm, -m * pi * boresight_sine);
    return b;
}

inline beam_vector make_beam(int k, int K, double theta) { return make_beam_sine(k, K, std::sin(theta)); }

struct codebook {
    std::vector<beam_vector> beams;
    std::vector<double> boresights; // azimuths for angle-spaced books, asin(sine) otherwise
};

// Boresights uniformly spaced in azimuth over [0, 2pi) starting at 0.
inline codebook make_codebook(int K, int n_beams, int k_active) {
    if (n_beams < 1) throw std::invalid_argument("make_codebook: n_beams must be >= 1");
    codebook c;
    for (int b = 0; b < n_beams; ++b) {
        double theta = 2.0 * pi * b / n_beams;
        c.beams.push_back(make_beam(k_active, K, theta));
        c.boresights.push_back(theta);
    }
    return c;
}

// Boresight sines uniformly spaced over [-1, 1): -1 + (2b+1)/n. Uniform
// main-beam overlap in sin-space; the scan simulator defaults to this grid.
inline std::vector<double> codebook_sines(int n_beams) {
    std::vector<double> s(static_cast<std::size_t>(n_beams));
    for (int b = 0; b < n_beams; ++b)
        s[static_cast<std::size_t>(b)] = -1.0 + (2.0 * b + 1.0) / n_beams;
    return s;
}

inline codebook make_codebook_sin(int K, int n_beams, int k_active) {
    codebook c;
    for (double s : codebook_sines(n_beams)) {
        c.beams.push_back(make_beam_sine(k_active, K, s));
        c.boresights.push_back(std::asin(s));
    }
    return c;
}

// |w^H a|^2 for explicit coefficient vectors.
inline double array_gain(const std::vector<cplx>& w, const std::vector<cplx>& a) {
    if (w.size() != a.size()) throw std::invalid_argument("array_gain: dimension mismatch");
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < w.size(); ++i) acc += std::conj(w[i]) * a[i];
    return std::norm(acc);
}

// Physical beamforming gain of a k-element beam evaluated at sin(theta):
// (sin(k d/2)/sin(d/2))^2 / k with d = pi (sin_theta - boresight_sine).
// Peaks at k; equals K * |a(K,theta)^H v|^2 for any K >= k.
inline double dirichlet_gain(int k, double sin_theta, double boresight_sine) {
    const double d = pi * (sin_theta - boresight_sine);
    const double den = std::sin(0.5 * d);
    // d -> 0 (peak) and d -> +-2pi (grating image) both limit to gain k
    if (std::fabs(den) < 1e-12) return static_cast<double>(k);
    const double num = std::sin(0.5 * k * d);
    return (num * num) / (den * den * k);
}

struct channel_state {
    double path_gain = 1.0; // ell(r), linear
    double fading = 1.0;    // |h|^2
    double aoa_ue = 0.0;    // arrival azimuth at the UE
    double aod_bs = 0.0;    // departure azimuth at the BS
};

// ell(r) |h|^2 |w^H a(M_UE, aoa)|^2 |a(M_BS, aod)^H v|^2, computed through
// the rank-one factorization; the channel matrix is never materialized.
inline double effective_gain(const beam_vector& w, const channel_state& ch, const beam_vector& v) {
    const double m_ue = static_cast<double>(w.coefficients.size());
    const double m_bs = static_cast<double>(v.coefficients.size());
    // |w^H a(M,theta)|^2 = dirichlet_gain(k, sin theta, s0) / M
    const double g_ue = dirichlet_gain(w.active_elements, std::sin(ch.aoa_ue), w.boresight_sine) / m_ue;
    const double g_bs = dirichlet_gain(v.active_elements, std::sin(ch.aod_bs), v.boresight_sine) / m_bs;
    return ch.path_gain * ch.fading * g_ue * g_bs;
}

} // namespace beamscan
