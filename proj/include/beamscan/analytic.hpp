#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "beamscan/math/quadrature.hpp"
#include "beamscan/math/stats.hpp"
#include "beamscan/network.hpp"
#include "beamscan/params.hpp"

namespace beamscan {

using analytic_result = integral_result;

// J(alpha, b) = int_0^inf e^{-b u} u / (u^alpha + 1) du, alpha > 2.
// Every interference Laplace exponent below reduces to this kernel.
inline analytic_result j_integral(double alpha, double b, const quadrature_spec& spec = {}) {
    if (!(alpha > 2.0)) throw std::invalid_argument("j_integral: alpha must be > 2");
    if (b < 0.0) throw std::invalid_argument("j_integral: b must be >= 0");
    if (b == 0.0) return {pi / (alpha * std::sin(2.0 * pi / alpha)), 0.0, 0};
    auto f = [alpha, b](double u) {
        if (u <= 0.0) return 0.0;
        const double e = std::exp(-b * u);
        if (e == 0.0) return 0.0;
        return e * u / (std::pow(u, alpha) + 1.0);
    };
    return integrate_semi_infinite(f, 0.0, spec);
}

namespace detail {

// s^{2/alpha} J(alpha, beta s^{1/alpha}): the shot-noise exponent of a
// Rayleigh-faded field thinned by exp(-beta r), at Laplace variable s.
inline double lap_exponent_term(double s, double alpha, double beta, const quadrature_spec& spec,
                                long& evals) {
    if (s <= 0.0) return 0.0;
    analytic_result j = j_integral(alpha, beta * std::pow(s, 1.0 / alpha), spec);
    evals += j.evaluations;
    return std::pow(s, 2.0 / alpha) * j.value;
}

inline void check_probability(const analytic_result& r, const char* who) {
    const double slack = std::max(r.error_estimate, 1e-9);
    if (r.value < -slack || r.value > 1.0 + slack)
        throw std::runtime_error(std::string(who) + ": probability outside [0,1] beyond the error estimate");
}

} // namespace detail

// Laplace functional of the distance-normalized LOS interference field
// with per-direction thinning 1/(n_bs n_ue).
inline analytic_result laplace_los(double s, const system_params& p, const quadrature_spec& spec = {}) {
    if (s < 0.0) throw std::invalid_argument("laplace_los: s must be >= 0");
    const double mu = 2.0 * pi / (p.n_bs * p.n_ue);
    long evals = 0;
    quadrature_spec inner = spec.tightened();
    const double expo = detail::lap_exponent_term(s, p.alpha_los, p.beta, inner, evals);
    return {std::exp(-mu * p.lambda_bs * expo), 0.0, evals};
}

// Laplace functional including NLOS propagation; s is in physical units and
// the path-gain constants ride inside the exponent.
inline analytic_result laplace_nlos(double s, const system_params& p, const quadrature_spec& spec = {}) {
    if (s < 0.0) throw std::invalid_argument("laplace_nlos: s must be >= 0");
    if (std::isinf(p.alpha_nlos)) return laplace_los(s * p.k_los(), p, spec);
    const double mu = 2.0 * pi / (p.n_bs * p.n_ue);
    long evals = 0;
    quadrature_spec inner = spec.tightened();
    const double tl = detail::lap_exponent_term(s * p.k_los(), p.alpha_los, p.beta, inner, evals);
    double tn = 0.0;
    if (s > 0.0) {
        const double sn = s * p.k_nlos();
        analytic_result j0 = j_integral(p.alpha_nlos, 0.0, inner);
        analytic_result jb =
            j_integral(p.alpha_nlos, p.beta * std::pow(sn, 1.0 / p.alpha_nlos), inner);
        evals += j0.evaluations + jb.evaluations;
        tn = std::pow(sn, 2.0 / p.alpha_nlos) * (j0.value - jb.value);
    }
    return {std::exp(-mu * p.lambda_bs * (tl + tn)), 0.0, evals};
}

// Detection-failure probability over n_c mini-slots, LOS-only propagation,
// full beamforming gains, no sidelobes.
inline analytic_result failure_prob_los(const system_params& p, const quadrature_spec& spec = {}) {
    validate(p);
    const double mu = 2.0 * pi / (p.n_bs * p.n_ue);
    const double sigma2 = noise_power_normalized(p, false, true);
    const double T = p.sinr_threshold;
    const double alpha = p.alpha_los;
    quadrature_spec inner = spec.tightened();
    long inner_evals = 0;
    auto f = [&](double r) {
        if (r <= 0.0) return 0.0;
        const double s = T * std::pow(r, alpha);
        const double noise = std::exp(-s * sigma2);
        if (noise == 0.0) return 0.0;
        const double expo = detail::lap_exponent_term(s, alpha, p.beta, inner, inner_evals);
        return noise * std::exp(-mu * p.lambda_bs * expo) * std::exp(-p.beta * r) * r;
    };
    integral_result outer = integrate_expanding(f, 0.0, 25.0, spec);
    const double ps = mu * p.lambda_bs * outer.value;
    const double ps_err = mu * p.lambda_bs * outer.error_estimate;
    analytic_result res;
    res.value = std::pow(1.0 - ps, p.n_c);
    res.error_estimate = p.n_c * std::pow(std::fabs(1.0 - ps), p.n_c - 1) * ps_err;
    res.evaluations = outer.evaluations + inner_evals;
    detail::check_probability(res, "failure_prob_los");
    return res;
}

// Detection failure with finite-exponent NLOS links carrying both signal and
// interference. With alpha_nlos = alpha_los blockage cancels entirely and the
// result equals failure_prob_los at beta = 0 (unit-tested identity).
inline analytic_result failure_prob_nlos(const system_params& p, const quadrature_spec& spec = {}) {
    validate(p);
    if (std::isinf(p.alpha_nlos)) return failure_prob_los(p, spec);
    const double mu = 2.0 * pi / (p.n_bs * p.n_ue);
    const double w = p.noise_control_w();
    const double sigma2 = w / (p.p_bs_control * p.n_ue * p.n_bs); // exponents ride in s
    const double T = p.sinr_threshold;
    const double k_l = p.k_los(), k_n = p.k_nlos();
    quadrature_spec inner = spec.tightened();
    long inner_evals = 0;
    auto lap = [&](double s) {
        const double tl = detail::lap_exponent_term(s * k_l, p.alpha_los, p.beta, inner, inner_evals);
        double tn = 0.0;
        if (s > 0.0) {
            const double sn = s * k_n;
            analytic_result j0 = j_integral(p.alpha_nlos, 0.0, inner);
            analytic_result jb =
                j_integral(p.alpha_nlos, p.beta * std::pow(sn, 1.0 / p.alpha_nlos), inner);
            inner_evals += j0.evaluations + jb.evaluations;
            tn = std::pow(sn, 2.0 / p.alpha_nlos) * (j0.value - jb.value);
        }
        return std::exp(-mu * p.lambda_bs * (tl + tn));
    };
    auto f = [&](double r) {
        if (r <= 0.0) return 0.0;
        const double p_los = std::exp(-p.beta * r);
        const double s_l = T * std::pow(r, p.alpha_los) / k_l;
        const double s_n = T * std::pow(r, p.alpha_nlos) / k_n;
        double acc = 0.0;
        const double noise_l = std::exp(-s_l * sigma2);
        if (noise_l > 0.0) acc += noise_l * lap(s_l) * p_los;
        const double noise_n = std::exp(-s_n * sigma2);
        if (noise_n > 0.0 && p_los < 1.0) acc += noise_n * lap(s_n) * (1.0 - p_los);
        return acc * r;
    };
    integral_result outer = integrate_expanding(f, 0.0, 25.0, spec);
    const double ps = mu * p.lambda_bs * outer.value;
    analytic_result res;
    res.value = std::pow(1.0 - ps, p.n_c);
    res.error_estimate =
        p.n_c * std::pow(std::fabs(1.0 - ps), p.n_c - 1) * mu * p.lambda_bs * outer.error_estimate;
    res.evaluations = outer.evaluations + inner_evals;
    detail::check_probability(res, "failure_prob_nlos");
    return res;
}

// Two-tier Laplace functional under sector patterns: the aligned tier sees
// the mainlobe gain, the rest of the field leaks through epsilon sidelobes.
inline analytic_result laplace_sectors(double s, const system_params& p, double eps,
                                       const quadrature_spec& spec = {}) {
    if (s < 0.0) throw std::invalid_argument("laplace_sectors: s must be >= 0");
    const double th_bs = p.theta_bs(), th_ue = p.theta_ue();
    const double g_main = sector_mainlobe_gain(th_bs, eps);
    long evals = 0;
    quadrature_spec inner = spec.tightened();
    double total = 0.0;
    const double tiers[2][2] = {{g_main, p.lambda_bs * th_bs / (2.0 * pi)},
                                {eps, p.lambda_bs * (2.0 * pi - th_bs) / (2.0 * pi)}};
    for (const auto& t : tiers) {
        if (t[0] <= 0.0 || t[1] <= 0.0) continue;
        total += t[1] * detail::lap_exponent_term(s * t[0], p.alpha_los, p.beta, inner, evals);
    }
    return {std::exp(-th_ue * total), 0.0, evals};
}

// Success probability through an aligned mainlobe pair in one mini-slot,
// serving gain explicit, LOS-only.
inline analytic_result mainlobe_success(const system_params& p, const quadrature_spec& spec = {}) {
    const double th_bs = p.theta_bs(), th_ue = p.theta_ue();
    const double g_main = sector_mainlobe_gain(th_bs, p.epsilon);
    const double sigma_nn = p.noise_control_w() / (p.p_bs_control * p.n_ue * p.k_los());
    const double T = p.sinr_threshold;
    long inner_evals = 0;
    auto f = [&](double r) {
        if (r <= 0.0) return 0.0;
        const double s = T * std::pow(r, p.alpha_los) / g_main;
        const double noise = std::exp(-s * sigma_nn);
        if (noise == 0.0) return 0.0;
        analytic_result lap = laplace_sectors(s, p, p.epsilon, spec);
        inner_evals += lap.evaluations;
        return noise * lap.value * std::exp(-p.beta * r) * r;
    };
    integral_result outer = integrate_expanding(f, 0.0, 25.0, spec);
    analytic_result res;
    res.value = th_ue * (th_bs / (2.0 * pi)) * p.lambda_bs * outer.value;
    res.error_estimate = th_ue * (th_bs / (2.0 * pi)) * p.lambda_bs * outer.error_estimate;
    res.evaluations = outer.evaluations + inner_evals;
    return res;
}

namespace detail {

// V(r, n) = int_0^inf (1 - (1 - x)^n) 2 w dw with
// x = exp(-beta w r T^{1/alpha}) / (1 + w^alpha).
inline analytic_result v_sidelobe(double r, int n, const system_params& p,
                                  const quadrature_spec& spec) {
    const double r_t = r * std::pow(p.sinr_threshold, 1.0 / p.alpha_los);
    const double alpha = p.alpha_los;
    const double beta = p.beta;
    auto f = [=](double w) {
        if (w < 0.0) return 0.0;
        const double x = std::exp(-beta * w * r_t) / (1.0 + std::pow(w, alpha));
        // 1 - (1-x)^n without cancellation for small x
        const double one_minus = x >= 1.0 ? 1.0 : -std::expm1(n * std::log1p(-x));
        return one_minus * 2.0 * w;
    };
    return integrate_semi_infinite(f, 0.0, spec);
}

} // namespace detail

// Inclusion-exclusion combination over k of the joint k-slot sidelobe
// success terms; alternating binomial sums are numerically untrustworthy
// past n = 20 and are refused rather than silently degraded.
inline double q_selection(const std::vector<double>& joint_slot_terms) {
    const int n = static_cast<int>(joint_slot_terms.size());
    if (n > 20) throw std::domain_error("q_selection: alternating sum unstable for n > 20");
    kahan_sum acc;
    double comb = 1.0; // C(n, k), updated multiplicatively
    for (int k = 1; k <= n; ++k) {
        comb *= static_cast<double>(n - k + 1) / static_cast<double>(k);
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        acc.add(sign * comb * joint_slot_terms[static_cast<std::size_t>(k - 1)]);
    }
    return acc.value();
}

// Expected number of sidelobe-tier BSs detected in at least one of n
// selection slots (pre-detection slots of the scan); clamped to [0,1] as a
// probability surrogate -- the expected-count form can exceed 1.
inline analytic_result sidelobe_success(const system_params& p, int n,
                                        const quadrature_spec& spec = {}) {
    analytic_result res;
    if (n <= 0 || p.epsilon <= 0.0) return res;
    if (n > 20) throw std::domain_error("sidelobe_success: alternating sum unstable for n > 20");
    const double th_bs = p.theta_bs(), th_ue = p.theta_ue();
    const double eps = p.epsilon;
    const double g_main = sector_mainlobe_gain(th_bs, eps);
    const double sigma_nn = p.noise_control_w() / (p.p_bs_control * p.n_ue * p.k_los());
    const double T = p.sinr_threshold;
    const double alpha = p.alpha_los;
    quadrature_spec inner = spec.tightened();
    long inner_evals = 0;
    auto q_of_r = [&](double r) {
        const double delta = T * std::pow(r, alpha) / eps * sigma_nn;
        const double s_b = std::pow(T * (g_main - eps) / eps, 1.0 / alpha) * r;
        analytic_result jb = j_integral(alpha, p.beta * s_b, inner);
        inner_evals += jb.evaluations;
        const double b_main =
            std::exp(-th_ue * (th_bs / (2.0 * pi)) * p.lambda_bs * s_b * s_b * jb.value);
        std::vector<double> joint(static_cast<std::size_t>(n));
        for (int k = 1; k <= n; ++k) {
            analytic_result v = detail::v_sidelobe(r, k, p, inner);
            inner_evals += v.evaluations;
            const double a_side = std::exp(-0.5 * th_ue * p.lambda_bs * r * r *
                                           std::pow(T, 2.0 / alpha) * v.value);
            joint[static_cast<std::size_t>(k - 1)] =
                a_side * std::pow(b_main, k) * std::exp(-k * delta);
        }
        return q_selection(joint);
    };
    auto f = [&](double r) {
        if (r <= 0.0) return 0.0;
        return q_of_r(r) * std::exp(-p.beta * r) * r;
    };
    integral_result outer = integrate_expanding(f, 0.0, 25.0, spec);
    const double pref = th_ue * ((2.0 * pi - th_bs) / (2.0 * pi)) * p.lambda_bs;
    res.value = std::min(std::max(pref * outer.value, 0.0), 1.0);
    res.error_estimate = pref * outer.error_estimate;
    res.evaluations = outer.evaluations + inner_evals;
    return res;
}

// Detection failure under sector patterns with epsilon sidelobes: mainlobe
// alignment can succeed in each of the n_c slots, and sidelobe leakage can
// capture the UE in the selection slots before alignment (default n_c - 1).
inline analytic_result failure_prob_sidelobe(const system_params& p,
                                             const quadrature_spec& spec = {},
                                             int selection_slots = -1) {
    validate(p);
    const int n = selection_slots < 0 ? p.n_c - 1 : selection_slots;
    analytic_result main = mainlobe_success(p, spec);
    analytic_result side = sidelobe_success(p, n, spec);
    analytic_result res;
    res.value = (1.0 - side.value) * std::pow(1.0 - main.value, p.n_c);
    res.error_estimate =
        side.error_estimate +
        p.n_c * std::pow(std::fabs(1.0 - main.value), p.n_c - 1) * main.error_estimate;
    res.evaluations = main.evaluations + side.evaluations;
    detail::check_probability(res, "failure_prob_sidelobe");
    res.value = std::min(std::max(res.value, 0.0), 1.0);
    return res;
}

struct calibration_result {
    double epsilon = 0.0;
    double residual_rms = 0.0;
    bool converged = false;
    long evaluations = 0;
};

// Fit the sidelobe gain to measured (density, failure) anchors by 1-D
// least-squares. The fitted value is reported, never baked into defaults.
inline calibration_result calibrate_epsilon(system_params p,
                                            const std::vector<std::pair<double, double>>& anchors,
                                            double residual_threshold = 5e-3,
                                            const quadrature_spec& spec = {}) {
    if (anchors.size() < 2)
        throw std::invalid_argument("calibrate_epsilon: need at least two anchors");
    calibration_result out;
    long evals = 0;
    auto objective = [&](double eps) {
        p.epsilon = eps;
        double sq = 0.0;
        for (const auto& [lam, target] : anchors) {
            p.lambda_bs = lam;
            analytic_result r = failure_prob_sidelobe(p, spec);
            evals += r.evaluations;
            sq += (r.value - target) * (r.value - target);
        }
        return sq;
    };
    // Coarse scan to bracket the global minimum, then golden refinement;
    // the squared-residual landscape need not be unimodal end to end.
    const double lo = 1e-3;
    const double hi = 0.95 * std::min(1.0, sector_mainlobe_gain(p.theta_bs(), 0.0));
    const int n_scan = 16;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> grid(n_scan);
    for (int i = 0; i < n_scan; ++i) {
        grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * (i + 0.5) / n_scan;
        const double v = objective(grid[static_cast<std::size_t>(i)]);
        if (v < best_val) { best_val = v; best = i; }
    }
    const double b_lo = best > 0 ? grid[static_cast<std::size_t>(best - 1)] : lo;
    const double b_hi = best < n_scan - 1 ? grid[static_cast<std::size_t>(best + 1)] : hi;
    const double eps_star = minimize_scalar(objective, b_lo, b_hi, 1e-7);
    out.epsilon = eps_star;
    out.residual_rms = std::sqrt(objective(eps_star) / static_cast<double>(anchors.size()));
    out.converged = out.residual_rms <= residual_threshold;
    out.evaluations = evals;
    return out;
}

} // namespace beamscan
