#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace beamscan {

struct quadrature_spec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    // Relative size at which an expansion chunk counts as exhausted tail.
    double truncation_cut = 1e-14;
    int max_subdivisions = 4000;

    quadrature_spec tightened(double factor = 0.1) const {
        quadrature_spec s = *this;
        s.abs_tol *= factor;
        s.rel_tol *= factor;
        return s;
    }
};

struct integral_result {
    double value = 0.0;
    double error_estimate = 0.0;
    long evaluations = 0;
};

namespace detail {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1] (positive half).
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double gk_weights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gauss_weights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct segment {
    double a, b, value, error;
    bool operator<(const segment& o) const { return error < o.error; }
};

template <typename F>
segment gk15(const F& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(mid - half * gk_nodes[i]);
        fv[14 - i] = f(mid + half * gk_nodes[i]);
    }
    fv[7] = f(mid);
    double kronrod = 0.0, gauss = 0.0, resabs = 0.0;
    for (int i = 0; i < 7; ++i) {
        kronrod += gk_weights[i] * (fv[i] + fv[14 - i]);
        resabs += gk_weights[i] * (std::fabs(fv[i]) + std::fabs(fv[14 - i]));
    }
    kronrod += gk_weights[7] * fv[7];
    resabs += gk_weights[7] * std::fabs(fv[7]);
    for (int i = 0; i < 4; ++i) {
        int j = 2 * i + 1;
        gauss += gauss_weights[i] * (j == 7 ? fv[7] : fv[j] + fv[14 - j]);
    }
    const double mean = 0.5 * kronrod;
    double resasc = gk_weights[7] * std::fabs(fv[7] - mean);
    for (int i = 0; i < 7; ++i)
        resasc += gk_weights[i] * (std::fabs(fv[i] - mean) + std::fabs(fv[14 - i] - mean));
    resasc *= half;
    resabs *= half;
    double err = std::fabs((kronrod - gauss) * half);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps_floor = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    if (eps_floor > 0.0) err = std::max(err, eps_floor);
    return {a, b, kronrod * half, err};
}

} // namespace detail

// Adaptive bisection with a worst-segment-first queue.
template <typename F>
integral_result integrate_adaptive(const F& f, double a, double b, const quadrature_spec& spec = {}) {
    integral_result res;
    if (a == b) return res;
    std::priority_queue<detail::segment> heap;
    heap.push(detail::gk15(f, a, b));
    res.evaluations = 15;
    double total = heap.top().value;
    double err = heap.top().error;
    int splits = 0;
    while (err > std::max(spec.abs_tol, spec.rel_tol * std::fabs(total)) &&
           splits < spec.max_subdivisions) {
        detail::segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) { // segment at machine resolution
            heap.push(worst);
            break;
        }
        detail::segment left = detail::gk15(f, worst.a, mid);
        detail::segment right = detail::gk15(f, mid, worst.b);
        res.evaluations += 30;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++splits;
    }
    res.value = total;
    res.error_estimate = err;
    return res;
}

// integral over [a, inf) via the rational map x = a + t/(1-t).
template <typename F>
integral_result integrate_semi_infinite(const F& f, double a, const quadrature_spec& spec = {}) {
    auto mapped = [&](double t) {
        if (t >= 1.0) return 0.0;
        const double om = 1.0 - t;
        const double x = a + t / om;
        const double jac = 1.0 / (om * om);
        const double v = f(x) * jac;
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate_adaptive(mapped, 0.0, 1.0, spec);
}

// integral over [a, inf) by doubling expansion; each chunk is resolved
// adaptively, and the tail is declared exhausted once two consecutive chunks
// fall below truncation_cut of the running total.
template <typename F>
integral_result integrate_expanding(const F& f, double a, double initial_width,
                                    const quadrature_spec& spec = {}) {
    if (!(initial_width > 0.0)) throw std::invalid_argument("integrate_expanding: width must be > 0");
    integral_result res;
    double lo = a;
    double width = initial_width;
    int small_chunks = 0;
    for (int chunk = 0; chunk < 80; ++chunk) {
        integral_result part = integrate_adaptive(f, lo, lo + width, spec);
        res.value += part.value;
        res.error_estimate += part.error_estimate;
        res.evaluations += part.evaluations;
        const double scale = std::max(std::fabs(res.value), spec.abs_tol);
        if (chunk >= 1 && std::fabs(part.value) <= spec.truncation_cut * scale) {
            if (++small_chunks >= 2) break;
        } else {
            small_chunks = 0;
        }
        lo += width;
        width *= 2.0;
    }
    return res;
}

// Bounded scalar minimization by golden-section with parabolic refinement.
template <typename F>
double minimize_scalar(const F& f, double lo, double hi, double xatol = 1e-8, int max_iter = 200) {
    const double gr = 0.6180339887498949; // 1/phi
    double a = lo, b = hi;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < max_iter && (b - a) > xatol; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

} // namespace beamscan
